import math

import numpy as np
import pytest

from fexpd.core.exceptions import ConfigurationError, DomainError
from fexpd.core.models.config import PriorKind
from fexpd.core.models.spectral import FexpModel, TruthSpec
from fexpd.core.spectral import (
    bias_term,
    default_k_B,
    default_sobolev_radius,
    eta,
    eta_vector,
    fexp_eval,
    fisher_information_d,
    h_tail_eval,
    log_distance_coeff,
    log_distance_quadrature,
    project_theta,
    r_tail,
    rate_constants,
    sieve_sizes,
    sobolev_radius_bound,
    sobolev_seminorm,
    theta_sobolev_exponent,
)

N_GRID = [512, 1024, 2048, 4096, 8192]


def test_eta():
    assert eta(0) == 0.0
    assert eta(1) == -2.0
    assert eta(4) == -0.5
    np.testing.assert_allclose(eta_vector(3), [0.0, -2.0, -1.0, -2.0 / 3.0])
    with pytest.raises(DomainError):
        eta(-1)


def test_r_tail_and_fisher():
    assert r_tail(0) == pytest.approx(2.0 * math.pi**2 / 3.0)
    assert r_tail(1) == pytest.approx(4.0 * (math.pi**2 / 6.0 - 1.0))
    # classical ARFIMA(0, d, 0) information
    assert fisher_information_d(1000, 0) == pytest.approx(1000 * math.pi**2 / 6.0)
    assert r_tail(10) < r_tail(5)


def test_theta_sobolev_exponent():
    assert theta_sobolev_exponent(PriorKind.A, 3.0) == 2.5
    assert theta_sobolev_exponent(PriorKind.B, 3.0) == 3.0
    assert theta_sobolev_exponent(PriorKind.C, 3.0) == 3.0


def test_fexp_eval_matches_formula():
    model = FexpModel.from_theta(0.3, [0.2, -0.4])
    x = np.array([0.1, 1.0, 2.5, math.pi])
    expected = (2.0 - 2.0 * np.cos(x)) ** -0.3 * np.exp(0.2 - 0.4 * np.cos(x))
    np.testing.assert_allclose(fexp_eval(model, x), expected, rtol=1e-12)


def test_fexp_eval_at_zero():
    with pytest.raises(DomainError):
        fexp_eval(FexpModel.from_theta(0.2, [0.0]), 0.0)
    assert fexp_eval(FexpModel.from_theta(-0.2, [0.0]), 0.0) == 0.0
    assert fexp_eval(FexpModel.from_theta(0.0, [0.5]), 0.0) == pytest.approx(
        math.exp(0.5)
    )


def test_h_tail_eval():
    x = np.array([0.3, 1.0, 2.0])
    expected = -np.log(2 - 2 * np.cos(x)) - 2 * np.cos(x) - np.cos(2 * x)
    np.testing.assert_allclose(h_tail_eval(2, x), expected, rtol=1e-12)
    with pytest.raises(DomainError):
        h_tail_eval(2, 0.0)


def test_project_theta_example():
    truth = TruthSpec(d_o=0.0, beta=3.0)
    np.testing.assert_allclose(project_theta(truth, 0.1, 2), [0.0, -0.2, -0.1])


def test_project_theta_minimises_distance(fexp_truth):
    d, k = 0.3, 3
    best = FexpModel.from_theta(d, project_theta(fexp_truth, d, k))
    truth = FexpModel.from_theta(fexp_truth.d_o, fexp_truth.coefficients(k))
    base = log_distance_coeff(truth, best)
    rng = np.random.default_rng(0)
    for _ in range(20):
        step = 0.01 * rng.standard_normal(k + 1)
        other = FexpModel.from_theta(d, best.coefficients + step)
        assert log_distance_coeff(truth, other) > base


def test_log_distance_coeff_examples():
    assert log_distance_coeff(
        FexpModel.from_theta(0.0, [1.0]), FexpModel.from_theta(0.0, [0.0])
    ) == pytest.approx(0.5)
    assert log_distance_coeff(
        FexpModel.from_theta(0.1, [0.0]), FexpModel.from_theta(0.0, [0.0])
    ) == pytest.approx(0.5 * 0.01 * r_tail(0))


@pytest.mark.parametrize(
    "m1, m2",
    [
        (FexpModel.from_theta(0.0, [1.0]), FexpModel.from_theta(0.0, [0.0])),
        (
            FexpModel.from_theta(0.2, [0.1, 0.3, -0.2]),
            FexpModel.from_theta(0.05, [0.0, 0.1]),
        ),
        (
            FexpModel.from_theta(-0.1, list(0.1 / np.arange(1, 17))),
            FexpModel.from_theta(0.15, [0.2] * 9),
        ),
    ],
)
def test_log_distance_quadrature_agrees(m1, m2):
    assert log_distance_quadrature(m1, m2) == pytest.approx(
        log_distance_coeff(m1, m2), rel=1e-5, abs=1e-8
    )


def test_log_distance_quadrature_grid_floor(fexp_model):
    with pytest.raises(DomainError):
        log_distance_quadrature(fexp_model, fexp_model, grid_size=512)


def test_sobolev_seminorm():
    assert sobolev_seminorm([1.0, 1.0], 1.0) == pytest.approx(5.0)
    with pytest.raises(DomainError):
        sobolev_seminorm([1.0], 0.0)


def test_bias_term_single_entry():
    truth = TruthSpec(
        d_o=0.1, beta=3.0, rule={"kind": "finite", "coefficients": [0.0, 0.0, 0.01]}
    )
    assert bias_term(truth, 1) == pytest.approx((2 * 0.01 / 2) / r_tail(1))
    assert bias_term(truth, 2) == 0.0


def test_bias_term_power_law_decay(power_truth):
    ks = np.array([4, 8, 16, 32, 64])
    bias = np.array([bias_term(power_truth, k) for k in ks])
    assert np.all(bias > 0)
    assert np.all(np.diff(bias) < 0)
    # bias ~ c k^(1/2 - beta) / log k
    slope = np.polyfit(np.log(ks), np.log(bias * np.log(ks)), 1)[0]
    assert slope == pytest.approx(-(power_truth.beta - 0.5), abs=0.3)


def test_sieve_sizes_over_grid():
    k_B = default_k_B(N_GRID, 3.0, 1.0)
    assert k_B == pytest.approx(0.825, abs=2e-3)
    sizes = [sieve_sizes(n, 3.0, 1.0, k_B) for n in N_GRID]
    assert [k for k, _ in sizes] == [2, 2, 2, 2, 3]
    assert [kp for _, kp in sizes] == [1, 1, 1, 1, 2]


def test_bias_dominance_deterministic(power_truth):
    k_B = default_k_B(N_GRID, 3.0, 1.0)
    for n in N_GRID:
        k_n, k_n_prime = sieve_sizes(n, 3.0, 1.0, k_B)
        assert bias_term(power_truth, k_n_prime) > bias_term(power_truth, k_n)


def test_rate_constants():
    rates = rate_constants(4096, 3.0, L=10.0, L_o=1.0)
    assert rates.k_n == 2
    assert rates.k_n_prime < rates.k_n
    m = 4096 / math.log(4096)
    assert rates.delta_n == pytest.approx(m ** (-5.0 / 12.0))
    assert rates.eps_n == pytest.approx(m ** (-3.0 / 7.0))
    assert 0 < rates.w_n and 0 < rates.vbar_n


def test_rate_constants_rejects_bad_sieves():
    with pytest.raises(ConfigurationError):
        rate_constants(4096, 3.0, k_B=2.0)
    with pytest.raises(ConfigurationError):
        rate_constants(4096, 3.0, k_A=0.1)
    with pytest.raises(ConfigurationError):
        rate_constants(4096, 1.0)


def test_default_sobolev_radius_fixed_point(fexp_truth):
    L = default_sobolev_radius(fexp_truth, 4096)
    assert L == pytest.approx(4.0 * sobolev_radius_bound(fexp_truth, 4096, L=L))
    assert L > 4.0 * sobolev_radius_bound(fexp_truth, 4096, L=fexp_truth.L_o)


def _random_model(rng, max_k: int = 64, d_max: float = 0.45) -> FexpModel:
    k = int(rng.integers(0, max_k + 1))
    scale = 0.3 / (1.0 + np.arange(k + 1))
    return FexpModel.from_theta(rng.uniform(-d_max, d_max), scale * rng.normal(size=k + 1))


def test_fexp_eval_is_even(rng):
    for _ in range(20):
        model = _random_model(rng, max_k=8)
        x = rng.uniform(1e-3, math.pi, 50)
        np.testing.assert_allclose(fexp_eval(model, x), fexp_eval(model, -x), rtol=1e-14)


def test_h_tail_vanishes_at_pi_for_large_k():
    k = 2_000_000
    value = h_tail_eval(k, math.pi)
    assert abs(value) < 1e-6
    # alternating tail of sum 2 (-1)^j / j
    assert abs(value) <= 1.01 / k


@pytest.mark.parametrize("k", [4, 8, 16, 32, 64, 128, 256, 512])
def test_tail_energy_band(k):
    assert 2.0 <= r_tail(k) * k <= 8.0


@pytest.mark.parametrize("k", [4, 16, 64])
def test_tail_energy_quadrature(k):
    d = 0.4
    # log f = d H_k for this model
    scaled = FexpModel.from_theta(d, d * eta_vector(k))
    flat = FexpModel.from_theta(0.0, [0.0])
    energy = 2.0 * math.pi * log_distance_quadrature(scaled, flat) / d**2
    assert energy == pytest.approx(math.pi * r_tail(k), rel=1e-6)
    assert 2.0 * math.pi / k <= energy <= 8.0 * math.pi / k


def test_log_distance_is_a_squared_metric(rng):
    for _ in range(200):
        a, b, c = (_random_model(rng, max_k=12) for _ in range(3))
        ab, bc, ac = (
            math.sqrt(log_distance_coeff(a, b)),
            math.sqrt(log_distance_coeff(b, c)),
            math.sqrt(log_distance_coeff(a, c)),
        )
        assert ac <= ab + bc + 1e-12
        assert log_distance_coeff(a, b) == pytest.approx(log_distance_coeff(b, a))
    model = FexpModel.from_theta(0.1, [0.2, -0.3])
    padded = FexpModel.from_theta(0.1, [0.2, -0.3, 0.0, 0.0])
    assert log_distance_coeff(model, padded) == 0.0


def test_log_distance_forms_agree_on_random_pairs(rng):
    worst = 0.0
    for _ in range(100):
        m1, m2 = _random_model(rng), _random_model(rng)
        gap = abs(log_distance_quadrature(m1, m2) - log_distance_coeff(m1, m2))
        worst = max(worst, gap)
    assert worst <= 1e-6


def test_sobolev_ball_inclusion(power_truth, rng):
    n = 4096
    L = default_sobolev_radius(power_truth, n)
    rates = rate_constants(n, power_truth.beta, L=L, L_o=power_truth.L_o)
    k = rates.k_n
    radius = 2.0 * rates.delta_n
    for _ in range(100):
        shift = rng.uniform(-rates.vbar_n, rates.vbar_n)
        d = float(np.clip(power_truth.d_o + shift, -0.49, 0.49))
        direction = rng.standard_normal(k + 1)
        direction /= np.linalg.norm(direction)
        step = radius * rng.uniform() ** (1.0 / (k + 1)) * direction
        theta = project_theta(power_truth, d, k) + step
        assert sobolev_seminorm(theta, power_truth.beta - 0.5) <= L
