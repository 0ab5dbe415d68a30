import math

import numpy as np
import pytest

from fexpd.core.exceptions import EstimationError
from fexpd.core.inference.evidence import (
    evidence_laplace,
    fd_hessian,
    laplace_log_evidence,
)
from fexpd.core.inference.priors import Prior
from fexpd.core.models.config import PriorConfig


def test_fd_hessian_quadratic():
    precision = np.array([[2.0, 0.5], [0.5, 1.0]])
    x0 = np.array([0.3, -0.1])
    hessian = fd_hessian(lambda x: -0.5 * x @ precision @ x, x0, 1e-3)
    np.testing.assert_allclose(hessian, -precision, atol=1e-6)


def test_laplace_exact_for_gaussian():
    precision = np.array([[4.0, 1.0], [1.0, 3.0]])
    mean = np.array([0.2, -0.4])

    def log_target(x):
        r = x - mean
        return 1.5 - 0.5 * r @ precision @ r

    estimate = laplace_log_evidence(log_target, np.zeros(2))
    expected = 1.5 + math.log(2 * math.pi) - 0.5 * math.log(np.linalg.det(precision))
    assert estimate.hessian_ok
    assert estimate.method == "laplace"
    np.testing.assert_allclose(estimate.mode, mean, atol=1e-5)
    assert estimate.log_evidence == pytest.approx(expected, abs=1e-5)


def test_zero_density_start():
    with pytest.raises(EstimationError):
        laplace_log_evidence(lambda x: -np.inf, np.zeros(1))


def test_fallback_covariance():
    def bowl(x):
        return float(x @ x) if np.all(np.abs(x) < 1.0) else -np.inf

    with pytest.raises(EstimationError):
        laplace_log_evidence(bowl, np.array([0.1]))
    estimate = laplace_log_evidence(bowl, np.array([0.1]), fallback_cov=np.eye(1))
    assert not estimate.hessian_ok
    assert estimate.method == "chain_covariance"


def test_evidence_laplace_narrow_likelihood(white_truth):
    prior = Prior.resolve(PriorConfig(kind="A", L=10.0), 4096, white_truth)
    k = prior.k_sieve
    width = 0.01

    def loglik(d, theta):
        shift = (d - 0.1) ** 2 + float(np.sum(theta**2))
        return -0.5 * shift / width**2

    estimate = evidence_laplace(prior, k, loglik)
    dim = k + 2
    log_prior = prior.log_density(0.1, k, np.zeros(k + 1), include_k=False)
    expected = log_prior + 0.5 * dim * math.log(2 * math.pi) + dim * math.log(width)
    assert estimate.log_evidence == pytest.approx(expected, abs=1e-4)


def test_evidence_penalises_unneeded_coefficients(white_truth):
    config = PriorConfig(kind="C", L=10.0, k_law={"kind": "poisson", "lam": 1.0})
    prior = Prior.resolve(config, 4096, white_truth)
    width = 1e-3

    def loglik(d, theta):
        return -0.5 * (d**2 + float(np.sum(theta**2))) / width**2

    evidences = [evidence_laplace(prior, k, loglik).log_evidence for k in range(4)]
    assert all(later < earlier for earlier, later in zip(evidences, evidences[1:]))
    # each extra coefficient costs its likelihood width relative to the prior
    for k in range(3):
        step = 0.5 * math.log(2 * math.pi) + math.log(width)
        volume = prior.log_normaliser(k + 1) - prior.log_normaliser(k)
        assert evidences[k + 1] - evidences[k] == pytest.approx(step - volume, abs=1e-3)
