"""
FEXP spectral densities and the constants built on them.

Conventions: f_{d,k,theta}(x) = (2 - 2 cos x)^(-d) exp(sum_j theta_j cos jx) and
-log(2 - 2 cos x) = sum_{j>=1} (2/j) cos jx = -sum_j eta_j cos jx, so the
cosine coefficients of log f are theta_j - d eta_j.
"""

import math
from typing import Iterable, Optional

import numpy as np
from loguru import logger
from scipy import special

from fexpd.core.exceptions import ConfigurationError, DomainError
from fexpd.core.models.config import PriorKind, QuadratureConfig
from fexpd.core.models.spectral import FexpModel, RateConstants, TruthSpec
from fexpd.core.quadrature import integrate_refined

# Above this many coefficients the cosine sum is evaluated in blocks.
_CLENSHAW_MAX = 256
_BLOCK_ELEMENTS = 1 << 22


def eta(j: int) -> float:
    if j < 0:
        raise DomainError(message=f"eta is defined for j >= 0, got {j}")
    return 0.0 if j == 0 else -2.0 / j


def eta_vector(k: int) -> np.ndarray:
    """eta_0..eta_k."""
    out = np.zeros(k + 1)
    if k > 0:
        out[1:] = -2.0 / np.arange(1, k + 1)
    return out


def r_tail(k: int) -> float:
    """sum_{j>k} eta_j^2 = 4 zeta(2, k+1)."""
    if k < 0:
        raise DomainError(message=f"r_tail is defined for k >= 0, got {k}")
    return 4.0 * float(special.zeta(2.0, k + 1.0))


def fisher_information_d(n: int, k: int) -> float:
    """Information for d at order k once theta_0..theta_k are profiled out."""
    return n * r_tail(k) / 4.0


def theta_sobolev_exponent(kind: PriorKind, beta: float) -> float:
    return beta - 0.5 if kind == PriorKind.A else beta


def cosine_series(coefficients: np.ndarray, x: np.ndarray) -> np.ndarray:
    """sum_j c_j cos(j x), vectorised over x."""
    c = np.asarray(coefficients, dtype=float)
    x = np.asarray(x, dtype=float)
    if len(c) <= _CLENSHAW_MAX:
        return np.polynomial.chebyshev.chebval(np.cos(x), c)

    flat = x.ravel()
    out = np.zeros(flat.shape)
    block = max(1, _BLOCK_ELEMENTS // max(1, flat.size))
    for start in range(0, len(c), block):
        j = np.arange(start, min(start + block, len(c)))
        out += np.cos(np.outer(flat, j)) @ c[j]
    return out.reshape(x.shape)


def log_abs_transfer(x: np.ndarray) -> np.ndarray:
    """log(2 - 2 cos x), written as 2 log|2 sin(x/2)| to keep precision near 0."""
    with np.errstate(divide="ignore"):
        return 2.0 * np.log(np.abs(2.0 * np.sin(0.5 * np.asarray(x, dtype=float))))


def log_fexp(model: FexpModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    value = cosine_series(model.coefficients, x)
    if model.d != 0.0:
        if model.d > 0 and np.any(x == 0.0):
            raise DomainError(
                message="FEXP density is singular at x = 0 for d > 0",
                detail={"d": model.d},
            )
        value = value - model.d * log_abs_transfer(x)
    return value


def fexp_eval(model: FexpModel, x) -> np.ndarray | float:
    """
    (2 - 2 cos x)^(-d) exp(sum_{j<=k} theta_j cos jx).

    Raises:
        DomainError: If x = 0 and d > 0.
    """
    value = np.exp(log_fexp(model, x))
    return float(value) if np.ndim(value) == 0 else value


def h_tail_eval(k: int, x, d: Optional[float] = None) -> np.ndarray | float:
    """
    H_k(x) = -log(2 - 2 cos x) - sum_{j=1..k} (2/j) cos jx.

    ``d`` is accepted for signature compatibility and ignored.

    Raises:
        DomainError: At x = 0 (logarithmic singularity).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise DomainError(message="H_k has a logarithmic singularity at x = 0")
    value = -log_abs_transfer(x) + cosine_series(eta_vector(k), x)
    return float(value) if value.ndim == 0 else value


def project_theta(truth: TruthSpec, d: float, k: int) -> np.ndarray:
    """
    The l-projection of f_o onto the order-k slice at long-memory value d:
    theta_bar_j = theta_{o,j} + (d - d_o) eta_j, j = 0..k.
    """
    if not abs(d) < 0.5:
        raise DomainError(message=f"|d| must be < 1/2, got {d}")
    return truth.coefficients(k) + (d - truth.d_o) * eta_vector(k)


def projected_model(truth: TruthSpec, d: float, k: int) -> FexpModel:
    return FexpModel.from_theta(d, project_theta(truth, d, k))


def log_distance_coeff(m1: FexpModel, m2: FexpModel) -> float:
    """1/2 sum_j ((theta_j - theta'_j) - eta_j (d - d'))^2 including the d-tail."""
    k = max(m1.k, m2.k)
    delta_d = m1.d - m2.d
    c = m1.padded(k) - m2.padded(k) - eta_vector(k) * delta_d
    return 0.5 * float(np.dot(c, c)) + 0.5 * delta_d**2 * r_tail(k)


def log_distance_quadrature(
    m1: FexpModel,
    m2: FexpModel,
    grid_size: int = 1024,
    config: Optional[QuadratureConfig] = None,
) -> float:
    """
    (1/2pi) integral of (log f - log g)^2 minus half the squared constant
    mode, so that every cosine mode carries weight 1/2.

    Raises:
        DomainError: If grid_size < 1024.
        QuadratureError: If the refinement loop does not converge.
    """
    if grid_size < 1024:
        raise DomainError(message=f"grid_size must be >= 1024, got {grid_size}")
    config = config or QuadratureConfig()
    k = max(m1.k, m2.k)
    delta_theta = m1.padded(k) - m2.padded(k)
    delta_d = m1.d - m2.d

    def integrand(x: np.ndarray) -> np.ndarray:
        diff = cosine_series(delta_theta, x) - delta_d * log_abs_transfer(x)
        return np.stack([diff**2, diff], axis=-1)

    squared, linear = integrate_refined(
        integrand, config, panels=grid_size // config.order
    ) / np.pi
    return max(0.0, float(squared - 0.5 * linear**2))


def sobolev_seminorm(theta, beta: float) -> float:
    """sum_j theta_j^2 (1 + j)^(2 beta)."""
    if beta <= 0:
        raise DomainError(message=f"beta must be > 0, got {beta}")
    theta = np.asarray(theta, dtype=float)
    j = np.arange(len(theta))
    return float(np.sum(theta**2 * (1.0 + j) ** (2 * beta)))


def bias_term(truth: TruthSpec, k: int) -> float:
    """
    Deterministic offset of the posterior center at order k:
    -(1/r_k) sum_{j>k} eta_j theta_{o,j}.
    """
    return truth.eta_tail_sum(k) / r_tail(k)


def _effective_n(n: int) -> float:
    return n / math.log(n)


def sieve_sizes(n: int, beta: float, k_A: float, k_B: float) -> tuple[int, int]:
    m = _effective_n(n)
    k_n = math.floor(k_A * m ** (1.0 / (2.0 * beta)))
    k_n_prime = math.floor(k_B * m ** (1.0 / (1.0 + 2.0 * beta)))
    return k_n, k_n_prime


def default_k_B(n_grid: Iterable[int], beta: float, k_A: float) -> float:
    """Largest k_B with k'_n < k_n at every n of the grid."""
    candidates = []
    for n in n_grid:
        m = _effective_n(n)
        k_n = math.floor(k_A * m ** (1.0 / (2.0 * beta)))
        candidates.append(k_n / m ** (1.0 / (1.0 + 2.0 * beta)))
    k_B = min(candidates) * (1.0 - 1e-9)
    if k_B <= 0:
        raise ConfigurationError(
            message="no positive k_B keeps k'_n < k_n; increase k_A or n",
            detail={"beta": beta, "k_A": k_A},
        )
    return k_B


def _delta_n(n: int, beta: float) -> float:
    return _effective_n(n) ** (-(2 * beta - 1) / (4 * beta))


def _vbar_n(n: int, beta: float, L: float, L_o: float, l_0: float, C_1: float) -> float:
    return (
        C_1
        * (L + L_o) ** (1.0 / (4 * beta - 2))
        * l_0 ** ((2 * beta - 2) / (2 * beta - 1))
        * _effective_n(n) ** (-(beta - 1) / (2 * beta))
    )


def rate_constants(
    n: int,
    beta: float,
    prior_kind: PriorKind = PriorKind.A,
    k_A: float = 1.0,
    k_B: Optional[float] = None,
    t: float = 0.05,
    L: float = 1.0,
    L_o: float = 1.0,
    l_0: float = 1.0,
    C_1: float = 1.0,
) -> RateConstants:
    """
    Sieve sizes and rate scales at sample size n.

    Raises:
        ConfigurationError: If k_n < 1 or k'_n >= k_n.
    """
    if n < 8:
        raise ConfigurationError(message=f"n must be >= 8, got {n}")
    if beta <= 1:
        raise ConfigurationError(message=f"beta must be > 1, got {beta}")
    if not 0 < t < 0.5:
        raise ConfigurationError(message=f"t must lie in (0, 1/2), got {t}")
    if k_B is None:
        k_B = default_k_B([n], beta, k_A)

    k_n, k_n_prime = sieve_sizes(n, beta, k_A, k_B)
    if k_n < 1:
        raise ConfigurationError(
            message=f"k_n={k_n} < 1 at n={n}; increase k_A",
            detail={"n": n, "k_A": k_A},
        )
    if k_n_prime >= k_n:
        raise ConfigurationError(
            message=f"k'_n={k_n_prime} must be < k_n={k_n} at n={n} (prior {prior_kind})",
            detail={"n": n, "k_B": k_B},
        )

    m = _effective_n(n)
    return RateConstants(
        n=n,
        beta=beta,
        k_A=k_A,
        k_B=k_B,
        t=t,
        L=L,
        L_o=L_o,
        l_0=l_0,
        C_1=C_1,
        k_n=k_n,
        k_n_prime=k_n_prime,
        delta_n=_delta_n(n, beta),
        eps_n=m ** (-beta / (2 * beta + 1)),
        vbar_n=_vbar_n(n, beta, L, L_o, l_0, C_1),
        w_n=(
            C_1
            * (L + L_o) ** (1.0 / (4 * beta))
            * l_0 ** ((2 * beta - 1) / (2 * beta))
            * m ** (-(2 * beta - 1) / (4 * beta + 2))
        ),
    )


def sobolev_radius_bound(
    truth: TruthSpec,
    n: int,
    k_A: float = 1.0,
    L: float = 1.0,
    l_0: float = 1.0,
    C_1: float = 1.0,
) -> float:
    """
    Radius R such that every theta in the ball of radius 2 l_0 delta_n around
    theta_bar_{d,k_n}, with |d - d_o| <= vbar_n, has (beta - 1/2) seminorm <= R.
    """
    beta = truth.beta
    m = _effective_n(n)
    k = math.floor(k_A * m ** (1.0 / (2.0 * beta)))
    delta = _delta_n(n, beta)
    vbar = _vbar_n(n, beta, L, truth.L_o, l_0, C_1)
    weights = (1.0 + np.arange(k + 1)) ** (2 * beta - 1)
    ball = 8.0 * l_0**2 * delta**2 * (k + 1) ** (2 * beta - 1)
    center = 4.0 * float(np.sum(truth.coefficients(k) ** 2 * weights))
    shift = 4.0 * vbar**2 * float(np.sum(eta_vector(k) ** 2 * weights))
    return ball + center + shift


def default_sobolev_radius(
    truth: TruthSpec,
    n: int,
    k_A: float = 1.0,
    l_0: float = 1.0,
    C_1: float = 1.0,
    factor: float = 4.0,
    max_iter: int = 200,
) -> float:
    """
    Fixed point L = factor * sobolev_radius_bound(L). The bound grows like
    (L + L_o)^(1/(2 beta - 1)), so the iteration contracts for beta > 1.
    """
    L = truth.L_o
    for _ in range(max_iter):
        updated = factor * sobolev_radius_bound(truth, n, k_A, L, l_0, C_1)
        if abs(updated - L) <= 1e-10 * updated:
            logger.debug(f"default Sobolev radius at n={n}: L={updated:.6g}")
            return updated
        L = updated
    raise ConfigurationError(
        message="Sobolev radius fixed point did not converge", detail={"n": n, "L": L}
    )
