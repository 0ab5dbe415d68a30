"""
Priors A, B and C resolved at a sample size.

The theta support is the Sobolev ellipsoid sum_j theta_j^2 (1+j)^(2s) <= L with
s = beta - 1/2 (A) or beta (B, C). Its volume is closed form; the truncated
Gaussian and Laplace families are normalised by a seeded Monte Carlo average
over uniform draws in the ellipsoid.
"""

import math
from functools import lru_cache
from typing import Iterable, List, Optional

import numpy as np
from loguru import logger
from pydantic import TypeAdapter
from scipy import special, stats

from fexpd.core.models.config import (
    GeometricLaw,
    PoissonLaw,
    PriorConfig,
    PriorKind,
    ThetaFamily,
    TruncatedGaussian,
    TruncatedLaplace,
)
from fexpd.core.models.spectral import RateConstants, TruthSpec
from fexpd.core.spectral import (
    default_k_B,
    default_sobolev_radius,
    rate_constants,
    theta_sobolev_exponent,
)
from fexpd.core.utils import make_rng

_FAMILY_ADAPTER = TypeAdapter(ThetaFamily)


def log_ellipsoid_volume(k: int, s: float, L: float) -> float:
    """log volume of {theta in R^(k+1): sum_j theta_j^2 (1+j)^(2s) <= L}."""
    dim = k + 1
    log_ball = 0.5 * dim * math.log(math.pi) - special.gammaln(0.5 * dim + 1.0)
    return (
        log_ball
        + 0.5 * dim * math.log(L)
        - s * float(np.sum(np.log1p(np.arange(dim, dtype=float))))
    )


def uniform_ellipsoid(
    k: int, s: float, L: float, size: int, rng: np.random.Generator
) -> np.ndarray:
    """Uniform draws in the Sobolev ellipsoid, shape (size, k+1)."""
    dim = k + 1
    direction = rng.standard_normal((size, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.uniform(size=(size, 1)) ** (1.0 / dim)
    axes = math.sqrt(L) / (1.0 + np.arange(dim)) ** s
    return direction * radius * axes


def _penalty(family, theta: np.ndarray) -> np.ndarray:
    """Unnormalised -log density of the theta family on its support."""
    theta = np.atleast_2d(theta)
    if isinstance(family, TruncatedGaussian):
        weights = np.arange(theta.shape[1], dtype=float) ** family.alpha
        return family.A_coef * np.sum(weights * theta**2, axis=1)
    if isinstance(family, TruncatedLaplace):
        return family.a * np.sum(np.abs(theta), axis=1)
    return np.zeros(theta.shape[0])


@lru_cache(maxsize=256)
def _log_normaliser(
    family_json: str, k: int, s: float, L: float, samples: int, seed: int
) -> float:
    family = _FAMILY_ADAPTER.validate_json(family_json)
    log_volume = log_ellipsoid_volume(k, s, L)
    if family.kind == "uniform_sobolev":
        return log_volume
    draws = uniform_ellipsoid(k, s, L, samples, make_rng(seed + k))
    log_mean = special.logsumexp(-_penalty(family, draws)) - math.log(samples)
    logger.debug(f"normaliser of {family.kind} at k={k}: log E={log_mean:.6g}")
    return log_volume + float(log_mean)


class Prior:
    """
    A PriorConfig with n-dependent constants (sieve size, radius, k-law)
    pinned.

    Attributes:
        config (PriorConfig): Source configuration.
        n (int): Sample size.
        rates (RateConstants): Sieve sizes and rate scales at n.
        s (float): Sobolev exponent of the theta support.
        L (float): Sobolev radius of the theta support.
        k_max (int): Largest k with prior mass.
    """

    def __init__(self, config: PriorConfig, n: int, rates: RateConstants, L: float):
        self.config = config
        self.n = n
        self.rates = rates
        self.beta = rates.beta
        self.L = L
        self.s = theta_sobolev_exponent(config.kind, self.beta)
        if config.kind == PriorKind.C:
            self.k_max = config.k_max if config.k_max is not None else 2 * rates.k_n
        else:
            self.k_max = self.k_sieve
        self._log_pk = self._k_law_table()

    @classmethod
    def resolve(
        cls,
        config: PriorConfig,
        n: int,
        truth: TruthSpec,
        n_grid: Optional[Iterable[int]] = None,
    ) -> "Prior":
        """
        Pin k_B (largest admissible over ``n_grid``) and L (constructive
        radius) when the configuration leaves them unset.

        Raises:
            ConfigurationError: If k'_n >= k_n or the radius cannot be derived.
        """
        beta = config.beta if config.beta is not None else truth.beta
        n_grid = list(n_grid) if n_grid is not None else [n]
        k_B = config.k_B
        if k_B is None:
            k_B = default_k_B(n_grid, beta, config.k_A)
        if config.L is not None:
            L = config.L
        else:
            L = default_sobolev_radius(
                truth.model_copy(update={"beta": beta}),
                n,
                config.k_A,
                config.l_0,
                config.C_1,
            )
        rates = rate_constants(
            n,
            beta,
            config.kind,
            k_A=config.k_A,
            k_B=k_B,
            t=config.t,
            L=L,
            L_o=truth.L_o,
            l_0=config.l_0,
            C_1=config.C_1,
        )
        logger.debug(
            f"prior {config.kind} at n={n}: k_n={rates.k_n}, "
            f"k'_n={rates.k_n_prime}, L={L:.6g}"
        )
        return cls(config, n, rates, L)

    @property
    def kind(self) -> PriorKind:
        return self.config.kind

    @property
    def k_sieve(self) -> int:
        if self.config.kind == PriorKind.B:
            return self.rates.k_n_prime
        return self.rates.k_n

    @property
    def d_bounds(self) -> tuple[float, float]:
        return -0.5 + self.config.t, 0.5 - self.config.t

    def _k_law_table(self) -> np.ndarray:
        ks = np.arange(self.k_max + 1)
        if self.config.kind != PriorKind.C:
            table = np.full(len(ks), -np.inf)
            table[self.k_sieve] = 0.0
            return table
        law = self.config.k_law
        if isinstance(law, PoissonLaw):
            with np.errstate(divide="ignore"):
                raw = stats.poisson.logpmf(ks, law.lam)
        elif isinstance(law, GeometricLaw):
            raw = stats.geom.logpmf(ks + 1, law.p)
        else:
            raise TypeError(f"unsupported k law {type(law).__name__}")
        return raw - special.logsumexp(raw)

    def support_k(self) -> List[int]:
        """k values with positive prior mass."""
        return [int(k) for k in np.nonzero(np.isfinite(self._log_pk))[0]]

    def log_pk(self, k: int) -> float:
        if not 0 <= k <= self.k_max:
            return -np.inf
        return float(self._log_pk[k])

    def log_pd(self, d: float) -> float:
        lo, hi = self.d_bounds
        if not lo <= d <= hi:
            return -np.inf
        return -math.log(1.0 - 2.0 * self.config.t)

    def sobolev_norm(self, theta: np.ndarray) -> float:
        theta = np.asarray(theta, dtype=float)
        weights = (1.0 + np.arange(len(theta))) ** (2 * self.s)
        return float(np.sum(theta**2 * weights))

    def in_ball(self, theta: np.ndarray) -> bool:
        return self.sobolev_norm(theta) <= self.L

    def log_normaliser(self, k: int) -> float:
        family = self.config.theta_family
        return _log_normaliser(
            family.model_dump_json(),
            k,
            self.s,
            self.L,
            self.config.volume_samples,
            self.config.volume_seed,
        )

    def log_ptheta(self, k: int, theta: np.ndarray) -> float:
        theta = np.asarray(theta, dtype=float)
        if len(theta) != k + 1 or not self.in_ball(theta):
            return -np.inf
        penalty = float(_penalty(self.config.theta_family, theta)[0])
        return -penalty - self.log_normaliser(k)

    def log_density(
        self, d: float, k: int, theta: np.ndarray, include_k: bool = True
    ) -> float:
        """log pi_d(d) + log pi_k(k) + log pi_{theta|k}(theta); -inf off support."""
        log_pk = self.log_pk(k) if include_k else 0.0
        if not np.isfinite(log_pk):
            return -np.inf
        log_pd = self.log_pd(d)
        if not np.isfinite(log_pd):
            return -np.inf
        return log_pd + log_pk + self.log_ptheta(k, theta)

    def initial_theta(self, k: int, variance: float) -> np.ndarray:
        """theta_0 matched to the sample variance, pulled inside the ball."""
        theta = np.zeros(k + 1)
        theta[0] = math.log(max(variance, 1e-300) / (2.0 * math.pi))
        limit = 0.9 * math.sqrt(self.L)
        theta[0] = float(np.clip(theta[0], -limit, limit))
        return theta


def prior_logdensity(prior: Prior, d: float, k: int, theta: np.ndarray) -> float:
    """log pi(d, k, theta) under a resolved prior; -inf encodes support violations."""
    return prior.log_density(d, k, theta)
