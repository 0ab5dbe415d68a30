"""
Exact Gaussian and Whittle log-likelihoods of FEXP models, the d-score
decomposition at (d_o, k) and the normal reference of the marginal posterior.
"""

import math
from typing import Optional, Tuple, Union

import numpy as np
from loguru import logger
from scipy import linalg

from fexpd.core.density import (
    FexpDensity,
    FexpScoreDensity,
    SpectralDensity,
    as_density,
)
from fexpd.core.exceptions import DomainError, SizeLimitError
from fexpd.core.models.config import LikelihoodKind, NumericsConfig, SimulationConfig
from fexpd.core.models.results import (
    BvmParams,
    InfoEstimate,
    SamplePath,
    ScoreDecomposition,
)
from fexpd.core.models.spectral import FexpModel, TruthSpec
from fexpd.core.simulate import periodogram, truth_model
from fexpd.core.spectral import bias_term, fisher_information_d, projected_model
from fexpd.core.toeplitz import (
    autocov_from_density,
    build,
    logdet_solve,
    toeplitz_matrix,
)

_LOG_2PI = math.log(2.0 * math.pi)


def exact_loglik(
    path: SamplePath,
    model: Union[FexpModel, SpectralDensity],
    numerics: Optional[NumericsConfig] = None,
) -> float:
    """
    -(n/2) log 2 pi - 1/2 log det T_n(f) - 1/2 X' T_n(f)^{-1} X.

    Raises:
        SizeLimitError: If n exceeds the Levinson cap.
        ToeplitzBreakdownError: If T_n(f) is not positive definite.
    """
    numerics = numerics or NumericsConfig()
    n = path.n
    gamma = autocov_from_density(as_density(model), n - 1, numerics.quadrature)
    op = build(gamma, n, cap=numerics.levinson_cap)
    logdet, _, quad = logdet_solve(op, path.values)
    return -0.5 * n * _LOG_2PI - 0.5 * logdet - 0.5 * quad


def whittle_loglik(
    path: SamplePath, model: Union[FexpModel, SpectralDensity]
) -> float:
    """
    -(n/2) log 2 pi - sum_j [log(2 pi f(lambda_j)) + I(lambda_j) / f(lambda_j)]
    over j = 1..floor(n/2).
    """
    pgram = periodogram(path)
    f = as_density(model)(pgram.frequencies)
    return float(
        -0.5 * path.n * _LOG_2PI
        - np.sum(np.log(2.0 * np.pi * f) + pgram.ordinates / f)
    )


class LogLikelihood:
    """
    (d, theta) -> log-likelihood of a fixed path; picklable so chains can run
    in worker processes.
    """

    def __init__(
        self,
        path: SamplePath,
        kind: LikelihoodKind = LikelihoodKind.EXACT,
        numerics: Optional[NumericsConfig] = None,
    ):
        self.path = path
        self.kind = LikelihoodKind(kind)
        self.numerics = numerics or NumericsConfig()

    def __call__(self, d: float, theta: np.ndarray) -> float:
        model = FexpModel.from_theta(d, theta)
        if self.kind == LikelihoodKind.WHITTLE:
            return whittle_loglik(self.path, model)
        return exact_loglik(self.path, model, self.numerics)


def profile_loglik(
    path: SamplePath,
    truth: TruthSpec,
    d: float,
    k: int,
    numerics: Optional[NumericsConfig] = None,
) -> float:
    """d -> l_n(d, k, theta_bar_{d,k})."""
    return exact_loglik(path, projected_model(truth, d, k), numerics)


def _second_difference(func, x: float, step: float) -> float:
    return (func(x + step) - 2.0 * func(x) + func(x - step)) / step**2


def score_info_d(
    path: SamplePath,
    truth: TruthSpec,
    k: int,
    numerics: Optional[NumericsConfig] = None,
    simulation: Optional[SimulationConfig] = None,
) -> Tuple[ScoreDecomposition, InfoEstimate]:
    """
    d-score at (d_o, k) along theta_bar_{d,k}, split as S + D with
    A = T_k^{-1} T(H_k f_k) T_k^{-1}, f_k = f_{d_o,k,theta_bar}:

        S = 1/2 (X'AX - tr[T(f_o) A]),   D = -1/2 tr[(T_k - T(f_o)) A],

    plus the finite-difference second derivative of the profile log-likelihood.

    Raises:
        SizeLimitError: If n exceeds the dense cap.
    """
    numerics = numerics or NumericsConfig()
    simulation = simulation or SimulationConfig()
    n = path.n
    if n > numerics.dense_cap:
        raise SizeLimitError(
            message=f"n={n} exceeds the dense cap {numerics.dense_cap}",
            detail={"n": n, "cap": numerics.dense_cap},
        )
    quadrature = numerics.quadrature
    model_k = projected_model(truth, truth.d_o, k)
    t_k = toeplitz_matrix(FexpDensity(model_k), n, quadrature)
    t_h = toeplitz_matrix(FexpScoreDensity(model_k), n, quadrature)
    t_o = toeplitz_matrix(
        FexpDensity(truth_model(truth, simulation.k_trunc, simulation.tail_tolerance)),
        n,
        quadrature,
    )

    factor = linalg.cho_factor(t_k, lower=True)
    half = linalg.cho_solve(factor, t_h)
    a = linalg.cho_solve(factor, half.T)
    a = 0.5 * (a + a.T)

    x = path.values
    t_o_a = t_o @ a
    s = 0.5 * (float(x @ a @ x) - float(np.trace(t_o_a)))
    d = -0.5 * float(np.sum((t_k - t_o) * a))
    decomposition = ScoreDecomposition(
        S=s,
        D=d,
        total=s + d,
        var_S_theory=fisher_information_d(n, k),
        var_S_exact=0.5 * float(np.sum(t_o_a * t_o_a.T)),
    )

    def profile(value: float) -> float:
        return profile_loglik(path, truth, value, k, numerics)

    step = numerics.fd_step
    if abs(truth.d_o) + step >= 0.5:
        raise DomainError(message=f"d_o={truth.d_o} too close to 1/2 for step {step}")
    info = _second_difference(profile, truth.d_o, step)
    if numerics.richardson:
        coarse = _second_difference(profile, truth.d_o, 2.0 * step)
        info = (4.0 * info - coarse) / 3.0
    logger.debug(f"score at k={k}: S={s:.6g}, D={d:.6g}, info={info:.6g}")
    return decomposition, InfoEstimate(
        fd=info,
        theory=-fisher_information_d(n, k),
        step=step,
        richardson=numerics.richardson,
    )


def bvm_params(truth: TruthSpec, n: int, k: int) -> BvmParams:
    """center = d_o + bias_term(truth, k), sd = sqrt(4 / (n r_k))."""
    if k < 0:
        raise DomainError(message=f"k must be >= 0, got {k}")
    bias = bias_term(truth, k)
    return BvmParams(
        center=truth.d_o + bias,
        sd=1.0 / math.sqrt(fisher_information_d(n, k)),
        b_n_det=bias,
        k_used=k,
    )
