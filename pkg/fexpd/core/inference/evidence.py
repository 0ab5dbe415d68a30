"""
Laplace approximation of the log marginal likelihood at a fixed k.

    log Z ~ log p(x*) + (dim/2) log 2 pi - 1/2 log det(-H(x*))

with x* the posterior mode and H a central finite-difference Hessian. When
-H is not positive definite the chain covariance stands in for (-H)^{-1}.
"""

import math
from typing import Callable, Optional

import numpy as np
from loguru import logger
from scipy import linalg, optimize

from fexpd.core.exceptions import EstimationError
from fexpd.core.inference.priors import Prior
from fexpd.core.inference.sampler import LogLikFn
from fexpd.core.models.results import EvidenceEstimate, PosteriorChain

_LOG_2PI = math.log(2.0 * math.pi)


def fd_hessian(func: Callable[[np.ndarray], float], x: np.ndarray, step: float) -> np.ndarray:
    """Central finite-difference Hessian."""
    dim = len(x)
    hessian = np.empty((dim, dim))
    f0 = func(x)
    for i in range(dim):
        ei = np.zeros(dim)
        ei[i] = step
        hessian[i, i] = (func(x + ei) - 2.0 * f0 + func(x - ei)) / step**2
        for j in range(i):
            ej = np.zeros(dim)
            ej[j] = step
            value = (
                func(x + ei + ej) - func(x + ei - ej) - func(x - ei + ej) + func(x - ei - ej)
            ) / (4.0 * step**2)
            hessian[i, j] = hessian[j, i] = value
    return hessian


def laplace_log_evidence(
    log_target: Callable[[np.ndarray], float],
    x0: np.ndarray,
    step: float = 1e-4,
    fallback_cov: Optional[np.ndarray] = None,
) -> EvidenceEstimate:
    """
    Laplace estimate of log integral exp(log_target).

    Raises:
        EstimationError: If the start point has zero density, or the Hessian is
            unusable and no fallback covariance is given.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not np.isfinite(log_target(x0)):
        raise EstimationError(message="Laplace start point has zero target density")

    def objective(x: np.ndarray) -> float:
        value = log_target(x)
        return -value if np.isfinite(value) else np.inf

    result = optimize.minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "xatol": 1e-9,
            "fatol": 1e-11,
            "maxiter": 4000 * len(x0),
            "adaptive": len(x0) > 2,
        },
    )
    mode = result.x if result.fun <= objective(x0) else x0
    top = float(log_target(mode))
    dim = len(mode)

    hessian = fd_hessian(log_target, mode, step)
    if np.all(np.isfinite(hessian)):
        try:
            factor = linalg.cholesky(-0.5 * (hessian + hessian.T), lower=True)
            log_det = 2.0 * float(np.sum(np.log(np.diag(factor))))
            return EvidenceEstimate(
                log_evidence=top + 0.5 * dim * _LOG_2PI - 0.5 * log_det,
                mode=mode,
                log_post_mode=top,
                hessian_ok=True,
                method="laplace",
            )
        except linalg.LinAlgError:
            pass

    if fallback_cov is None:
        raise EstimationError(
            message="negative Hessian is not positive definite and no fallback is available",
            detail={"mode": mode.tolist()},
        )
    logger.warning("Laplace Hessian not usable; falling back to the chain covariance")
    cov = np.atleast_2d(fallback_cov)
    sign, log_det_cov = np.linalg.slogdet(cov)
    if sign <= 0:
        raise EstimationError(message="fallback covariance is not positive definite")
    return EvidenceEstimate(
        log_evidence=top + 0.5 * dim * _LOG_2PI + 0.5 * log_det_cov,
        mode=mode,
        log_post_mode=top,
        hessian_ok=False,
        method="chain_covariance",
    )


def evidence_laplace(
    prior: Prior,
    k: int,
    loglik: LogLikFn,
    chain: Optional[PosteriorChain] = None,
    step: float = 1e-4,
) -> EvidenceEstimate:
    """
    log integral of exp(l_n(d, k, theta)) pi_d(d) pi_{theta|k}(theta) over
    (d, theta). pi_k is left out; callers add it to form mixture weights.

    The optimiser starts from the best chain state when one is given.
    """

    def log_target(x: np.ndarray) -> float:
        d, theta = float(x[0]), x[1:]
        log_prior = prior.log_density(d, k, theta, include_k=False)
        if not np.isfinite(log_prior):
            return -np.inf
        return float(loglik(d, theta)) + log_prior

    if chain is not None and chain.size:
        best = int(np.argmax(chain.log_post))
        x0 = np.concatenate([[chain.d[best]], chain.theta[best]])
        states = np.column_stack([chain.d, chain.theta])
        fallback = np.atleast_2d(np.cov(states, rowvar=False))
    else:
        x0 = np.concatenate([[0.0], np.zeros(k + 1)])
        fallback = None
    estimate = laplace_log_evidence(log_target, x0, step=step, fallback_cov=fallback)
    logger.debug(f"evidence at k={k}: {estimate.log_evidence:.6g} ({estimate.method})")
    return estimate
