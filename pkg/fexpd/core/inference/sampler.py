"""
Two-block random-walk Metropolis-Hastings on (d, theta) at fixed k.

Proposal scales adapt toward the target acceptance band during warm-up. Half
way through warm-up the theta proposal switches to the empirical covariance
of the warm-up draws (scaled by 2.38^2 / dim). Everything is frozen after
warm-up, so the retained draws come from a fixed reversible kernel.
"""

import math
from typing import Callable, Optional

import numpy as np
from loguru import logger

from fexpd.core.exceptions import DomainError, FexpdError, SamplerError
from fexpd.core.inference.priors import Prior
from fexpd.core.likelihood import LogLikelihood
from fexpd.core.models.config import (
    LikelihoodKind,
    NumericsConfig,
    RngKind,
    SamplerConfig,
)
from fexpd.core.models.results import PosteriorChain, SamplePath
from fexpd.core.utils import make_rng

LogLikFn = Callable[[float, np.ndarray], float]

_SHRINK = 0.7
_GROW = 1.4


class _Block:
    """Proposal scale and acceptance bookkeeping of one block."""

    def __init__(self, scale: float):
        self.scale = scale
        self.window_accepted = 0
        self.window_proposed = 0
        self.accepted = 0
        self.proposed = 0

    def record(self, accepted: bool, counting: bool) -> None:
        self.window_accepted += accepted
        self.window_proposed += 1
        if counting:
            self.accepted += accepted
            self.proposed += 1

    def adapt(self, band: tuple[float, float]) -> None:
        if self.window_proposed == 0:
            return
        rate = self.window_accepted / self.window_proposed
        if rate < band[0]:
            self.scale *= _SHRINK
        elif rate > band[1]:
            self.scale *= _GROW
        self.window_accepted = 0
        self.window_proposed = 0

    @property
    def rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0


def mh_within_k(
    path: SamplePath,
    prior: Prior,
    k: int,
    iters: int,
    seed: int,
    sampler: Optional[SamplerConfig] = None,
    loglik: Optional[LogLikFn] = None,
    likelihood: LikelihoodKind = LikelihoodKind.EXACT,
    numerics: Optional[NumericsConfig] = None,
    rng_kind: RngKind = RngKind.PHILOX,
) -> PosteriorChain:
    """
    Sample the posterior of (d, theta) given k.

    Args:
        path (SamplePath): Observed series.
        prior (Prior): Resolved prior; k must carry prior mass.
        k (int): Truncation order.
        iters (int): Iterations including warm-up, >= 1000.
        seed (int): Chain seed.
        sampler (SamplerConfig): Adaptation settings.
        loglik (Callable): Overrides the likelihood, e.g. ``lambda d, t: 0.0``
            to sample the prior.
        likelihood (LikelihoodKind): Exact or Whittle when ``loglik`` is unset.

    Raises:
        DomainError: If iters < 1000 or k has no prior mass.
        SamplerError: If the likelihood fails; ``detail`` holds the state.
    """
    if iters < 1000:
        raise DomainError(message=f"iters must be >= 1000, got {iters}")
    if not np.isfinite(prior.log_pk(k)):
        raise DomainError(message=f"k={k} has no mass under prior {prior.kind}")
    sampler = sampler or SamplerConfig()
    loglik = loglik or LogLikelihood(path, likelihood, numerics)
    rng = make_rng(seed, rng_kind)
    dim = k + 1

    def evaluate(d: float, theta: np.ndarray, iteration: int) -> float:
        try:
            value = float(loglik(d, theta))
        except (FexpdError, ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
            raise SamplerError(
                message=f"likelihood failed at iteration {iteration}: {e}",
                detail={"d": d, "theta": theta.tolist(), "k": k, "iteration": iteration},
            ) from e
        if not math.isfinite(value):
            raise SamplerError(
                message=f"non-finite likelihood at iteration {iteration}",
                detail={"d": d, "theta": theta.tolist(), "k": k, "iteration": iteration},
            )
        return value

    d = 0.0
    theta = prior.initial_theta(k, float(np.var(path.values)))
    log_prior = prior.log_density(d, k, theta, include_k=False)
    log_like = evaluate(d, theta, 0)

    warmup = int(sampler.warmup_fraction * iters)
    kept = iters - warmup
    d_draws = np.empty(kept)
    theta_draws = np.empty((kept, dim))
    log_post = np.empty(kept)
    history = np.empty((max(warmup, 1), dim))

    d_block = _Block(sampler.initial_d_scale)
    theta_block = _Block(sampler.initial_theta_scale)
    root = np.eye(dim)

    for it in range(iters):
        counting = it >= warmup

        proposal = d + d_block.scale * rng.standard_normal()
        accepted = False
        prior_new = prior.log_density(proposal, k, theta, include_k=False)
        if np.isfinite(prior_new):
            like_new = evaluate(proposal, theta, it)
            if math.log(rng.uniform()) < like_new + prior_new - log_like - log_prior:
                d, log_like, log_prior = proposal, like_new, prior_new
                accepted = True
        d_block.record(accepted, counting)

        step = root @ rng.standard_normal(dim)
        proposal_theta = theta + theta_block.scale * step
        accepted = False
        prior_new = prior.log_density(d, k, proposal_theta, include_k=False)
        if np.isfinite(prior_new):
            like_new = evaluate(d, proposal_theta, it)
            if math.log(rng.uniform()) < like_new + prior_new - log_like - log_prior:
                theta, log_like, log_prior = proposal_theta, like_new, prior_new
                accepted = True
        theta_block.record(accepted, counting)

        if not counting:
            history[it] = theta
            if (it + 1) % sampler.adapt_interval == 0:
                d_block.adapt(sampler.target_acceptance)
                theta_block.adapt(sampler.target_acceptance)
            start = warmup // 4
            if it + 1 == warmup // 2 and it + 1 - start >= 10 * dim:
                root = _empirical_root(history[start : it + 1], dim)
                theta_block.scale = 1.0
        else:
            j = it - warmup
            d_draws[j] = d
            theta_draws[j] = theta
            log_post[j] = log_like + log_prior

    logger.debug(
        f"chain k={k} seed={seed}: acceptance d={d_block.rate:.3f}, "
        f"theta={theta_block.rate:.3f}"
    )
    return PosteriorChain(
        k=k,
        d=d_draws,
        theta=theta_draws,
        log_post=log_post,
        acceptance={"d": d_block.rate, "theta": theta_block.rate},
        scales={"d": d_block.scale, "theta": theta_block.scale},
        seed=seed,
        warmup=warmup,
    )


def _empirical_root(draws: np.ndarray, dim: int) -> np.ndarray:
    """Cholesky root of 2.38^2 / dim times the draw covariance."""
    cov = np.atleast_2d(np.cov(draws, rowvar=False))
    cov = cov * (2.38**2 / dim) + 1e-12 * np.eye(dim)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        logger.warning("warm-up covariance is singular; keeping the diagonal proposal")
        return np.diag(np.sqrt(np.maximum(np.diag(cov), 1e-12)))


def audit_chain(chain: PosteriorChain, prior: Prior) -> int:
    """Number of stored states outside the prior support."""
    bad = 0
    for d, theta in zip(chain.d, chain.theta):
        if not np.isfinite(prior.log_density(d, chain.k, theta, include_k=False)):
            bad += 1
    return bad
