"""
Marginal posterior of d: one chain at the sieve order for priors A and B,
Laplace-weighted per-k chains for prior C.
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import special

from fexpd.core.inference.diagnostics import (
    weighted_ks,
    weighted_mean_sd,
    weighted_quantile,
)
from fexpd.core.inference.evidence import evidence_laplace
from fexpd.core.inference.priors import Prior
from fexpd.core.inference.sampler import LogLikFn, mh_within_k
from fexpd.core.likelihood import LogLikelihood
from fexpd.core.models.config import (
    LikelihoodKind,
    NumericsConfig,
    PriorKind,
    RngKind,
    SamplerConfig,
)
from fexpd.core.models.results import PosteriorChain, PosteriorSummary, SamplePath
from fexpd.core.utils import chain_seed


def level_key(level: float) -> str:
    return f"{level:g}"


def summarise(
    chains: Sequence[PosteriorChain],
    k_weights: Dict[int, float],
    credible_levels: Sequence[float] = (0.9, 0.95),
    log_evidence: Optional[Dict[int, float]] = None,
) -> PosteriorSummary:
    """Pool the d-draws of every chain with weight w_k / m_k."""
    draws = np.concatenate([c.d for c in chains])
    weights = np.concatenate([np.full(c.size, k_weights[c.k] / c.size) for c in chains])
    mean, sd = weighted_mean_sd(draws, weights)
    credible = {}
    for level in credible_levels:
        tail = 0.5 * (1.0 - level)
        lo, hi = weighted_quantile(draws, [tail, 1.0 - tail], weights)
        credible[level_key(level)] = (float(lo), float(hi))
    standardised = (draws - mean) / sd if sd > 0 else np.zeros_like(draws)
    uniform = len(chains) == 1
    return PosteriorSummary(
        d_mean=mean,
        d_sd=sd,
        credible=credible,
        k_weights=k_weights,
        ks_to_normal=weighted_ks(standardised, None if uniform else weights),
        n_draws=len(draws),
        log_evidence=log_evidence or {},
    )


def posterior_d(
    path: SamplePath,
    prior: Prior,
    iters: int,
    seed: int,
    sampler: Optional[SamplerConfig] = None,
    loglik: Optional[LogLikFn] = None,
    likelihood: LikelihoodKind = LikelihoodKind.EXACT,
    numerics: Optional[NumericsConfig] = None,
    rng_kind: RngKind = RngKind.PHILOX,
    credible_levels: Sequence[float] = (0.9, 0.95),
) -> Tuple[PosteriorSummary, List[PosteriorChain]]:
    """
    Posterior summary of d and the chains behind it.

    Priors A and B run one chain at the sieve order with ``seed``. Prior C runs
    a chain per k with mass, seeded ``chain_seed(seed, k)``, and weights them
    by normalised exp(evidence_k + log pi_k(k)); a single k with mass gets
    weight 1 without an evidence computation.
    """
    numerics = numerics or NumericsConfig()
    loglik = loglik or LogLikelihood(path, likelihood, numerics)

    def run(k: int, chain_seed_value: int) -> PosteriorChain:
        return mh_within_k(
            path,
            prior,
            k,
            iters,
            chain_seed_value,
            sampler=sampler,
            loglik=loglik,
            numerics=numerics,
            rng_kind=rng_kind,
        )

    if prior.kind != PriorKind.C:
        chain = run(prior.k_sieve, seed)
        summary = summarise([chain], {chain.k: 1.0}, credible_levels)
        return summary, [chain]

    ks = prior.support_k()
    chains = [run(k, chain_seed(seed, k)) for k in ks]
    if len(chains) == 1:
        return summarise(chains, {ks[0]: 1.0}, credible_levels), chains

    log_evidence = {}
    log_weights = []
    for chain in chains:
        estimate = evidence_laplace(prior, chain.k, loglik, chain=chain)
        log_evidence[chain.k] = estimate.log_evidence
        log_weights.append(estimate.log_evidence + prior.log_pk(chain.k))
    log_weights = np.asarray(log_weights)
    weights = np.exp(log_weights - special.logsumexp(log_weights))
    weights /= weights.sum()
    k_weights = {k: float(w) for k, w in zip(ks, weights)}
    logger.info(f"prior C k-weights: {k_weights}")
    return summarise(chains, k_weights, credible_levels, log_evidence), chains
