"""
Rate experiments: the deterministic sieve/bias table and the Monte Carlo
comparison of priors A and B on paired paths.
"""

from typing import Any, Dict, List, Optional

import numpy as np
from loguru import logger

from fexpd.core.exceptions import ConfigurationError
from fexpd.core.inference.posterior import posterior_d
from fexpd.core.inference.priors import Prior
from fexpd.core.models.config import (
    ExperimentConfig,
    LoggerConfig,
    PriorConfig,
    PriorKind,
)
from fexpd.core.models.results import RateStudyRow, RateStudyTable
from fexpd.core.models.spectral import PowerLawRule, TruthSpec
from fexpd.core.runner import global_replicate, replicate_path, run_replicates
from fexpd.core.spectral import bias_term, fisher_information_d, r_tail


def prior_variant(config: PriorConfig, kind: PriorKind) -> PriorConfig:
    """``config`` as a sieve prior of ``kind``; the k-law is dropped."""
    data = config.model_dump()
    data.update(kind=kind, k_law=None, k_max=None)
    return PriorConfig.model_validate(data)


def bias_dominance(
    truth: TruthSpec,
    n_grid: List[int],
    prior: Optional[PriorConfig] = None,
) -> tuple[bool, List[Dict[str, Any]]]:
    """
    Whether bias_term at k'_n exceeds bias_term at k_n on every n of the grid.
    Deterministic; no paths are drawn.
    """
    prior = prior or PriorConfig(beta=truth.beta)
    config_A = prior_variant(prior, PriorKind.A)
    rows = []
    for n in n_grid:
        rates = Prior.resolve(config_A, n, truth, n_grid).rates
        bias_A = bias_term(truth, rates.k_n)
        bias_B = bias_term(truth, rates.k_n_prime)
        rows.append(
            {
                "n": n,
                "k_n": rates.k_n,
                "k_n_prime": rates.k_n_prime,
                "bias_k_n": bias_A,
                "bias_k_n_prime": bias_B,
                "dominates": bias_B > bias_A,
            }
        )
    return all(row["dominates"] for row in rows), rows


def rates_table(config: ExperimentConfig) -> List[Dict[str, Any]]:
    """Sieve sizes, rate scales, Fisher sd and bias at k_n and k'_n per n."""
    truth = config.truth
    rows = []
    for n in config.n_grid:
        prior = Prior.resolve(config.prior, n, truth, config.n_grid)
        rates = prior.rates
        rows.append(
            {
                "n": n,
                "k_n": rates.k_n,
                "k_n_prime": rates.k_n_prime,
                "delta_n": rates.delta_n,
                "eps_n": rates.eps_n,
                "vbar_n": rates.vbar_n,
                "w_n": rates.w_n,
                "r_k_n": r_tail(rates.k_n),
                "fisher_sd": fisher_information_d(n, rates.k_n) ** -0.5,
                "bias_k_n": bias_term(truth, rates.k_n),
                "bias_k_n_prime": bias_term(truth, rates.k_n_prime),
                "L": prior.L,
            }
        )
    return rows


class PairedTask:
    """Fit priors A and B to the same replicate path; returns signed errors."""

    def __init__(self, config: ExperimentConfig, n: int, priors: Dict[str, Prior]):
        self.config = config
        self.n = n
        self.priors = priors

    def __call__(self, index: int) -> Dict[str, float]:
        config = self.config
        path = replicate_path(config, self.n, index)
        errors = {}
        for label, prior in self.priors.items():
            summary, _ = posterior_d(
                path,
                prior,
                config.iters,
                path.seed,
                sampler=config.sampler,
                likelihood=config.likelihood,
                numerics=config.numerics,
                rng_kind=config.simulation.rng,
                credible_levels=config.fit.credible_levels,
            )
            errors[label] = summary.d_mean - config.truth.d_o
        logger.info(
            f"rate replicate {index} at n={self.n}: "
            + ", ".join(f"{k}={v:+.4f}" for k, v in errors.items())
        )
        return errors


def suboptimality_experiment(
    config: ExperimentConfig,
    jobs: Optional[int] = None,
    logger_config: Optional[LoggerConfig] = None,
) -> RateStudyTable:
    """
    Posterior-mean errors of priors A and B over ``config.n_grid``.

    Both priors see the same path in every replicate. Each row carries the
    empirical RMSE and mean absolute error next to the analytic bias at the
    sieve order used and the scales delta_n and w_n.

    Raises:
        ConfigurationError: If beta <= 5/2.
    """
    truth = config.truth
    if truth.beta <= 2.5:
        raise ConfigurationError(
            message=f"rate study needs beta > 5/2, got {truth.beta}",
            detail={"beta": truth.beta},
        )
    if not isinstance(truth.rule, PowerLawRule):
        logger.warning(
            f"rate study truth uses the {truth.rule.kind} rule; "
            "the bias gap between priors is only guaranteed for the power law"
        )
    dominance, _ = bias_dominance(truth, config.n_grid, config.prior)
    variants = {
        kind.value: prior_variant(config.prior, kind)
        for kind in (PriorKind.A, PriorKind.B)
    }

    rows: List[RateStudyRow] = []
    errors: Dict[str, List[List[float]]] = {label: [] for label in variants}
    for i, n in enumerate(config.n_grid):
        priors = {
            label: Prior.resolve(prior, n, truth, config.n_grid)
            for label, prior in variants.items()
        }
        indices = [global_replicate(config, i, r) for r in range(config.replicates)]
        results = run_replicates(
            PairedTask(config, n, priors),
            indices,
            jobs if jobs is not None else config.jobs,
            logger_config,
        )
        for label, prior in priors.items():
            signed = np.array([result[label] for result in results])
            errors[label].append(signed.tolist())
            k = prior.k_sieve
            rows.append(
                RateStudyRow(
                    n=n,
                    prior=label,
                    k_used=k,
                    rmse=float(np.sqrt(np.mean(signed**2))),
                    mean_abs_error=float(np.mean(np.abs(signed))),
                    analytic_bias=bias_term(truth, k),
                    delta_n=prior.rates.delta_n,
                    w_n=prior.rates.w_n,
                    fisher_sd=fisher_information_d(n, k) ** -0.5,
                )
            )
    return RateStudyTable(rows=rows, bias_dominance=dominance, errors=errors)
