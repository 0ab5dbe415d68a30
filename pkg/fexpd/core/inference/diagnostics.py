"""
Comparison of posterior d-draws with the normal reference
N(d_o + bias, 4 / (n r_k)), per run and across replicates.
"""

import math
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from fexpd.core.exceptions import DomainError
from fexpd.core.likelihood import bvm_params
from fexpd.core.models.results import BvmReport, PosteriorChain
from fexpd.core.models.spectral import TruthSpec


def _normalise(weights: Optional[np.ndarray], size: int) -> np.ndarray:
    if weights is None:
        return np.full(size, 1.0 / size)
    weights = np.asarray(weights, dtype=float)
    return weights / weights.sum()


def weighted_mean_sd(values: np.ndarray, weights: Optional[np.ndarray] = None) -> tuple[float, float]:
    w = _normalise(weights, len(values))
    mean = float(np.sum(w * values))
    return mean, float(math.sqrt(max(0.0, np.sum(w * (values - mean) ** 2))))


def weighted_quantile(
    values: np.ndarray, q: Sequence[float], weights: Optional[np.ndarray] = None
) -> np.ndarray:
    """Quantiles of the weighted empirical distribution (inverse ECDF)."""
    if weights is None:
        return np.quantile(values, q, method="inverted_cdf")
    order = np.argsort(values)
    sorted_values = np.asarray(values)[order]
    cdf = np.cumsum(_normalise(weights, len(values))[order])
    idx = np.searchsorted(cdf, np.asarray(q) - 1e-12, side="left")
    return sorted_values[np.clip(idx, 0, len(values) - 1)]


def weighted_ks(values: np.ndarray, weights: Optional[np.ndarray] = None) -> float:
    """Kolmogorov-Smirnov distance between a weighted sample and N(0, 1)."""
    if weights is None:
        return float(stats.kstest(values, "norm").statistic)
    order = np.argsort(values)
    x = np.asarray(values)[order]
    w = _normalise(weights, len(values))[order]
    upper = np.cumsum(w)
    lower = upper - w
    phi = stats.norm.cdf(x)
    return float(max(np.max(upper - phi), np.max(phi - lower)))


def bvm_diagnostic(
    draws: np.ndarray | Sequence[PosteriorChain],
    truth: TruthSpec,
    n: int,
    k: int,
    weights: Optional[np.ndarray] = None,
) -> BvmReport:
    """
    z = sqrt(n r_k / 4) (d - d_o - bias) for every draw; reports the KS
    distance of the recentred z to N(0, 1), the uncentred KS distance, mean z
    and posterior variance over 4 / (n r_k).

    Raises:
        DomainError: If fewer than 1000 draws are given.
    """
    if not isinstance(draws, np.ndarray):
        draws = np.concatenate([chain.d for chain in draws])
    if len(draws) < 1000:
        raise DomainError(message=f"need >= 1000 draws, got {len(draws)}")
    reference = bvm_params(truth, n, k)
    z = (draws - reference.center) / reference.sd
    z_mean, _ = weighted_mean_sd(z, weights)
    _, d_sd = weighted_mean_sd(draws, weights)
    return BvmReport(
        ks_to_normal=weighted_ks(z - z_mean, weights),
        ks_raw=weighted_ks(z, weights),
        z_mean=z_mean,
        var_ratio=d_sd**2 / reference.sd**2,
        center=reference.center,
        sd=reference.sd,
        n_draws=len(draws),
        k=k,
    )


def summarise_bvm(reports: List[BvmReport], covered: List[bool]) -> Dict[str, float]:
    """Across-replicate medians, z-mean spread and 90% coverage frequency."""
    z_means = np.array([r.z_mean for r in reports])
    summary = {
        "median_ks": float(np.median([r.ks_to_normal for r in reports])),
        "median_var_ratio": float(np.median([r.var_ratio for r in reports])),
        "z_mean_mean": float(np.mean(z_means)),
        "z_mean_sd": float(np.std(z_means, ddof=1)) if len(z_means) > 1 else 0.0,
        "z_mean_ks": float(stats.kstest(z_means, "norm").statistic) if len(z_means) > 1 else None,
        "coverage_90": float(np.mean(covered)) if covered else 0.0,
    }
    return summary
