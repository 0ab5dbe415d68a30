from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class AutocovSequence(ArrayModel):
    """
    gamma(0..maxlag) with gamma(h) = integral over [-pi, pi] of e^{ihx} f(x) dx.

    Attributes:
        values (np.ndarray): Autocovariances.
        source (str): Descriptor of the generating density.
    """

    values: np.ndarray
    source: str = ""

    @property
    def maxlag(self) -> int:
        return len(self.values) - 1

    def is_admissible(self) -> bool:
        """gamma(0) > 0 and |gamma(h)| <= gamma(0)."""
        g0 = self.values[0]
        return bool(g0 > 0 and np.all(np.abs(self.values) <= g0 * (1 + 1e-12)))


class SamplePath(ArrayModel):
    """
    One simulated (or loaded) series X_1..X_n.

    Attributes:
        values (np.ndarray): The series.
        seed (Optional[int]): Seed used to draw it.
        truth_hash (Optional[str]): Hash of the generating TruthSpec.
        generator (str): "circulant", "cholesky" or "data".
        note (Optional[str]): Why a fallback generator was used.
    """

    values: np.ndarray
    seed: Optional[int] = None
    truth_hash: Optional[str] = None
    generator: str = "data"
    note: Optional[str] = None

    @property
    def n(self) -> int:
        return len(self.values)


class Periodogram(ArrayModel):
    frequencies: np.ndarray
    ordinates: np.ndarray


class GphEstimate(BaseModel):
    """
    Log-periodogram regression estimate.

    Attributes:
        d (float): Estimate of d.
        stderr (float): Regression standard error of the slope.
        bandwidth (int): Number of Fourier frequencies used.
        in_range (bool): Whether |d| < 1/2.
    """

    d: float
    stderr: float
    bandwidth: int
    in_range: bool


class ScoreDecomposition(BaseModel):
    """
    d-score at (d_o, k) split into its centred quadratic form and its
    deterministic part.

    Attributes:
        S (float): 1/2 (X'AX - tr[T_n(f_o) A]).
        D (float): -1/2 tr[(T_n(f_{d_o,k}) - T_n(f_o)) A].
        total (float): S + D.
        var_S_theory (float): n r_k / 4.
        var_S_exact (float): 1/2 tr[(T_n(f_o) A)^2].
    """

    S: float
    D: float
    total: float
    var_S_theory: float
    var_S_exact: float

    @model_validator(mode="after")
    def validate_total(self) -> "ScoreDecomposition":
        if self.total != self.S + self.D:
            raise ValueError("total must equal S + D")
        return self


class BvmParams(BaseModel):
    """
    Normal reference of the marginal posterior of d.

    Attributes:
        center (float): d_o + deterministic bias.
        sd (float): sqrt(4 / (n r_k)).
        b_n_det (float): Deterministic bias.
        k_used (int): Truncation order.
    """

    center: float
    sd: float = Field(gt=0.0)
    b_n_det: float
    k_used: int


class PosteriorChain(ArrayModel):
    """
    Post-warm-up MCMC draws at a fixed k.

    Attributes:
        k (int): Truncation order.
        d (np.ndarray): d draws, shape (m,).
        theta (np.ndarray): theta draws, shape (m, k+1).
        log_post (np.ndarray): Unnormalised log posterior per draw.
        acceptance (Dict[str, float]): Post-warm-up acceptance per block.
        scales (Dict[str, float]): Frozen proposal scales.
        seed (int): Chain seed.
        warmup (int): Discarded iterations.
    """

    k: int
    d: np.ndarray
    theta: np.ndarray
    log_post: np.ndarray
    acceptance: Dict[str, float]
    scales: Dict[str, float]
    seed: int
    warmup: int

    @property
    def size(self) -> int:
        return len(self.d)


class EvidenceEstimate(ArrayModel):
    """
    Laplace estimate of the log marginal likelihood at one k.

    Attributes:
        log_evidence (float): Estimate.
        mode (np.ndarray): Posterior mode found by the optimiser.
        log_post_mode (float): Log posterior at the mode.
        hessian_ok (bool): False when the chain-covariance fallback was used.
        method (str): "laplace" or "chain_covariance".
    """

    log_evidence: float
    mode: np.ndarray
    log_post_mode: float
    hessian_ok: bool
    method: str


class PosteriorSummary(BaseModel):
    """
    Summary of the (pooled) marginal posterior of d.

    Attributes:
        d_mean (float): Posterior mean.
        d_sd (float): Posterior standard deviation.
        credible (Dict[str, Tuple[float, float]]): Equal-tailed intervals by level.
        k_weights (Dict[int, float]): Posterior probability of each visited k.
        ks_to_normal (float): KS distance of standardised draws to N(0, 1).
        n_draws (int): Pooled draw count.
        log_evidence (Dict[int, float]): Laplace evidence per k (prior C).
    """

    d_mean: float
    d_sd: float
    credible: Dict[str, Tuple[float, float]]
    k_weights: Dict[int, float]
    ks_to_normal: float
    n_draws: int
    log_evidence: Dict[int, float] = Field(default_factory=dict)

    def covers(self, value: float, level: float) -> bool:
        lo, hi = self.credible[f"{level:g}"]
        return lo <= value <= hi


class BvmReport(BaseModel):
    """
    Posterior draws compared with the normal reference.

    Attributes:
        ks_to_normal (float): KS distance of recentred z-draws to N(0, 1).
        ks_raw (float): KS distance of the uncentred z-draws.
        z_mean (float): Mean of z; N(0, 1) across replicates.
        var_ratio (float): Posterior variance / (4 / (n r_k)).
        center (float): Reference center.
        sd (float): Reference sd.
        n_draws (int): Draws used.
        k (int): Truncation order.
    """

    ks_to_normal: float
    ks_raw: float
    z_mean: float
    var_ratio: float
    center: float
    sd: float
    n_draws: int
    k: int


class QuadformTailReport(BaseModel):
    """
    Empirical tail of Y'AY - tr(A) against exp(-threshold / 8).

    Attributes:
        exceedance (float): Fraction of trials above the threshold.
        bound (float): exp(-threshold / 8).
        slack (float): 3 binomial standard deviations at the bound.
        threshold (float): n^alpha unless overridden.
        trials (int): Number of trials.
        passed (bool): exceedance <= bound + slack.
    """

    exceedance: float
    bound: float
    slack: float
    threshold: float
    trials: int
    passed: bool


class RateStudyRow(BaseModel):
    n: int
    prior: str
    k_used: int
    rmse: float
    mean_abs_error: float
    analytic_bias: float
    delta_n: float
    w_n: float
    fisher_sd: float


class RateStudyTable(BaseModel):
    """
    Posterior-mean errors of priors A and B across an n grid.

    Attributes:
        rows (List[RateStudyRow]): One row per (n, prior).
        bias_dominance (bool): bias at k'_n exceeds bias at k_n for every n.
        errors (Dict[str, List[List[float]]]): Signed errors per prior, indexed
            [n index][replicate].
    """

    rows: List[RateStudyRow]
    bias_dominance: bool
    errors: Dict[str, List[List[float]]] = Field(default_factory=dict)


class TraceProduct(BaseModel):
    """
    (1/n) tr[prod_j T_n(f_j)] next to its Szego limit (2 pi)^(m-1) integral prod_j f_j.

    Attributes:
        exact (float): Dense trace divided by n.
        szego_limit (float): Limit as n grows.
        n (int): Dimension.
        factors (int): Number of densities m.
    """

    exact: float
    szego_limit: float
    n: int
    factors: int

    @property
    def gap(self) -> float:
        return abs(self.exact - self.szego_limit)


class InfoEstimate(BaseModel):
    """
    Second d-derivative of the profile log-likelihood at d_o.

    Attributes:
        fd (float): Finite-difference value.
        theory (float): -n r_k / 4.
        step (float): Finite-difference step.
        richardson (bool): Whether Richardson extrapolation was applied.
    """

    fd: float
    theory: float
    step: float
    richardson: bool = False
