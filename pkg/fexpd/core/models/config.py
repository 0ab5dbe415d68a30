from enum import StrEnum
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from .spectral import TruthSpec


class LoggerLevel(StrEnum):
    """
    Available logging levels.

    Enum:
        DEBUG: Per-step numerics (quadrature refinements, embedding sizes).
        INFO: Lifecycle messages.
        WARNING: Numerical fallbacks only.
        ERROR: Failures only.
    """

    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


class LoggerConfig(BaseModel):
    """
    Logging configuration for the application.

    Attributes:
        level (Optional[LoggerLevel]): Logging level.
        log_file (Optional[str]): Optional path to a log file.
        json_log (Optional[bool]): Whether to output logs in JSON format.

    Example:
        ```python
        LoggerConfig(level="DEBUG", log_file="logs/fexpd.log", json_log=True)
        ```
    """

    level: Optional[LoggerLevel] = LoggerLevel.INFO
    log_file: Optional[str] = None
    json_log: Optional[bool] = False


class PriorKind(StrEnum):
    """
    Prior families over (d, k, theta).

    Enum:
        A: Sieve at k_n, theta supported on the (beta - 1/2) Sobolev ball.
        B: Sieve at k'_n, theta supported on the beta Sobolev ball.
        C: Random k (Poisson or geometric), theta on the beta Sobolev ball.
    """

    A = "A"
    B = "B"
    C = "C"


class UniformSobolev(BaseModel):
    kind: Literal["uniform_sobolev"] = "uniform_sobolev"


class TruncatedGaussian(BaseModel):
    """
    Density proportional to exp(-A_coef sum_j j^alpha theta_j^2) on the ball.

    Attributes:
        A_coef (float): Precision scale.
        alpha (float): Decay exponent; alpha < 4 beta - 2 (prior A) or
            alpha < 2 beta (priors B and C).
    """

    kind: Literal["truncated_gaussian"] = "truncated_gaussian"
    A_coef: float = Field(default=1.0, gt=0.0)
    alpha: float = Field(default=1.0, ge=0.0)


class TruncatedLaplace(BaseModel):
    """Density proportional to exp(-a sum_j |theta_j|) on the ball."""

    kind: Literal["truncated_laplace"] = "truncated_laplace"
    a: float = Field(default=1.0, gt=0.0)


ThetaFamily = Annotated[
    Union[UniformSobolev, TruncatedGaussian, TruncatedLaplace],
    Field(discriminator="kind"),
]


class PoissonLaw(BaseModel):
    kind: Literal["poisson"] = "poisson"
    lam: float = Field(default=2.0, ge=0.0)


class GeometricLaw(BaseModel):
    kind: Literal["geometric"] = "geometric"
    p: float = Field(default=0.5, gt=0.0, le=1.0)


KLaw = Annotated[Union[PoissonLaw, GeometricLaw], Field(discriminator="kind")]


class PriorConfig(BaseModel):
    """
    One of priors A/B/C with every constant pinned.

    Attributes:
        kind (PriorKind): Prior family.
        t (float): pi_d is uniform on [-1/2 + t, 1/2 - t].
        beta (Optional[float]): Smoothness; inherited from the truth when unset.
        L (Optional[float]): Sobolev radius of the theta support. When unset it
            is derived as 4 x the constructive ball-inclusion bound.
        k_A (float): Prior-A sieve constant.
        k_B (Optional[float]): Prior-B sieve constant; unset means the largest
            value keeping k'_n < k_n over the n grid.
        l_0 (float): Ball-radius constant used by the rate scales.
        C_1 (float): Rate constant used by the rate scales.
        theta_family (ThetaFamily): Conditional density of theta given k.
        k_law (Optional[KLaw]): Law of k, prior C only.
        k_max (Optional[int]): Truncation of the k-law; default 2 k_n.
        h_k (Optional[List[float]]): Prior-A Lipschitz vector, recorded only.
        volume_samples (int): Monte Carlo draws for normalising constants.
        volume_seed (int): Seed of those draws.

    Example:
        ```python
        PriorConfig(kind="C", beta=3.0, L=50.0, k_law={"kind": "poisson", "lam": 1.0})
        ```
    """

    kind: PriorKind = PriorKind.A
    t: float = Field(default=0.05, gt=0.0, lt=0.5)
    beta: Optional[float] = Field(default=None, gt=1.0)
    L: Optional[float] = Field(default=None, gt=0.0)
    k_A: float = Field(default=1.0, gt=0.0)
    k_B: Optional[float] = Field(default=None, gt=0.0)
    l_0: float = Field(default=1.0, gt=0.0)
    C_1: float = Field(default=1.0, gt=0.0)
    theta_family: ThetaFamily = Field(default_factory=UniformSobolev)
    k_law: Optional[KLaw] = None
    k_max: Optional[int] = Field(default=None, ge=0)
    h_k: Optional[List[float]] = None
    volume_samples: int = Field(default=100_000, ge=1000)
    volume_seed: int = 0

    @model_validator(mode="after")
    def validate_prior(self) -> "PriorConfig":
        if self.kind == PriorKind.C and self.k_law is None:
            raise ValueError("prior kind C requires a k_law")
        if self.kind != PriorKind.C and self.k_law is not None:
            raise ValueError(f"k_law is only used by prior kind C, got kind {self.kind}")
        family = self.theta_family
        if isinstance(family, TruncatedGaussian) and self.beta is not None:
            bound = 4 * self.beta - 2 if self.kind == PriorKind.A else 2 * self.beta
            if not family.alpha < bound:
                raise ValueError(
                    f"truncated gaussian alpha={family.alpha} must be < {bound} "
                    f"for prior {self.kind}"
                )
        return self


class GeneratorKind(StrEnum):
    AUTO = "auto"
    CIRCULANT = "circulant"
    CHOLESKY = "cholesky"


class RngKind(StrEnum):
    PHILOX = "philox"
    PCG64 = "pcg64"


class SimulationConfig(BaseModel):
    """
    Exact Gaussian path simulation.

    Attributes:
        generator (GeneratorKind): auto = circulant embedding for power-of-two
            n, dense Cholesky otherwise or when the embedding stays indefinite.
        k_trunc (int): FEXP truncation order of infinite truths.
        rng (RngKind): Bit generator; Philox is counter based.
        cholesky_cap (int): Largest n simulated by dense Cholesky.
        max_embedding_factor (int): Embedding sizes are doubled up to this x n.
        tail_tolerance (float): Allowed relative change of gamma(0) from the
            truncated coefficient tail.
    """

    generator: GeneratorKind = GeneratorKind.AUTO
    k_trunc: int = Field(default=4096, ge=0)
    rng: RngKind = RngKind.PHILOX
    cholesky_cap: int = Field(default=8192, ge=1)
    max_embedding_factor: int = Field(default=8, ge=2)
    tail_tolerance: float = Field(default=1e-10, gt=0.0)


class AutocovMethod(StrEnum):
    AUTO = "auto"
    QUADRATURE = "quadrature"
    SERIES = "series"


class QuadratureConfig(BaseModel):
    """
    Singularity-aware quadrature on [0, pi].

    Attributes:
        order (int): Gauss-Legendre nodes per panel.
        floor (float): Dyadic refinement stops at this distance from 0.
        min_panels (int): Minimum number of uniform panels.
        tol (float): Convergence tolerance of the refinement loop.
        max_refinements (int): Panel doublings before giving up.
        method (AutocovMethod): Autocovariance engine.
    """

    order: int = Field(default=20, ge=4)
    floor: float = Field(default=1e-12, gt=0.0)
    min_panels: int = Field(default=64, ge=1)
    tol: float = Field(default=1e-10, gt=0.0)
    max_refinements: int = Field(default=4, ge=0)
    method: AutocovMethod = AutocovMethod.AUTO


class NumericsConfig(BaseModel):
    """
    Caps and finite-difference settings.

    Attributes:
        dense_cap (int): Largest n for dense trace/score diagnostics.
        levinson_cap (int): Largest n for the exact likelihood.
        fd_step (float): Finite-difference step in d.
        richardson (bool): Use Richardson extrapolation for d-derivatives.
        quadrature (QuadratureConfig): Quadrature settings.
    """

    dense_cap: int = Field(default=1024, ge=1)
    levinson_cap: int = Field(default=16384, ge=1)
    fd_step: float = Field(default=1e-4, gt=0.0)
    richardson: bool = False
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)


class SamplerConfig(BaseModel):
    """
    Random-walk Metropolis-Hastings settings.

    Attributes:
        warmup_fraction (float): Share of iterations discarded as warm-up.
        target_acceptance (tuple[float, float]): Adaptation band.
        adapt_interval (int): Iterations between scale updates.
        initial_d_scale (float): Starting proposal sd for d.
        initial_theta_scale (float): Starting proposal sd per theta coordinate.
    """

    warmup_fraction: float = Field(default=0.25, ge=0.0, lt=1.0)
    target_acceptance: tuple[float, float] = (0.25, 0.40)
    adapt_interval: int = Field(default=50, ge=1)
    initial_d_scale: float = Field(default=0.02, gt=0.0)
    initial_theta_scale: float = Field(default=0.05, gt=0.0)

    @field_validator("target_acceptance")
    def validate_band(cls, v: tuple[float, float]) -> tuple[float, float]:
        lo, hi = v
        if not 0.0 < lo < hi < 1.0:
            raise ValueError(f"invalid acceptance band {v}")
        return v


class LikelihoodKind(StrEnum):
    EXACT = "exact"
    WHITTLE = "whittle"


class FitConfig(BaseModel):
    """
    Settings for fitting an observed path.

    Attributes:
        data (Optional[str]): Path CSV to fit.
        credible_levels (List[float]): Credible interval levels.
        gph_exponent (float): GPH bandwidth m = floor(n^exponent).
    """

    data: Optional[str] = None
    credible_levels: List[float] = Field(default_factory=lambda: [0.9, 0.95])
    gph_exponent: float = Field(default=0.5, gt=0.0, lt=1.0)

    @field_validator("credible_levels")
    def validate_levels(cls, v: List[float]) -> List[float]:
        if any(not 0.0 < level < 1.0 for level in v):
            raise ValueError("credible levels must lie in (0, 1)")
        return sorted(v)


class ExperimentConfig(BaseModel):
    """
    Everything a command needs to run reproducibly.

    Attributes:
        seed (int): Base seed.
        seed_stride (int): Replicate r uses seed + r * seed_stride.
        replicates (int): Replicate count.
        n_grid (List[int]): Sample sizes.
        iters (int): MCMC iterations per chain, warm-up included.
        jobs (Optional[int]): Worker processes; None means all cores.
        output_dir (str): Output directory.
        likelihood (LikelihoodKind): Exact Gaussian or Whittle.
        truth (TruthSpec): Data-generating truth.
        prior (PriorConfig): Prior.
        simulation (SimulationConfig): Path simulation.
        numerics (NumericsConfig): Caps and numerics.
        sampler (SamplerConfig): MCMC settings.
        fit (FitConfig): Fitting settings.

    Example:
        ```python
        ExperimentConfig(n_grid=[1024], replicates=4, truth={"d_o": 0.25})
        ```
    """

    seed: int = Field(default=20240607, ge=0)
    seed_stride: int = Field(default=10_000, ge=1)
    replicates: int = Field(default=20, ge=1)
    n_grid: List[int] = Field(default_factory=lambda: [4096])
    iters: int = Field(default=6700, ge=1000)
    jobs: Optional[int] = Field(default=None, ge=1)
    output_dir: str = "results"
    likelihood: LikelihoodKind = LikelihoodKind.EXACT
    truth: TruthSpec = Field(default_factory=TruthSpec)
    prior: PriorConfig = Field(default_factory=PriorConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    numerics: NumericsConfig = Field(default_factory=NumericsConfig)
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    fit: FitConfig = Field(default_factory=FitConfig)

    @field_validator("n_grid")
    def validate_n_grid(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("n_grid must not be empty")
        if any(n < 8 for n in v):
            raise ValueError("every n in n_grid must be >= 8")
        return sorted(v)

    @model_validator(mode="after")
    def validate_experiment(self) -> "ExperimentConfig":
        if self.prior.beta is None:
            # re-validate so the alpha constraint sees beta
            self.prior = PriorConfig(
                **{**self.prior.model_dump(), "beta": self.truth.beta}
            )
        if abs(self.truth.d_o) > 0.5 - self.prior.t:
            raise ValueError(
                f"d_o={self.truth.d_o} outside the prior d-support margin t={self.prior.t}"
            )
        return self


class ExperimentOverrides(BaseModel):
    """
    Command-line overrides of an ExperimentConfig. Unset options leave the
    file value in place.

    Attributes:
        seed (Optional[int]): Base seed.
        jobs (Optional[int]): Worker processes.
        output_dir (Optional[str]): Output directory.
        likelihood (Optional[LikelihoodKind]): Likelihood surrogate.
        data (Optional[str]): Path CSV for `fit`.
    """

    seed: Optional[int] = Field(default=None, ge=0)
    jobs: Optional[int] = Field(default=None, ge=1)
    output_dir: Optional[str] = None
    likelihood: Optional[LikelihoodKind] = None
    data: Optional[str] = None

    def defined_fields(self) -> Dict[str, Any]:
        """
        Returns a dictionary with only the fields that have been explicitly set,
        excluding default values and unset or None fields.
        """
        return self.model_dump(
            exclude_unset=True,
            exclude_defaults=True,
            exclude_none=True,
        )

    def apply(self, experiment: ExperimentConfig) -> ExperimentConfig:
        """Re-validated copy of ``experiment`` with the overrides merged in."""
        fields = self.defined_fields()
        data = experiment.model_dump()
        if "data" in fields:
            data["fit"]["data"] = fields.pop("data")
        data.update(fields)
        return ExperimentConfig.model_validate(data)


class AppConfig(BaseModel):
    """
    Top-level configuration schema.

    Attributes:
        logger (LoggerConfig): Logging configuration.
        experiment (ExperimentConfig): Experiment definition.

    Example:
        ```python
        AppConfig(logger=LoggerConfig(level="INFO"), experiment=ExperimentConfig())
        ```
    """

    logger: LoggerConfig = Field(default_factory=LoggerConfig)
    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)
