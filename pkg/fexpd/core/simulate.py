"""
Exact Gaussian paths with covariance T_n(f_o), the periodogram and the
log-periodogram (GPH) estimate of d.
"""

import math
from typing import Optional

import numpy as np
from loguru import logger
from scipy import linalg, stats

from fexpd.core.density import FexpDensity
from fexpd.core.exceptions import DomainError, EstimationError, SimulationError
from fexpd.core.models.config import GeneratorKind, QuadratureConfig, SimulationConfig
from fexpd.core.models.results import GphEstimate, Periodogram, SamplePath
from fexpd.core.models.spectral import FexpModel, TruthSpec
from fexpd.core.spectral import log_abs_transfer
from fexpd.core.toeplitz import autocov_from_density
from fexpd.core.utils import is_power_of_two, make_rng


def truth_model(truth: TruthSpec, k_trunc: int, tail_tolerance: float = 1e-10) -> FexpModel:
    """
    f_o as an FEXP model: exact for finitely supported rules, truncated at
    k_trunc otherwise.

    Raises:
        SimulationError: If the neglected tail can move gamma(0) by more than
            ``tail_tolerance`` (relative).
    """
    support = truth.support()
    if support is not None:
        return FexpModel.from_theta(truth.d_o, truth.coefficients(support))
    tail = truth.abs_tail_bound(k_trunc)
    # |log f - log f_k| <= tail everywhere
    relative = math.expm1(tail)
    if relative > tail_tolerance:
        raise SimulationError(
            message=(
                f"k_trunc={k_trunc} leaves a coefficient tail of {tail:.3e}; "
                f"increase k_trunc"
            ),
            detail={"k_trunc": k_trunc, "tail": tail, "tolerance": tail_tolerance},
        )
    return FexpModel.from_theta(truth.d_o, truth.coefficients(k_trunc))


def _circulant_eigenvalues(
    density: FexpDensity, n: int, config: SimulationConfig, quadrature: QuadratureConfig
) -> Optional[np.ndarray]:
    """Eigenvalues of the smallest PSD circulant embedding, or None."""
    size = 1 << max(1, math.ceil(math.log2(max(2, 2 * (n - 1)))))
    limit = config.max_embedding_factor * n
    while size <= max(limit, 2):
        half = size // 2
        gamma = autocov_from_density(density, half, quadrature).values
        row = np.concatenate([gamma, gamma[half - 1 : 0 : -1]])
        eigvals = np.fft.rfft(row).real
        smallest = eigvals.min()
        logger.debug(f"circulant embedding size={size}: min eigenvalue {smallest:.3e}")
        if smallest >= -1e-10 * eigvals.max():
            return np.clip(eigvals, 0.0, None)
        size *= 2
    return None


def _draw_circulant(
    eigvals: np.ndarray, n: int, rng: np.random.Generator
) -> np.ndarray:
    size = 2 * (len(eigvals) - 1)
    full = np.concatenate([eigvals, eigvals[-2:0:-1]])
    z = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return np.fft.fft(np.sqrt(full / size) * z).real[:n]


def _draw_cholesky(
    density: FexpDensity,
    n: int,
    config: SimulationConfig,
    quadrature: QuadratureConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    if n > config.cholesky_cap:
        raise SimulationError(
            message=f"n={n} exceeds the Cholesky cap {config.cholesky_cap}",
            detail={"n": n, "cap": config.cholesky_cap},
        )
    gamma = autocov_from_density(density, n - 1, quadrature).values
    try:
        lower = linalg.cholesky(linalg.toeplitz(gamma), lower=True)
    except linalg.LinAlgError as e:
        raise SimulationError(
            message=f"covariance is not positive definite: {e}", detail={"n": n}
        ) from e
    return lower @ rng.standard_normal(n)


def sample_path(
    truth: TruthSpec,
    n: int,
    seed: int,
    k_trunc: Optional[int] = None,
    config: Optional[SimulationConfig] = None,
    quadrature: Optional[QuadratureConfig] = None,
) -> SamplePath:
    """
    Exact draw from N(0, T_n(f_o)); deterministic given (truth, n, seed, config).

    Raises:
        SimulationError: If the tail truncation is too coarse, or the embedding
            is indefinite and n exceeds the Cholesky cap.
    """
    if n < 1:
        raise DomainError(message=f"n must be >= 1, got {n}")
    config = config or SimulationConfig()
    quadrature = quadrature or QuadratureConfig()
    k_trunc = config.k_trunc if k_trunc is None else k_trunc
    density = FexpDensity(truth_model(truth, k_trunc, config.tail_tolerance))
    rng = make_rng(seed, config.rng)

    generator = config.generator
    note = None
    if generator == GeneratorKind.AUTO:
        if is_power_of_two(n):
            generator = GeneratorKind.CIRCULANT
        else:
            generator = GeneratorKind.CHOLESKY
            note = f"n={n} is not a power of two; dense Cholesky used"

    if generator == GeneratorKind.CIRCULANT:
        eigvals = _circulant_eigenvalues(density, n, config, quadrature)
        if eigvals is None:
            note = (
                f"circulant embedding indefinite up to {config.max_embedding_factor}n; "
                f"dense Cholesky used"
            )
            logger.warning(note)
            generator = GeneratorKind.CHOLESKY
        else:
            values = _draw_circulant(eigvals, n, rng)

    if generator == GeneratorKind.CHOLESKY:
        values = _draw_cholesky(density, n, config, quadrature, rng)

    return SamplePath(
        values=values,
        seed=seed,
        truth_hash=truth.truth_hash(),
        generator=str(generator),
        note=note,
    )


def periodogram(path: SamplePath) -> Periodogram:
    """
    I(lambda_j) = |sum_t X_t e^{i t lambda_j}|^2 / (2 pi n) at lambda_j = 2 pi j / n,
    j = 1..floor(n/2).

    Raises:
        DomainError: If n < 8.
    """
    n = path.n
    if n < 8:
        raise DomainError(message=f"periodogram needs n >= 8, got {n}")
    m = n // 2
    dft = np.fft.rfft(path.values)[1 : m + 1]
    return Periodogram(
        frequencies=2.0 * np.pi * np.arange(1, m + 1) / n,
        ordinates=np.abs(dft) ** 2 / (2.0 * np.pi * n),
    )


def default_bandwidth(n: int, exponent: float = 0.5) -> int:
    return max(2, min(n // 4, int(math.floor(n**exponent))))


def gph_estimate(path: SamplePath, bandwidth: Optional[int] = None) -> GphEstimate:
    """
    Log-periodogram regression of log I(lambda_j) on -log(2 - 2 cos lambda_j)
    over the first ``bandwidth`` Fourier frequencies; the slope estimates d.

    Raises:
        DomainError: Unless 2 <= bandwidth <= n/4.
        EstimationError: If an ordinate is zero (degenerate regression).
    """
    n = path.n
    bandwidth = default_bandwidth(n) if bandwidth is None else bandwidth
    if not 2 <= bandwidth <= n // 4:
        raise DomainError(
            message=f"bandwidth must lie in [2, n/4], got {bandwidth} for n={n}"
        )
    pgram = periodogram(path)
    ordinates = pgram.ordinates[:bandwidth]
    if np.any(ordinates <= 0.0):
        raise EstimationError(
            message="periodogram ordinate is zero; regression is degenerate",
            detail={"bandwidth": bandwidth},
        )
    regressor = -log_abs_transfer(pgram.frequencies[:bandwidth])
    fit = stats.linregress(regressor, np.log(ordinates))
    estimate = float(fit.slope)
    return GphEstimate(
        d=estimate,
        stderr=float(fit.stderr),
        bandwidth=bandwidth,
        in_range=abs(estimate) < 0.5,
    )
