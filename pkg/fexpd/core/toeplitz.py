"""
Toeplitz operators T_n(f) with entries gamma(|l - m|) = integral over [-pi, pi]
of e^{i|l-m|x} f(x) dx. No 1/(2 pi) is folded into the entries: T_n(1) = 2 pi I.
"""

from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy import linalg

from fexpd.core.density import ProductDensity, SpectralDensity, as_density
from fexpd.core.exceptions import (
    DomainError,
    SizeLimitError,
    ToeplitzBreakdownError,
)
from fexpd.core.models.config import (
    AutocovMethod,
    NumericsConfig,
    QuadratureConfig,
    RngKind,
)
from fexpd.core.models.results import AutocovSequence, QuadformTailReport, TraceProduct
from fexpd.core.quadrature import integrate_refined
from fexpd.core.utils import make_rng

# Lags integrated together by the quadrature engine.
_LAG_BLOCK = 128


def _quadrature_autocov(
    f: SpectralDensity, maxlag: int, config: QuadratureConfig
) -> np.ndarray:
    out = np.empty(maxlag + 1)
    for start in range(0, maxlag + 1, _LAG_BLOCK):
        lags = np.arange(start, min(start + _LAG_BLOCK, maxlag + 1))

        def integrand(x: np.ndarray, lags: np.ndarray = lags) -> np.ndarray:
            return np.cos(np.outer(x, lags)) * f(x)[:, None]

        panels = max(config.min_panels, int(lags[-1]))
        out[lags] = 2.0 * integrate_refined(
            integrand, config, alpha=f.singular_exponent, panels=panels
        )
    return out


def autocov_from_density(
    f: Union[SpectralDensity, float],
    maxlag: int,
    config: Optional[QuadratureConfig] = None,
) -> AutocovSequence:
    """
    gamma(0..maxlag) of a spectral density.

    ``config.method`` selects the engine: ``series`` is exact for the FEXP
    family, ``quadrature`` works for any descriptor, ``auto`` prefers series.

    Raises:
        DomainError: If maxlag < 0 or series is forced on a descriptor without it.
        QuadratureError: If the quadrature does not converge.
    """
    if maxlag < 0:
        raise DomainError(message=f"maxlag must be >= 0, got {maxlag}")
    f = as_density(f)
    config = config or QuadratureConfig()
    method = config.method
    if method == AutocovMethod.AUTO:
        method = AutocovMethod.SERIES if f.supports_series else AutocovMethod.QUADRATURE

    if method == AutocovMethod.SERIES:
        values = f.series_autocovariance(maxlag)
    else:
        values = _quadrature_autocov(f, maxlag, config)
    return AutocovSequence(values=values, source=f"{f.describe()} [{method}]")


class _Durbin(NamedTuple):
    logdet: float
    reflections: np.ndarray
    predictor: np.ndarray
    variance: float


def _durbin(gamma: np.ndarray) -> _Durbin:
    """
    Durbin recursion on the first row: log-determinant, reflection
    coefficients, and the order n-1 predictor with its innovation variance.

    Raises:
        ToeplitzBreakdownError: At the first non-positive prediction variance.
    """
    n = len(gamma)
    if not gamma[0] > 0:
        raise ToeplitzBreakdownError(
            message="gamma(0) must be positive", detail={"step": 0}
        )
    phi = np.zeros(n)
    reflections = np.zeros(n)
    variance = gamma[0]
    logdet = np.log(variance)
    for m in range(1, n):
        kappa = (gamma[m] - phi[: m - 1] @ gamma[m - 1 : 0 : -1]) / variance
        if m > 1:
            phi[: m - 1] = phi[: m - 1] - kappa * phi[m - 2 :: -1]
        phi[m - 1] = kappa
        reflections[m] = kappa
        variance *= 1.0 - kappa * kappa
        if not variance > 0:
            raise ToeplitzBreakdownError(
                message=f"Levinson recursion broke down at step {m}",
                detail={"step": m, "reflection": float(kappa)},
            )
        logdet += np.log(variance)
    return _Durbin(float(logdet), reflections, phi[: n - 1].copy(), float(variance))


def _lower_matvec(column: np.ndarray, x: np.ndarray) -> np.ndarray:
    """L(c) x for the lower triangular Toeplitz matrix with first column c."""
    row = np.zeros_like(column)
    row[0] = column[0]
    return linalg.matmul_toeplitz((column, row), x)


def _upper_matvec(column: np.ndarray, x: np.ndarray) -> np.ndarray:
    """L(c)' x."""
    first = np.zeros_like(column)
    first[0] = column[0]
    return linalg.matmul_toeplitz((first, column), x)


class ToeplitzOperator:
    """
    Symmetric positive definite Toeplitz matrix held by its first row.

    The Durbin factorization runs once at construction and the operator is
    immutable afterwards. Solves use the Gohberg-Semencul form

        T^{-1} = (L(a) L(a)' - L(b) L(b)') / sigma^2,

    with a = (1, -phi_1, ..., -phi_{n-1}) the order n-1 prediction-error
    filter, b = (0, a_{n-1}, ..., a_1) and sigma^2 its innovation variance,
    so each solve costs four FFT products.

    Attributes:
        n (int): Dimension.
        gamma (AutocovSequence): First row gamma(0..n-1).
        logdet (float): log det T_n.
        reflections (np.ndarray): Partial autocorrelations, index 1..n-1.
    """

    def __init__(self, gamma: AutocovSequence, n: int):
        self.n = n
        row = np.array(gamma.values[:n], dtype=float)
        row.setflags(write=False)
        self.gamma = AutocovSequence(values=row, source=gamma.source)
        factor = _durbin(row)
        self.logdet = factor.logdet
        self.reflections = factor.reflections
        self.reflections.setflags(write=False)
        self._filter = np.concatenate([[1.0], -factor.predictor])
        self._reversed = np.concatenate([[0.0], self._filter[:0:-1]])
        self._variance = factor.variance

    @property
    def first_row(self) -> np.ndarray:
        return self.gamma.values

    def dense(self) -> np.ndarray:
        return linalg.toeplitz(self.first_row)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return linalg.matmul_toeplitz(self.first_row, np.asarray(x, dtype=float))

    def solve(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.n == 1:
            return x / self._variance
        a, b = self._filter, self._reversed
        left = _lower_matvec(a, _upper_matvec(a, x))
        right = _lower_matvec(b, _upper_matvec(b, x))
        return (left - right) / self._variance

    def __repr__(self) -> str:
        return f"ToeplitzOperator(n={self.n}, source={self.gamma.source!r})"


def build(
    gamma: AutocovSequence, n: int, cap: Optional[int] = None
) -> ToeplitzOperator:
    """
    Operator with first row gamma(0..n-1).

    Raises:
        SizeLimitError: If gamma has fewer than n lags or n exceeds ``cap``.
        ToeplitzBreakdownError: If the matrix is not positive definite.
    """
    if n < 1:
        raise DomainError(message=f"n must be >= 1, got {n}")
    if gamma.maxlag < n - 1:
        raise SizeLimitError(
            message=f"need {n} lags, got {gamma.maxlag + 1}",
            detail={"n": n, "maxlag": gamma.maxlag},
        )
    if cap is not None and n > cap:
        raise SizeLimitError(
            message=f"n={n} exceeds the Levinson cap {cap}", detail={"n": n, "cap": cap}
        )
    return ToeplitzOperator(gamma, n)


def logdet_solve(
    op: ToeplitzOperator, x: np.ndarray
) -> Tuple[float, np.ndarray, float]:
    """
    log det T_n, T_n^{-1} x and x' T_n^{-1} x.

    Raises:
        DomainError: If len(x) != n.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (op.n,):
        raise DomainError(
            message=f"vector of length {op.n} expected, got shape {x.shape}"
        )
    solution = op.solve(x)
    return op.logdet, solution, float(x @ solution)


def toeplitz_matrix(
    f: Union[SpectralDensity, float], n: int, config: Optional[QuadratureConfig] = None
) -> np.ndarray:
    """Dense T_n(f)."""
    return linalg.toeplitz(autocov_from_density(f, n - 1, config).values)


def _check_dense(n: int, numerics: NumericsConfig) -> None:
    if n > numerics.dense_cap:
        raise SizeLimitError(
            message=f"n={n} exceeds the dense cap {numerics.dense_cap}",
            detail={"n": n, "cap": numerics.dense_cap},
        )


def trace_product(
    densities: Sequence[Union[SpectralDensity, float]],
    n: int,
    numerics: Optional[NumericsConfig] = None,
) -> TraceProduct:
    """
    (1/n) tr[prod_j T_n(f_j)] by dense products, and its Szego limit
    (2 pi)^(m-1) integral over [-pi, pi] of prod_j f_j for m densities.

    Raises:
        SizeLimitError: If n exceeds the dense cap.
    """
    numerics = numerics or NumericsConfig()
    if not densities:
        raise DomainError(message="trace_product needs at least one density")
    _check_dense(n, numerics)
    factors = [as_density(f) for f in densities]

    product = toeplitz_matrix(factors[0], n, numerics.quadrature)
    for f in factors[1:]:
        product = product @ toeplitz_matrix(f, n, numerics.quadrature)
    exact = float(np.trace(product)) / n

    joint = ProductDensity(factors)
    integral = 2.0 * float(
        integrate_refined(joint, numerics.quadrature, alpha=joint.singular_exponent)
    )
    limit = (2.0 * np.pi) ** (len(factors) - 1) * integral
    logger.debug(f"trace product n={n}: exact={exact:.10g}, limit={limit:.10g}")
    return TraceProduct(exact=exact, szego_limit=limit, n=n, factors=len(factors))


def _sqrtm_psd(matrix: np.ndarray) -> np.ndarray:
    eigvals, eigvecs = linalg.eigh(matrix)
    if eigvals[0] <= 0:
        raise DomainError(
            message="Toeplitz matrix is not positive definite",
            detail={"min_eigenvalue": float(eigvals[0])},
        )
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.T


def inverse_approx_residual(
    f: Union[SpectralDensity, float],
    n: int,
    numerics: Optional[NumericsConfig] = None,
) -> float:
    """
    Frobenius norm of I - T^{1/2}(f) T(1/(4 pi^2 f)) T^{1/2}(f).

    Raises:
        DomainError: If T_n(f) is not positive definite.
        SizeLimitError: If n exceeds the dense cap.
    """
    numerics = numerics or NumericsConfig()
    _check_dense(n, numerics)
    f = as_density(f)
    root = _sqrtm_psd(toeplitz_matrix(f, n, numerics.quadrature))
    inverse = toeplitz_matrix(f.reciprocal(), n, numerics.quadrature)
    residual = np.eye(n) - root @ inverse @ root
    return float(np.linalg.norm(residual, "fro"))


def quadform_tail_exceedance(
    matrix: np.ndarray,
    trials: int,
    seed: int,
    alpha: float = 0.5,
    threshold: Optional[float] = None,
    rng_kind: RngKind = RngKind.PHILOX,
    batch: int = 1000,
) -> QuadformTailReport:
    """
    Fraction of trials with Y'AY - tr(A) > threshold for Y ~ N(0, I_n).

    ``matrix`` is either a symmetric n x n matrix with unit Frobenius norm or
    its eigenvalue vector; the statistic equals sum_i lambda_i (Z_i^2 - 1).
    The default threshold is n^alpha.

    Raises:
        DomainError: If trials < 1000, A is not symmetric or not unit-norm.
    """
    if trials < 1000:
        raise DomainError(message=f"trials must be >= 1000, got {trials}")
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim == 2:
        if not np.allclose(matrix, matrix.T):
            raise DomainError(message="A must be symmetric")
        eigvals = linalg.eigvalsh(matrix)
    else:
        eigvals = matrix
    norm = float(np.sqrt(np.sum(eigvals**2)))
    if abs(norm - 1.0) > 1e-8:
        raise DomainError(message=f"A must have unit Frobenius norm, got {norm}")

    n = len(eigvals)
    threshold = float(n**alpha) if threshold is None else float(threshold)
    rng = make_rng(seed, rng_kind)
    exceed = 0
    done = 0
    while done < trials:
        size = min(batch, trials - done)
        z = rng.standard_normal((size, n))
        stats = (z * z - 1.0) @ eigvals
        exceed += int(np.count_nonzero(stats > threshold))
        done += size

    rate = exceed / trials
    bound = float(np.exp(-threshold / 8.0))
    slack = 3.0 * float(np.sqrt(bound * (1.0 - bound) / trials))
    return QuadformTailReport(
        exceedance=rate,
        bound=bound,
        slack=slack,
        threshold=threshold,
        trials=trials,
        passed=rate <= bound + slack,
    )
