"""
Spectral-density descriptors.

A descriptor evaluates a density on (0, pi], knows the exponent of its
singularity at 0 and, for the FEXP family, produces exact autocovariances by
convolving the closed-form fractional autocovariance with the Fourier
coefficients of the smooth factor.
"""

import math
from abc import ABC, abstractmethod
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from loguru import logger
from scipy import signal, special

from fexpd.core.exceptions import DomainError, QuadratureError
from fexpd.core.models.spectral import FexpModel
from fexpd.core.spectral import eta_vector, fexp_eval, h_tail_eval

# Smooth-factor coefficients below this fraction of the largest are dropped.
_COEFF_CUTOFF = 1e-17
_MAX_FFT = 1 << 22


def fractional_autocov(d: float, maxlag: int) -> np.ndarray:
    """
    Autocovariances of |1 - e^{ix}|^(-2d):
    gamma(0) = 2 pi Gamma(1-2d) / Gamma(1-d)^2,
    gamma(h) = gamma(h-1) (h-1+d) / (h-d).
    """
    if not abs(d) < 0.5:
        raise DomainError(message=f"|d| must be < 1/2, got {d}")
    if maxlag < 0:
        raise DomainError(message=f"maxlag must be >= 0, got {maxlag}")
    g0 = 2.0 * math.pi * math.exp(special.gammaln(1 - 2 * d) - 2 * special.gammaln(1 - d))
    h = np.arange(1, maxlag + 1, dtype=float)
    out = np.empty(maxlag + 1)
    out[0] = g0
    out[1:] = g0 * np.cumprod((h - 1 + d) / (h - d))
    return out


def fractional_autocov_derivative(d: float, maxlag: int) -> np.ndarray:
    """d/dd of fractional_autocov."""
    gamma = fractional_autocov(d, maxlag)
    if d == 0.0:
        out = np.empty(maxlag + 1)
        out[0] = 0.0
        out[1:] = 2.0 * math.pi / np.arange(1, maxlag + 1)
        return out
    h = np.arange(1, maxlag + 1, dtype=float)
    log_g0 = 2.0 * (special.digamma(1 - d) - special.digamma(1 - 2 * d))
    log_steps = np.concatenate([[0.0], np.cumsum(1.0 / (h - 1 + d) + 1.0 / (h - d))])
    return gamma * (log_g0 + log_steps)


def _grid_cosine(coefficients: np.ndarray, size: int) -> np.ndarray:
    """sum_j c_j cos(j x_l) on x_l = 2 pi l / size, for len(c) <= size / 2."""
    half = np.zeros(size // 2 + 1)
    half[: len(coefficients)] = coefficients
    half[1:] *= 0.5
    return np.fft.irfft(half, n=size) * size


def smooth_coefficients(
    theta: np.ndarray, weight: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    Fourier cosine coefficients a_0..a_M of exp(sum_j theta_j cos jx), or of
    that function times sum_j weight_j cos jx, so that the function equals
    sum_{|m|<=M} a_|m| e^{imx}.
    """
    theta = np.asarray(theta, dtype=float)
    size = 1 << max(6, int(math.ceil(math.log2(4 * (len(theta) + 1)))))
    while True:
        values = np.exp(_grid_cosine(theta, size))
        if weight is not None:
            values = values * _grid_cosine(weight, size)
        a = np.fft.rfft(values).real / size
        scale = np.max(np.abs(a))
        if scale == 0.0:
            return np.zeros(1)
        tail = np.max(np.abs(a[size // 4 :]))
        if tail <= 1e-15 * scale or size >= _MAX_FFT:
            break
        size *= 2
    keep = np.nonzero(np.abs(a[: size // 4]) > _COEFF_CUTOFF * scale)[0]
    return a[: keep[-1] + 1] if len(keep) else a[:1]


def _convolve_symmetric(
    coefficients: np.ndarray, gamma: np.ndarray, maxlag: int
) -> np.ndarray:
    """sum_{|m|<=M} a_|m| gamma(|h+m|) for h = 0..maxlag."""
    m = len(coefficients) - 1
    two_sided = np.concatenate([coefficients[:0:-1], coefficients])
    lags = np.abs(np.arange(-m, maxlag + m + 1))
    if len(two_sided) < 64:
        return np.correlate(gamma[lags], two_sided, mode="valid")
    return signal.fftconvolve(gamma[lags], two_sided[::-1], mode="valid")


class SpectralDensity(ABC):
    """An even, integrable spectral density on [-pi, pi]."""

    #: Exponent alpha of the x^(-alpha) singularity at 0 (0 when bounded).
    singular_exponent: float = 0.0

    @abstractmethod
    def __call__(self, x: np.ndarray) -> np.ndarray: ...

    @property
    def supports_series(self) -> bool:
        return False

    def series_autocovariance(self, maxlag: int) -> np.ndarray:
        raise DomainError(message=f"{self.describe()} has no series autocovariance")

    def describe(self) -> str:
        return type(self).__name__

    def reciprocal(self) -> "SpectralDensity":
        """1 / (4 pi^2 f)."""
        return CallableDensity(
            lambda x: 1.0 / (4.0 * np.pi**2 * self(x)),
            name=f"reciprocal({self.describe()})",
        )


class ConstantDensity(SpectralDensity):
    def __init__(self, value: float):
        if not value > 0:
            raise DomainError(message=f"constant density must be > 0, got {value}")
        self.value = float(value)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.full(np.shape(x), self.value)

    @property
    def supports_series(self) -> bool:
        return True

    def series_autocovariance(self, maxlag: int) -> np.ndarray:
        out = np.zeros(maxlag + 1)
        out[0] = 2.0 * np.pi * self.value
        return out

    def describe(self) -> str:
        return f"constant({self.value:.12g})"

    def reciprocal(self) -> "ConstantDensity":
        return ConstantDensity(1.0 / (4.0 * np.pi**2 * self.value))


class FexpDensity(SpectralDensity):
    """f_{d,k,theta}; autocovariances by the fractional series."""

    def __init__(self, model: FexpModel):
        self.model = model
        self.singular_exponent = max(0.0, 2.0 * model.d)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(fexp_eval(self.model, x))

    @property
    def supports_series(self) -> bool:
        return True

    @cached_property
    def _coefficients(self) -> np.ndarray:
        return smooth_coefficients(self.model.coefficients)

    def series_autocovariance(self, maxlag: int) -> np.ndarray:
        a = self._coefficients
        gamma = fractional_autocov(self.model.d, maxlag + len(a))
        return _convolve_symmetric(a, gamma, maxlag)

    def describe(self) -> str:
        return f"fexp(d={self.model.d:.12g}, k={self.model.k})"

    def reciprocal(self) -> "FexpDensity":
        theta = -self.model.coefficients
        theta[0] -= math.log(4.0 * math.pi**2)
        return FexpDensity(FexpModel.from_theta(-self.model.d, theta))


class FexpScoreDensity(SpectralDensity):
    """
    H_k f_{d,k,theta}, the d-derivative of f along theta_j -> theta_j + eta_j dd.
    """

    def __init__(self, model: FexpModel):
        self.model = model
        self.singular_exponent = max(0.0, 2.0 * model.d)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(h_tail_eval(self.model.k, x)) * fexp_eval(self.model, x)

    @property
    def supports_series(self) -> bool:
        return True

    def series_autocovariance(self, maxlag: int) -> np.ndarray:
        theta = self.model.coefficients
        a = smooth_coefficients(theta)
        b = smooth_coefficients(theta, weight=eta_vector(self.model.k))
        m = max(len(a), len(b))
        a = np.pad(a, (0, m - len(a)))
        b = np.pad(b, (0, m - len(b)))
        gamma = fractional_autocov(self.model.d, maxlag + m)
        dgamma = fractional_autocov_derivative(self.model.d, maxlag + m)
        return _convolve_symmetric(a, dgamma, maxlag) + _convolve_symmetric(
            b, gamma, maxlag
        )

    def describe(self) -> str:
        return f"fexp_score(d={self.model.d:.12g}, k={self.model.k})"


class CallableDensity(SpectralDensity):
    def __init__(
        self,
        func: Callable[[np.ndarray], np.ndarray],
        singular_exponent: float = 0.0,
        name: str = "callable",
    ):
        if not 0.0 <= singular_exponent < 1.0:
            raise DomainError(
                message=f"singular exponent must lie in [0, 1), got {singular_exponent}"
            )
        self.func = func
        self.singular_exponent = singular_exponent
        self.name = name

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def describe(self) -> str:
        return self.name


class ProductDensity(SpectralDensity):
    """Pointwise product; used for Szego limits."""

    def __init__(self, factors: Sequence[SpectralDensity]):
        if not factors:
            raise DomainError(message="a product needs at least one factor")
        self.factors = list(factors)
        self.singular_exponent = sum(f.singular_exponent for f in self.factors)
        if self.singular_exponent >= 1.0:
            raise QuadratureError(
                message="product density is not integrable at 0",
                detail={"singular_exponent": self.singular_exponent},
            )
        logger.debug(f"product of {len(self.factors)} densities, alpha={self.singular_exponent}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        out = np.ones(np.shape(x))
        for f in self.factors:
            out = out * f(x)
        return out

    def describe(self) -> str:
        return " * ".join(f.describe() for f in self.factors)


def as_density(value) -> SpectralDensity:
    """Coerce a FexpModel, a positive number or a descriptor."""
    if isinstance(value, SpectralDensity):
        return value
    if isinstance(value, FexpModel):
        return FexpDensity(value)
    if isinstance(value, (int, float)):
        return ConstantDensity(float(value))
    raise DomainError(message=f"cannot interpret {type(value).__name__} as a spectral density")
