import hashlib
import math
from enum import StrEnum
from typing import Annotated, Callable, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic.json_schema import SkipJsonSchema

# Direct summation horizon for slowly decaying coefficient rules.
SUM_HORIZON = 1_000_000


class FexpModel(BaseModel):
    """
    A point (d, k, theta) of the FEXP spectral family

        f(x) = (2 - 2 cos x)^(-d) * exp(sum_{j=0..k} theta_j cos(j x)).

    Attributes:
        d (float): Long-memory parameter, |d| < 1/2.
        k (int): Truncation order.
        theta (tuple[float, ...]): Cosine coefficients theta_0..theta_k.

    Example:
        ```python
        FexpModel(d=0.25, k=1, theta=(0.0, 0.3))
        FexpModel.from_theta(0.1, [0.0, 0.3, -0.1])
        ```
    """

    model_config = ConfigDict(frozen=True)

    d: float
    k: int = Field(ge=0)
    theta: tuple[float, ...]

    @field_validator("d")
    def validate_d(cls, v: float) -> float:
        if not abs(v) < 0.5:
            raise ValueError(f"d must satisfy |d| < 1/2, got {v}")
        return v

    @model_validator(mode="after")
    def validate_theta(self) -> "FexpModel":
        if len(self.theta) != self.k + 1:
            raise ValueError(
                f"theta must have k+1={self.k + 1} entries, got {len(self.theta)}"
            )
        if not all(math.isfinite(t) for t in self.theta):
            raise ValueError("theta entries must be finite")
        return self

    @classmethod
    def from_theta(cls, d: float, theta) -> "FexpModel":
        coefficients = tuple(float(t) for t in np.atleast_1d(theta))
        return cls(d=float(d), k=len(coefficients) - 1, theta=coefficients)

    @property
    def coefficients(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)

    def padded(self, k: int) -> np.ndarray:
        """Theta zero-padded (or truncated) to length k+1."""
        out = np.zeros(k + 1)
        m = min(k, self.k) + 1
        out[:m] = self.theta[:m]
        return out


class RuleKind(StrEnum):
    FINITE = "finite"
    POWER_LAW = "power_law"
    CUSTOM = "custom"


class FiniteRule(BaseModel):
    """
    Finitely supported truth coefficients.

    Attributes:
        coefficients (list[float]): theta_{o,0..K}; zero beyond K.
    """

    kind: Literal[RuleKind.FINITE] = RuleKind.FINITE
    coefficients: list[float] = Field(default_factory=lambda: [0.0])

    @field_validator("coefficients")
    def validate_coefficients(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("coefficients must not be empty")
        if not all(math.isfinite(c) for c in v):
            raise ValueError("coefficients must be finite")
        return v

    def values(self, j: np.ndarray, beta: float) -> np.ndarray:
        coeffs = np.asarray(self.coefficients, dtype=float)
        out = np.zeros(j.shape)
        inside = j < len(coeffs)
        out[inside] = coeffs[j[inside]]
        return out

    def support(self) -> Optional[int]:
        return len(self.coefficients) - 1

    def abs_tail_bound(self, k: int, beta: float) -> float:
        return float(np.sum(np.abs(self.coefficients[k + 1 :])))

    def sobolev_tail_bound(self, k: int, beta: float) -> float:
        tail = np.asarray(self.coefficients[k + 1 :], dtype=float)
        j = np.arange(k + 1, k + 1 + len(tail))
        return float(np.sum(tail**2 * (1.0 + j) ** (2 * beta)))


class PowerLawRule(BaseModel):
    """
    theta_{o,j} = c_0 j^(-(beta+1/2)) / log j for j >= 2, zero for j < 2.

    Attributes:
        c_0 (Optional[float]): Amplitude. When omitted it is set so that the
            Sobolev seminorm bound equals ``fill * L_o``.
        fill (float): Fraction of the Sobolev radius used when c_0 is derived.
    """

    kind: Literal[RuleKind.POWER_LAW] = RuleKind.POWER_LAW
    c_0: Optional[float] = None
    fill: float = Field(default=1.0, gt=0.0, le=1.0)

    def values(self, j: np.ndarray, beta: float) -> np.ndarray:
        j = np.asarray(j)
        out = np.zeros(j.shape)
        mask = j >= 2
        jj = j[mask].astype(float)
        out[mask] = (self.c_0 or 0.0) * jj ** (-(beta + 0.5)) / np.log(jj)
        return out

    def support(self) -> Optional[int]:
        return None

    def abs_tail_bound(self, k: int, beta: float) -> float:
        # sum_{j>k} j^-(b+1/2)/log j <= k^(1/2-b) / ((b - 1/2) log k)
        k = max(k, 2)
        c = abs(self.c_0 or 0.0)
        return c * k ** (0.5 - beta) / ((beta - 0.5) * math.log(k))

    def sobolev_tail_bound(self, k: int, beta: float) -> float:
        # (1+j)^(2b) j^(-2b-1) / log^2 j <= (1+1/k)^(2b) / (j log^2 j)
        k = max(k, 2)
        c = self.c_0 or 0.0
        return c**2 * (1.0 + 1.0 / k) ** (2 * beta) / math.log(k)

    @staticmethod
    def unit_seminorm_bound(beta: float, horizon: int = SUM_HORIZON) -> float:
        """Seminorm bound of the rule with c_0 = 1."""
        j = np.arange(2, horizon + 1, dtype=float)
        partial = np.sum((1.0 + j) ** (2 * beta) * j ** (-2 * beta - 1) / np.log(j) ** 2)
        tail = (1.0 + 1.0 / horizon) ** (2 * beta) / math.log(horizon)
        return float(partial + tail)


class CustomRule(BaseModel):
    """
    User supplied coefficient rule (in-process API only).

    Attributes:
        func (Callable): Maps an integer array j to theta_{o,j}.
        abs_tail (Callable): k -> bound on sum_{j>k} |theta_{o,j}|.
        sobolev_tail (Callable): (k, beta) -> bound on the seminorm tail.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: Literal[RuleKind.CUSTOM] = RuleKind.CUSTOM
    func: SkipJsonSchema[Callable[[np.ndarray], np.ndarray]] = Field(exclude=True)
    abs_tail: SkipJsonSchema[Callable[[int], float]] = Field(exclude=True)
    sobolev_tail: SkipJsonSchema[Callable[[int, float], float]] = Field(exclude=True)

    def values(self, j: np.ndarray, beta: float) -> np.ndarray:
        return np.asarray(self.func(np.asarray(j)), dtype=float)

    def support(self) -> Optional[int]:
        return None

    def abs_tail_bound(self, k: int, beta: float) -> float:
        return float(self.abs_tail(k))

    def sobolev_tail_bound(self, k: int, beta: float) -> float:
        return float(self.sobolev_tail(k, beta))


CoefficientRule = Annotated[
    Union[FiniteRule, PowerLawRule, CustomRule], Field(discriminator="kind")
]


class TruthSpec(BaseModel):
    """
    The data-generating truth f_o = f_{d_o, infinity, theta_o}.

    Attributes:
        d_o (float): True long-memory parameter.
        beta (float): Sobolev smoothness, > 1.
        L_o (float): Sobolev radius of theta_o.
        t (float): Margin; d_o must lie in [-1/2 + t, 1/2 - t].
        rule (CoefficientRule): How theta_{o,j} is generated.

    Example:
        ```python
        TruthSpec(d_o=0.25, beta=3.0, L_o=1.0, rule={"kind": "finite",
                  "coefficients": [0.2, -0.1]})
        TruthSpec(d_o=0.2, beta=3.0, L_o=100.0, rule={"kind": "power_law"})
        ```
    """

    d_o: float = 0.0
    beta: float = Field(default=3.0, gt=1.0)
    L_o: float = Field(default=1.0, gt=0.0)
    t: float = Field(default=0.05, gt=0.0, lt=0.5)
    rule: CoefficientRule = Field(default_factory=FiniteRule)

    @model_validator(mode="after")
    def validate_truth(self) -> "TruthSpec":
        if abs(self.d_o) > 0.5 - self.t:
            raise ValueError(
                f"d_o={self.d_o} outside [{-0.5 + self.t}, {0.5 - self.t}]"
            )
        if isinstance(self.rule, PowerLawRule) and self.rule.c_0 is None:
            unit = PowerLawRule.unit_seminorm_bound(self.beta)
            c_0 = math.sqrt(self.rule.fill * self.L_o / unit)
            self.rule = self.rule.model_copy(update={"c_0": c_0})
        bound = self.sobolev_bound()
        if bound > self.L_o * (1.0 + 1e-9):
            raise ValueError(
                f"theta_o Sobolev seminorm bound {bound:.6g} exceeds L_o={self.L_o}"
            )
        return self

    def coefficients(self, k: int) -> np.ndarray:
        """theta_{o,0..k}."""
        return self.rule.values(np.arange(k + 1), self.beta)

    def support(self) -> Optional[int]:
        return self.rule.support()

    def sobolev_bound(self, horizon: Optional[int] = None) -> float:
        """Partial seminorm up to ``horizon`` plus the rule's analytic tail."""
        support = self.support()
        if support is not None:
            horizon = support
        elif horizon is None:
            horizon = SUM_HORIZON
        theta = self.coefficients(horizon)
        j = np.arange(horizon + 1)
        partial = float(np.sum(theta**2 * (1.0 + j) ** (2 * self.beta)))
        if support is not None:
            return partial
        return partial + self.rule.sobolev_tail_bound(horizon, self.beta)

    def abs_tail_bound(self, k: int) -> float:
        return self.rule.abs_tail_bound(k, self.beta)

    def eta_tail_sum(self, k: int) -> float:
        """
        sum_{j>k} (2/j) theta_{o,j}, i.e. minus sum_{j>k} eta_j theta_{o,j}.

        Finite rules are summed exactly; infinite rules are summed directly to
        max(10^6, 1000 k) and closed with an integral tail estimate.
        """
        support = self.support()
        if support is not None:
            if support <= k:
                return 0.0
            j = np.arange(k + 1, support + 1)
            return float(np.sum(2.0 / j * self.rule.values(j, self.beta)))

        horizon = max(SUM_HORIZON, 1000 * k)
        j = np.arange(k + 1, horizon + 1)
        # sum smallest terms first
        terms = (2.0 / j * self.rule.values(j, self.beta))[::-1]
        total = float(np.sum(terms))
        if isinstance(self.rule, PowerLawRule):
            a = self.beta + 0.5
            x = horizon + 0.5
            total += 2.0 * self.rule.c_0 * x ** (-a) / (a * math.log(x))
        return total

    def truth_hash(self) -> str:
        payload = self.model_dump_json()
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class RateConstants(BaseModel):
    """
    Sieve sizes and rate scales at sample size n.

    Attributes:
        n (int): Sample size.
        beta (float): Smoothness.
        k_A (float): Prior-A sieve constant.
        k_B (float): Prior-B sieve constant.
        t (float): d-support margin.
        L (float): Sobolev radius of the prior support.
        L_o (float): Sobolev radius of the truth.
        l_0 (float): Ball-radius constant.
        C_1 (float): Rate constant.
        k_n (int): floor(k_A (n/log n)^(1/(2 beta))).
        k_n_prime (int): floor(k_B (n/log n)^(1/(1 + 2 beta))).
        delta_n (float): (n/log n)^(-(2 beta - 1)/(4 beta)).
        eps_n (float): (n/log n)^(-beta/(2 beta + 1)).
        vbar_n (float): d-neighbourhood scale.
        w_n (float): Prior-B rate scale.
    """

    n: int
    beta: float
    k_A: float
    k_B: float
    t: float
    L: float
    L_o: float
    l_0: float = 1.0
    C_1: float = 1.0
    k_n: int
    k_n_prime: int
    delta_n: float
    eps_n: float
    vbar_n: float
    w_n: float
