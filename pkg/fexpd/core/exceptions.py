from typing import Any, Optional


class FexpdError(Exception):
    """
    Base error for every failure raised by fexpd.

    Attributes:
        message (str): Human-readable description.
        code (str): Stable machine-readable error code.
        detail (Any): Extra context (failing step, offending state, ...).
        exit_code (int): Process exit code used by the CLI.
    """

    default_code = "ERROR"
    default_exit_code = 1

    def __init__(
        self,
        *,
        message: str,
        code: Optional[str] = None,
        detail: Optional[Any] = None,
        exit_code: Optional[int] = None,
    ):
        self.message = message
        self.code = code or self.default_code
        self.detail = detail
        self.exit_code = exit_code if exit_code is not None else self.default_exit_code
        super().__init__(message)

    def as_dict(self) -> dict[str, Any]:
        return {
            "code": self.code,
            "message": self.message,
            "detail": self.detail,
            "exit_code": self.exit_code,
        }


class ConfigurationError(FexpdError):
    default_code = "CONFIG_INVALID"
    default_exit_code = 2


class DataError(FexpdError):
    default_code = "DATA_INVALID"
    default_exit_code = 2


class DomainError(FexpdError, ValueError):
    default_code = "DOMAIN"


class QuadratureError(FexpdError):
    default_code = "QUADRATURE"


class ToeplitzBreakdownError(FexpdError):
    """Levinson recursion hit a non-positive prediction variance."""

    default_code = "TOEPLITZ_BREAKDOWN"

    @property
    def step(self) -> Optional[int]:
        if isinstance(self.detail, dict):
            return self.detail.get("step")
        return None


class SizeLimitError(FexpdError):
    default_code = "SIZE_LIMIT"


class SimulationError(FexpdError):
    default_code = "SIMULATION"


class EstimationError(FexpdError):
    default_code = "ESTIMATION"


class SamplerError(FexpdError):
    default_code = "SAMPLER"
