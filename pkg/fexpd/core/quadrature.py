"""
Gauss-Legendre quadrature on [0, pi] for integrands with an integrable
singularity at x = 0.

The interval is cut into uniform panels on [pi/P, pi] and dyadic panels
[pi/P 2^-(m+1), pi/P 2^-m] down to a floor. The piece below the floor is closed
analytically assuming the integrand behaves like c x^(-alpha) there.
"""

from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from loguru import logger

from fexpd.core.exceptions import QuadratureError
from fexpd.core.models.config import QuadratureConfig


@lru_cache(maxsize=32)
def _legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_rule(edges: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite rule over consecutive panel edges."""
    ref_nodes, ref_weights = _legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * ref_nodes[None, :]
    weights = half * ref_weights[None, :]
    return nodes.ravel(), weights.ravel()


@lru_cache(maxsize=64)
def singular_rule(
    panels: int, order: int, floor: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Composite rule on [floor, pi] refined dyadically toward 0.

    Returns nodes in increasing order and matching weights.
    """
    first = np.pi / panels
    if floor >= first:
        raise QuadratureError(
            message=f"quadrature floor {floor} must be below the first panel {first}"
        )
    levels = int(np.ceil(np.log2(first / floor)))
    dyadic = first * 2.0 ** -np.arange(levels, -1, -1)
    dyadic[0] = floor
    uniform = np.linspace(first, np.pi, panels)
    edges = np.concatenate([dyadic, uniform[1:]])
    nodes, weights = panel_rule(edges, order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def integrate_half_period(
    integrand: Callable[[np.ndarray], np.ndarray],
    panels: int,
    config: QuadratureConfig,
    alpha: float = 0.0,
) -> np.ndarray:
    """
    Integral over [0, pi] of ``integrand`` with a fixed panel count.

    ``integrand`` maps a node vector of shape (m,) to values of shape (m,) or
    (m, p); the result has shape () or (p,).
    """
    nodes, weights = singular_rule(panels, config.order, config.floor)
    values = np.asarray(integrand(nodes))
    body = np.tensordot(weights, values, axes=(0, 0))
    # x^(-alpha) closure on [0, floor]
    edge = np.asarray(integrand(np.array([config.floor])))[0]
    closure = edge * config.floor / (1.0 - alpha)
    return body + closure


def integrate_refined(
    integrand: Callable[[np.ndarray], np.ndarray],
    config: QuadratureConfig,
    alpha: float = 0.0,
    panels: int | None = None,
) -> np.ndarray:
    """
    Integral over [0, pi], doubling the panel count until two successive
    estimates agree to ``config.tol`` (absolute, per component).

    Raises:
        QuadratureError: If the refinement loop does not converge.
    """
    panels = max(panels or 0, config.min_panels)
    previous = integrate_half_period(integrand, panels, config, alpha)
    if config.max_refinements == 0:
        return previous
    gap = float("inf")
    for step in range(config.max_refinements):
        panels *= 2
        current = integrate_half_period(integrand, panels, config, alpha)
        gap = float(np.max(np.abs(current - previous)))
        logger.debug(f"quadrature refinement {step + 1}: panels={panels}, gap={gap:.3e}")
        if gap <= config.tol:
            return current
        previous = current
    raise QuadratureError(
        message=f"quadrature did not converge after {config.max_refinements} refinements",
        detail={"panels": panels, "gap": gap},
    )
