"""Vectorised composite Gauss-Legendre quadrature with panel doubling.

The aperture and drift averages integrate whole arrays of functions at once
(one row per drift offset), which ``scipy.integrate.quad`` cannot do.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import NumericalError

_ORDER = 16


@lru_cache(maxsize=None)
def _legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


def composite_nodes(lo: float, hi: float, panels: int, order: int = _ORDER):
    """Nodes and weights of a composite Gauss-Legendre rule on ``[lo, hi]``."""
    x, w = _legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate_rows(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    rtol: float = 1e-8,
    atol: float = 0.0,
    panels: int = 4,
    max_panels: int = 4096,
) -> np.ndarray:
    """Integrate ``f(nodes) -> (..., n_nodes)`` along its last axis over ``[lo, hi]``.

    Panels are doubled until two successive levels agree to ``rtol`` (relative
    to the largest result) or ``atol``.
    """
    nodes, weights = composite_nodes(lo, hi, panels)
    prev = f(nodes) @ weights
    while True:
        panels *= 2
        nodes, weights = composite_nodes(lo, hi, panels)
        cur = f(nodes) @ weights
        err = np.max(np.abs(cur - prev)) if np.size(cur) else 0.0
        scale = np.max(np.abs(cur)) if np.size(cur) else 0.0
        if err <= max(rtol * scale, atol):
            return cur
        if panels >= max_panels:
            raise NumericalError("composite Gauss-Legendre did not converge", err / scale if scale else err)
        prev = cur
