"""Arctan compactification ``y_i = arctan(x_i)`` of R^n onto (-pi/2, pi/2)^n.

With ``u(x) = v(y(x))`` the chain rule gives

    du/dx_j          = v_{y_j} c_j,
    d2u/dx_j dx_k    = v_{y_j y_k} c_j c_k + delta_jk v_{y_j} c_j'(x_j),

where ``c_j = 1/(1 + tan^2 y_j)`` and ``c_j' = -2 tan(y_j) c_j^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "CompactPoint",
    "to_compact",
    "from_compact",
    "first_derivative_factor",
    "second_derivative_terms",
]

HALF_PI = 0.5 * np.pi


@dataclass(frozen=True, eq=False)
class CompactPoint:
    """Point of the open cube ``(-pi/2, pi/2)^n``."""

    y: np.ndarray

    def __post_init__(self):
        y = np.atleast_1d(np.array(self.y, dtype=float))
        if y.ndim != 1:
            raise DimensionError("a compact point is a 1D coordinate vector")
        if not np.all(np.abs(y) < HALF_PI):
            raise DomainError(f"coordinates must lie strictly inside (-pi/2, pi/2), got {y}")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size


def to_compact(x) -> CompactPoint:
    return CompactPoint(np.arctan(np.atleast_1d(np.asarray(x, dtype=float))))


def from_compact(y) -> np.ndarray:
    """Inverse map ``x_i = tan(y_i)``; boundary coordinates raise :class:`DomainError`."""
    point = y if isinstance(y, CompactPoint) else CompactPoint(y)
    return np.tan(point.y)


def _as_point(y) -> CompactPoint:
    return y if isinstance(y, CompactPoint) else CompactPoint(y)


def _factor(yj: float) -> float:
    t = np.tan(yj)
    return 1.0 / (1.0 + t * t)


def first_derivative_factor(y, j: int) -> float:
    """``1/(1 + tan^2 y_j)``, the factor turning ``v_{y_j}`` into ``du/dx_j``."""
    p = _as_point(y)
    if not 0 <= j < p.n:
        raise DimensionError(f"axis {j} out of range for n={p.n}")
    return float(_factor(p.y[j]))


def second_derivative_terms(y, j: int, k: int) -> tuple[float, float]:
    """Coefficients of ``v_{y_j y_k}`` and ``v_{y_j}`` in ``d2u/dx_j dx_k``.

    Returns ``(c_j c_k, -delta_jk 2 tan(y_k) c_j c_k)``.  On the diagonal the
    first entry is ``1/(1 + tan^2 y_j)^2``.
    """
    p = _as_point(y)
    if not (0 <= j < p.n and 0 <= k < p.n):
        raise DimensionError(f"axes ({j}, {k}) out of range for n={p.n}")
    cj, ck = _factor(p.y[j]), _factor(p.y[k])
    first = cj * ck
    second = -2.0 * np.tan(p.y[k]) * cj * ck if j == k else 0.0
    return float(first), float(second)
