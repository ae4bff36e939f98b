"""Periodic grids on the unit torus, sampled vector fields and their norms.

All spectral operators act on the trailing ``n`` axes of an array, so the
same code path serves a single field of shape ``(ncomp, N, ..., N)`` and a
whole trajectory of shape ``(nsnap, ncomp, N, ..., N)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError, EvaluationError, ShapeError

__all__ = [
    "Grid",
    "VectorField",
    "NormReport",
    "make_grid",
    "sample",
    "sup_norm",
    "spectral_derivative",
    "c01_norm",
    "c12_norm",
    "norm_report",
    "curl2d",
]


@dataclass(frozen=True)
class Grid:
    """Uniform lattice with ``points_per_axis`` nodes per axis on ``[0, 1)^n``."""

    n: int
    points_per_axis: int
    spacing: float = field(init=False)

    def __post_init__(self):
        n, N = self.n, self.points_per_axis
        if not isinstance(n, (int, np.integer)) or not 1 <= n <= 3:
            raise ConfigurationError(f"dimension n must be 1, 2 or 3, got {n!r}")
        if not isinstance(N, (int, np.integer)) or N < 8 or N & (N - 1):
            raise ConfigurationError(
                f"points_per_axis must be a power of two >= 8, got {N!r}"
            )
        # exact for powers of two
        object.__setattr__(self, "spacing", 1.0 / N)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.n

    @property
    def size(self) -> int:
        return self.points_per_axis**self.n

    @property
    def axes(self) -> tuple[int, ...]:
        """Trailing array axes holding the spatial directions."""
        return tuple(range(-self.n, 0))

    def nodes(self) -> np.ndarray:
        """1D node coordinates ``j * spacing``."""
        return np.arange(self.points_per_axis) * self.spacing

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Node coordinates as ``n`` arrays of shape :attr:`shape` (``ij`` indexing)."""
        x = self.nodes()
        return tuple(np.meshgrid(*([x] * self.n), indexing="ij"))

    # spectral helpers -----------------------------------------------------

    def fft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(values, axes=self.axes)

    def ifft(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(coeffs, s=self.shape, axes=self.axes)

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer wavenumbers per axis, broadcastable to the rfftn layout."""
        return _wavenumbers(self.n, self.points_per_axis)

    def k_squared(self) -> np.ndarray:
        """``|2 pi k|^2`` on the rfftn layout."""
        return _k_squared(self.n, self.points_per_axis)


@lru_cache(maxsize=None)
def _wavenumbers(n, N):
    out = []
    for axis in range(n):
        if axis == n - 1:
            k = np.fft.rfftfreq(N, 1.0 / N)
        else:
            k = np.fft.fftfreq(N, 1.0 / N)
        shape = [1] * n
        shape[axis] = k.size
        k = k.reshape(shape)
        k.setflags(write=False)
        out.append(k)
    return tuple(out)


@lru_cache(maxsize=None)
def _k_squared(n, N):
    k2 = sum((2.0 * np.pi * k) ** 2 for k in _wavenumbers(n, N))
    k2 = np.asarray(k2, dtype=float)
    k2.setflags(write=False)
    return k2


@lru_cache(maxsize=None)
def _derivative_multiplier(n, N, axis, order):
    k = _wavenumbers(n, N)[axis]
    if order == 1:
        mult = 2j * np.pi * k
        # the Nyquist mode has no odd-derivative partner on a real grid
        mult = np.where(np.abs(k) == N // 2, 0.0, mult)
    elif order == 2:
        mult = -((2.0 * np.pi * k) ** 2) + 0j
    else:
        raise ConfigurationError(f"derivative order must be 1 or 2, got {order!r}")
    mult.setflags(write=False)
    return mult


def make_grid(n: int, points_per_axis: int) -> Grid:
    """Build a :class:`Grid`; raises :class:`ConfigurationError` on bad sizes."""
    return Grid(n, points_per_axis)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Field sampled on ``grid`` at one instant.

    ``components`` has shape ``(ncomp,) + grid.shape`` and is stored
    read-only.  ``ncomp`` equals ``grid.n`` for velocity fields and 1 for
    scalar results such as :func:`curl2d`.
    """

    grid: Grid
    components: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self):
        comps = np.array(self.components, dtype=np.float64, copy=True)
        if comps.shape == self.grid.shape:
            comps = comps[None]
        if comps.shape[1:] != self.grid.shape or comps.shape[0] not in (1, self.grid.n):
            raise ShapeError(
                f"components of shape {comps.shape} do not fit grid {self.grid.shape} "
                f"with n={self.grid.n}"
            )
        if not np.all(np.isfinite(comps)):
            raise EvaluationError("field contains non-finite values")
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "time_tag", float(self.time_tag))

    @property
    def ncomp(self) -> int:
        return self.components.shape[0]

    def with_components(self, components, time_tag=None) -> "VectorField":
        tag = self.time_tag if time_tag is None else time_tag
        return VectorField(self.grid, components, tag)

    def __add__(self, other):
        _check_same_grid(self, other)
        return self.with_components(self.components + other.components)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return self.with_components(self.components - other.components)

    def __mul__(self, scalar):
        return self.with_components(self.components * float(scalar))

    __rmul__ = __mul__


def _check_same_grid(a: VectorField, b: VectorField):
    if a.grid != b.grid or a.components.shape != b.components.shape:
        raise ShapeError(f"grid mismatch: {a.grid} vs {b.grid}")


def sample(
    grid: Grid,
    f: Callable[..., Sequence[np.ndarray] | np.ndarray | float],
    time_tag: float = 0.0,
) -> VectorField:
    """Evaluate ``f(x_1, ..., x_n)`` on the grid nodes.

    ``f`` receives the ``n`` coordinate arrays and returns either ``n``
    component arrays (scalars broadcast) or, for one-component output, a
    single array.
    """
    coords = grid.mesh()
    with np.errstate(all="ignore"):
        out = f(*coords)
    if isinstance(out, (list, tuple)):
        comps = np.stack([np.broadcast_to(np.asarray(c, dtype=float), grid.shape) for c in out])
    else:
        arr = np.asarray(out, dtype=float)
        if arr.shape == (grid.n,) + grid.shape:
            comps = arr
        else:
            comps = np.broadcast_to(arr, grid.shape)[None]
            if grid.n > 1:
                comps = np.repeat(comps, grid.n, axis=0)
    if not np.all(np.isfinite(comps)):
        raise EvaluationError("sampled function is not finite on the grid nodes")
    return VectorField(grid, comps, time_tag)


# array-level operators -------------------------------------------------------


def derivative_values(values: np.ndarray, grid: Grid, axis: int, order: int = 1) -> np.ndarray:
    """Fourier derivative of ``values`` along spatial ``axis`` (trailing axes)."""
    if not 0 <= axis < grid.n:
        raise DimensionError(f"axis {axis} out of range for n={grid.n}")
    mult = _derivative_multiplier(grid.n, grid.points_per_axis, axis, order)
    return grid.ifft(mult * grid.fft(values))


def gradient_values(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Stack of first derivatives; the new axis is inserted before the spatial axes."""
    coeffs = grid.fft(values)
    N = grid.points_per_axis
    grads = [grid.ifft(_derivative_multiplier(grid.n, N, j, 1) * coeffs) for j in range(grid.n)]
    return np.stack(grads, axis=values.ndim - grid.n)


def laplacian_values(values: np.ndarray, grid: Grid) -> np.ndarray:
    return grid.ifft(-grid.k_squared() * grid.fft(values))


def _spatial_sup(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Max of ``|values|`` over the spatial axes, keeping leading axes."""
    return np.max(np.abs(values), axis=grid.axes)


def sup_values(values: np.ndarray) -> float:
    return float(np.max(np.abs(values))) if values.size else 0.0


def c01_values(values: np.ndarray, grid: Grid) -> float:
    """``|.|_{0,1}`` of an array ``(..., ncomp, *shape)``: max over leading axes and components."""
    total = _spatial_sup(values, grid)
    coeffs = grid.fft(values)
    for j in range(grid.n):
        mult = _derivative_multiplier(grid.n, grid.points_per_axis, j, 1)
        total = total + _spatial_sup(grid.ifft(mult * coeffs), grid)
    return float(np.max(total))


def c12_values(values: np.ndarray, time_derivative: np.ndarray, grid: Grid) -> float:
    """``|.|_{1,2}`` with the supplied instantaneous time derivative."""
    if np.shape(time_derivative) != np.shape(values):
        raise ShapeError(
            f"time derivative shape {np.shape(time_derivative)} != field shape {np.shape(values)}"
        )
    N = grid.points_per_axis
    coeffs = grid.fft(values)
    total = _spatial_sup(values, grid)
    firsts = []
    for j in range(grid.n):
        d = _derivative_multiplier(grid.n, N, j, 1) * coeffs
        firsts.append(d)
        total = total + _spatial_sup(grid.ifft(d), grid)
    total = total + _spatial_sup(time_derivative, grid)
    for i in range(grid.n):
        for j in range(grid.n):
            if i == j:
                d2 = _derivative_multiplier(grid.n, N, i, 2) * coeffs
            else:
                d2 = _derivative_multiplier(grid.n, N, i, 1) * firsts[j]
            total = total + _spatial_sup(grid.ifft(d2), grid)
    return float(np.max(total))


# field-level API -------------------------------------------------------------


def sup_norm(field: VectorField) -> float:
    """Discrete ``|.|_0``: max over components and nodes."""
    return sup_values(field.components)


def spectral_derivative(field: VectorField, axis: int, order: int = 1) -> VectorField:
    """Derivative of every component along ``axis`` by Fourier differentiation."""
    return field.with_components(derivative_values(field.components, field.grid, axis, order))


def c01_norm(field: VectorField) -> float:
    return c01_values(field.components, field.grid)


def c12_norm(field: VectorField, time_derivative: VectorField) -> float:
    if time_derivative.grid != field.grid:
        raise ShapeError(f"grid mismatch: {field.grid} vs {time_derivative.grid}")
    return c12_values(field.components, time_derivative.components, field.grid)


@dataclass(frozen=True)
class NormReport:
    sup: float
    c01: float
    c12: float
    per_component_sup: tuple[float, ...]


def norm_report(field: VectorField, time_derivative: VectorField | None = None) -> NormReport:
    """All three norms at once; a missing time derivative counts as zero."""
    if time_derivative is None:
        dt = np.zeros_like(field.components)
    else:
        if time_derivative.grid != field.grid:
            raise ShapeError(f"grid mismatch: {field.grid} vs {time_derivative.grid}")
        dt = time_derivative.components
    per = tuple(float(np.max(np.abs(c))) for c in field.components)
    return NormReport(
        sup=sup_norm(field),
        c01=c01_norm(field),
        c12=c12_values(field.components, dt, field.grid),
        per_component_sup=per,
    )


def curl2d(field: VectorField) -> VectorField:
    """Scalar curl ``d u_2/d x_1 - d u_1/d x_2`` of a planar field."""
    if field.grid.n != 2 or field.ncomp != 2:
        raise DimensionError("curl2d needs a two-component field on a 2D grid")
    u1, u2 = field.components
    g = field.grid
    curl = derivative_values(u2, g, 0) - derivative_values(u1, g, 1)
    return VectorField(g, curl[None], field.time_tag)
