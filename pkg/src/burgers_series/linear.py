"""Linear advection-diffusion subproblems on the unit torus.

Each subproblem has the form

    dw/dtau = rho (nu Lap w - sum_j b_j dw/dx_j) + g,    tau in [tau_0, tau_0 + 1],

with a frozen drift ``b`` and a source ``g`` that are piecewise constant in
``tau`` (sampled at the left end of every internal stage).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigurationError, DimensionError, InstabilityError, ShapeError
from .fields import (
    Grid,
    VectorField,
    _derivative_multiplier,
    gradient_values,
    laplacian_values,
    sup_values,
)
from .kernels import KernelParams, ParametrixKernel, ParametrixSeries

__all__ = [
    "Trajectory",
    "LinearProblem",
    "solve_linear",
    "solve_correction",
    "cross_check_backends",
    "advection_rhs",
]

BACKENDS = ("spectral", "parametrix")
DEFAULT_SUBSTEPS = 64
GROWTH_LIMIT = 10.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots of a field at strictly increasing times.

    ``values`` has shape ``(nsnap, ncomp, *grid.shape)``; ``rhs`` holds the
    instantaneous right-hand side at each snapshot (used for ``|.|_{1,2}``).
    """

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        rhs = np.asarray(self.rhs, dtype=float)
        if times.ndim != 1 or times.size < 1:
            raise ShapeError("times must be a non-empty 1D array")
        if np.any(np.diff(times) <= 0):
            raise ConfigurationError("trajectory times must be strictly increasing")
        if values.shape[0] != times.size or values.shape[2:] != self.grid.shape:
            raise ShapeError(f"values of shape {values.shape} do not match {times.size} snapshots")
        if rhs.shape != values.shape:
            raise ShapeError("rhs and values must have the same shape")
        for arr in (times, values, rhs):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "rhs", rhs)

    @classmethod
    def constant(cls, field: VectorField, times) -> "Trajectory":
        times = np.asarray(times, dtype=float)
        vals = np.broadcast_to(field.components, (times.size,) + field.components.shape).copy()
        return cls(field.grid, times, vals, np.zeros_like(vals))

    @classmethod
    def zeros(cls, grid: Grid, times, ncomp: int | None = None) -> "Trajectory":
        times = np.asarray(times, dtype=float)
        shape = (times.size, grid.n if ncomp is None else ncomp) + grid.shape
        return cls(grid, times, np.zeros(shape), np.zeros(shape))

    def __len__(self):
        return self.times.size

    @property
    def ncomp(self) -> int:
        return self.values.shape[1]

    @property
    def tau_span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def snapshot(self, j: int) -> VectorField:
        return VectorField(self.grid, self.values[j], self.times[j])

    @property
    def snapshots(self) -> list[VectorField]:
        return [self.snapshot(j) for j in range(len(self))]

    @property
    def rhs_snapshots(self) -> list[VectorField]:
        return [VectorField(self.grid, self.rhs[j], self.times[j]) for j in range(len(self))]

    @property
    def initial(self) -> VectorField:
        return self.snapshot(0)

    @property
    def final(self) -> VectorField:
        return self.snapshot(len(self) - 1)

    def sample_index(self, tau) -> np.ndarray:
        """Index of the last snapshot at or before ``tau`` (clipped to the range)."""
        idx = np.searchsorted(self.times, np.asarray(tau, dtype=float), side="right") - 1
        return np.clip(idx, 0, len(self) - 1)

    def _check_compatible(self, other: "Trajectory"):
        if other.grid != self.grid or other.values.shape != self.values.shape:
            raise ShapeError("trajectories live on different grids or snapshot counts")
        if not np.array_equal(other.times, self.times):
            raise ShapeError("trajectories have different snapshot times")

    def __add__(self, other: "Trajectory") -> "Trajectory":
        self._check_compatible(other)
        return Trajectory(self.grid, self.times, self.values + other.values, self.rhs + other.rhs)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        self._check_compatible(other)
        return Trajectory(self.grid, self.times, self.values - other.values, self.rhs - other.rhs)


Coefficient = Union[Trajectory, VectorField, None]


@dataclass(frozen=True, eq=False)
class LinearProblem:
    """One linear subproblem over a unit ``tau`` interval.

    ``drift`` and ``source`` may be trajectories (piecewise constant between
    snapshots), single fields (constant in ``tau``) or ``None`` (zero).
    """

    rho: float
    nu: float
    initial: VectorField
    drift: Coefficient = None
    source: Coefficient = None
    tau_span: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigurationError(f"rho must be > 0, got {self.rho!r}")
        if not self.nu > 0:
            raise ConfigurationError(f"nu must be > 0, got {self.nu!r}")
        t0, t1 = (float(v) for v in self.tau_span)
        if abs((t1 - t0) - 1.0) > 1e-12:
            raise ConfigurationError(f"tau_span must have unit length, got {self.tau_span!r}")
        object.__setattr__(self, "tau_span", (t0, t1))
        g = self.initial.grid
        for name in ("drift", "source"):
            coef = getattr(self, name)
            if coef is None:
                continue
            if coef.grid != g:
                raise ShapeError(f"{name} lives on a different grid")
            if isinstance(coef, Trajectory):
                lo, hi = coef.tau_span
                if lo > t0 + 1e-12 or (len(coef) > 1 and hi < t1 - 1e-12):
                    raise ConfigurationError(f"{name} trajectory does not cover tau_span")
        if self.drift is not None and _ncomp(self.drift) != g.n:
            raise ShapeError("drift must have n components")
        if self.source is not None and _ncomp(self.source) != self.initial.ncomp:
            raise ShapeError("source and initial data must have the same component count")

    @property
    def grid(self) -> Grid:
        return self.initial.grid


def _ncomp(coef):
    return coef.ncomp


def _coefficient_at(coef: Coefficient, tau: float):
    if coef is None:
        return None
    if isinstance(coef, VectorField):
        return coef.components
    return coef.values[int(coef.sample_index(tau))]


def advection_rhs(w: np.ndarray, grid: Grid, rho: float, nu: float, drift, source=None) -> np.ndarray:
    """Right-hand side ``rho (nu Lap w - b . grad w) + g`` for arrays ``(ncomp, *shape)``."""
    out = nu * laplacian_values(w, grid)
    if drift is not None:
        grad = gradient_values(w, grid)
        out = out - np.sum(drift[None] * grad, axis=1)
    out = rho * out
    if source is not None:
        out = out + source
    return out


def _spectral_stepper(grid: Grid, rho, nu, dtau, mean_drift=None):
    """ETD1 factors ``E = exp(L dtau)`` and ``phi1 = (E - 1)/L``.

    ``L = -rho nu |2 pi k|^2 - rho i 2 pi k . mean_drift`` is diagonal in
    Fourier space, so constant drift is propagated exactly.
    """
    lam = -rho * nu * grid.k_squared() + 0j
    if mean_drift is not None:
        for j, bj in enumerate(mean_drift):
            if bj != 0.0:
                lam = lam - rho * bj * _derivative_multiplier(grid.n, grid.points_per_axis, j, 1)
    z = lam * dtau
    E = np.exp(z)
    small = np.abs(z) < 1e-3
    safe = np.where(small, 1.0, z)
    # Taylor branch avoids cancellation in E - 1 near z = 0
    series = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    phi1 = dtau * np.where(small, series, (E - 1.0) / safe)
    return E, phi1


def _split_drift(drift, grid: Grid):
    """Spatial mean of each drift component and the zero-mean remainder."""
    if drift is None:
        return None, None
    mean = np.mean(drift, axis=grid.axes)
    return tuple(float(m) for m in mean), drift - mean.reshape(mean.shape + (1,) * grid.n)


def _advection_and_source(w, grid, rho, drift, source):
    if drift is None:
        explicit = np.zeros_like(w)
    else:
        explicit = -rho * np.sum(drift[None] * gradient_values(w, grid), axis=1)
    if source is not None:
        explicit = explicit + source
    return explicit


def _guard(w_new, w_old, source, dtau, stage):
    bound = GROWTH_LIMIT * (sup_values(w_old) + dtau * (0.0 if source is None else sup_values(source)))
    s = sup_values(w_new)
    if not np.isfinite(s) or (s > bound and s > 1e-300):
        raise InstabilityError(
            f"stage {stage}: sup norm grew from {sup_values(w_old):.3e} to {s:.3e}", stage=stage
        )


def solve_linear(
    problem: LinearProblem,
    backend: str = "spectral",
    substeps: int = DEFAULT_SUBSTEPS,
    series: ParametrixSeries | None = None,
    lattice_truncation: int = 5,
) -> Trajectory:
    """Solve a :class:`LinearProblem` on ``substeps`` uniform internal stages.

    Parameters
    ----------
    problem : LinearProblem
    backend : {"spectral", "parametrix"}
        ``spectral`` integrates diffusion and the mean drift exactly and the
        remaining advection plus source with an exponential Euler step.  ``parametrix`` (``n = 1`` only)
        propagates each stage with the truncated Levy parametrix and adds
        the source by midpoint Duhamel quadrature.
    substeps : int
        Number of internal stages; the returned trajectory holds
        ``substeps + 1`` snapshots.
    series : ParametrixSeries, optional
        Truncation and quadrature for the parametrix backend.

    Raises
    ------
    InstabilityError
        If one stage grows the sup norm more than tenfold.
    """
    if backend not in BACKENDS:
        raise ConfigurationError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if not isinstance(substeps, (int, np.integer)) or substeps < 1:
        raise ConfigurationError(f"substeps must be a positive integer, got {substeps!r}")
    grid = problem.grid
    t0, t1 = problem.tau_span
    times = t0 + np.arange(substeps + 1) / substeps
    times[-1] = t1
    dtau = 1.0 / substeps
    rho, nu = problem.rho, problem.nu

    values = np.empty((substeps + 1,) + problem.initial.components.shape)
    rhs = np.empty_like(values)
    values[0] = problem.initial.components

    if backend == "spectral":
        cache = {}
        for j in range(substeps):
            b = _coefficient_at(problem.drift, times[j])
            g = _coefficient_at(problem.source, times[j])
            mean, b = _split_drift(b, grid)
            if mean not in cache:
                cache.clear()
                cache[mean] = _spectral_stepper(grid, rho, nu, dtau, mean)
            E, phi1 = cache[mean]
            w = values[j]
            explicit = _advection_and_source(w, grid, rho, b, g)
            values[j + 1] = grid.ifft(E * grid.fft(w) + phi1 * grid.fft(explicit))
            _guard(values[j + 1], w, g, dtau, j)
    else:
        if grid.n != 1:
            raise DimensionError("the parametrix backend supports n = 1 only")
        series = series or ParametrixSeries()
        params = KernelParams(nu, grid.n, lattice_truncation)
        q = series.quadrature_nodes_time
        for j in range(substeps):
            s, t = times[j], times[j + 1]
            b = _coefficient_at(problem.drift, s)
            g = _coefficient_at(problem.source, s)
            drift = None if b is None else VectorField(grid, b)
            w = values[j]
            new = ParametrixKernel(grid, drift, series, params, s, t, rho).apply(w)
            if g is not None and np.any(g):
                for r in range(q):
                    sigma = s + (r + 0.5) * (t - s) / q
                    kern = ParametrixKernel(grid, drift, series, params, sigma, t, rho)
                    new = new + (t - s) / q * kern.apply(g)
            values[j + 1] = new
            _guard(new, w, g, dtau, j)

    for j in range(substeps + 1):
        b = _coefficient_at(problem.drift, times[j])
        g = _coefficient_at(problem.source, times[j])
        rhs[j] = advection_rhs(values[j], grid, rho, nu, b, g)
    return Trajectory(grid, times, values, rhs)


def correction_source(u_prev: Trajectory, delta_prev: Trajectory, rho: float) -> Trajectory:
    """Source ``-rho sum_j delta_j d u_i / d x_j`` at every snapshot of ``delta_prev``."""
    u_prev._check_compatible(delta_prev)
    grid = u_prev.grid
    grad = gradient_values(u_prev.values, grid)  # (S, ncomp, n, *shape)
    src = -rho * np.sum(delta_prev.values[:, None] * grad, axis=2)
    return Trajectory(grid, u_prev.times, src, np.zeros_like(src))


def solve_correction(
    u_prev: Trajectory,
    delta_prev: Trajectory,
    rho: float,
    nu: float,
    backend: str = "spectral",
    substeps: int | None = None,
    series: ParametrixSeries | None = None,
) -> Trajectory:
    """Next correction term: drift ``u_prev``, zero data, source from ``delta_prev``.

    ``substeps`` defaults to the snapshot spacing of ``u_prev`` so the
    result lives on the same times.
    """
    source = correction_source(u_prev, delta_prev, rho)
    grid = u_prev.grid
    zero = VectorField(grid, np.zeros(u_prev.values.shape[1:]), u_prev.times[0])
    problem = LinearProblem(rho, nu, zero, drift=u_prev, source=source, tau_span=u_prev.tau_span)
    return solve_linear(problem, backend, substeps or len(u_prev) - 1, series)


def cross_check_backends(
    problem: LinearProblem,
    substeps: int = DEFAULT_SUBSTEPS,
    series: ParametrixSeries | None = None,
) -> float:
    """Sup discrepancy at ``tau_end`` between the spectral and parametrix backends."""
    g = problem.grid
    if g.n != 1 or g.points_per_axis > 128:
        raise ConfigurationError("cross-check needs n = 1 and at most 128 points")
    a = solve_linear(problem, "spectral", substeps)
    b = solve_linear(problem, "parametrix", substeps, series)
    return sup_values(a.values[-1] - b.values[-1])
