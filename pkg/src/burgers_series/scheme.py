"""Global time-stepping scheme built from Picard correction series.

Step ``l`` (zero based) covers ``tau in [l, l + 1]`` with dilation
``rho_{l+1}`` from the schedule, i.e. physical time
``t = T_l + rho_{l+1} (tau - l)``.  Within a step the solution is

    u = u^1 + sum_{k >= 1} delta^{k+1},

where ``u^1`` solves the linear problem with the step's first drift ``b^1``
and every correction solves the linearized difference equation driven by the
previous correction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SolverConfig
from .errors import ConfigurationError, RangeError, StepFailure
from .fields import VectorField, c01_values, c12_values, gradient_values, laplacian_values, make_grid, sup_values
from .kernels import KernelParams, ParametrixSeries, estimate_cstar
from .linear import LinearProblem, Trajectory, solve_correction, solve_linear

__all__ = [
    "ScheduleEntry",
    "Schedule",
    "PicardRecord",
    "PicardTrace",
    "StepResult",
    "GlobalSolution",
    "build_schedule",
    "first_substep",
    "picard_step",
    "run_global",
    "residual",
    "cstar_n_for",
]

C0_FLOOR = 1e-3
PROBE_POINTS = 64


@dataclass(frozen=True)
class ScheduleEntry:
    l: int
    rho: float
    C: float
    T: float


@dataclass(frozen=True)
class Schedule:
    """Step sizes ``rho_l = 1/(4 C*_n C_{l-1})`` with ``C_l = C_{l-1} + 1``."""

    c0: float
    c_star_n: float
    entries: tuple[ScheduleEntry, ...]

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, l: int) -> ScheduleEntry:
        """Entry with 1-based index ``l``."""
        if not 1 <= l <= len(self.entries):
            raise IndexError(f"schedule has entries 1..{len(self.entries)}, asked for {l}")
        return self.entries[l - 1]

    @property
    def rhos(self) -> np.ndarray:
        return np.array([e.rho for e in self.entries])

    @property
    def horizons(self) -> np.ndarray:
        return np.array([e.T for e in self.entries])


def build_schedule(c0: float, c_star_n: float, steps: int) -> Schedule:
    """Schedule of ``steps`` entries; ``T_l`` is the running sum of ``rho``."""
    if not c0 > 0:
        raise ConfigurationError(f"c0 must be > 0, got {c0!r}")
    if not c_star_n >= 1:
        raise ConfigurationError(f"c_star_n must be >= 1, got {c_star_n!r}")
    if steps < 0:
        raise ConfigurationError(f"steps must be >= 0, got {steps!r}")
    entries = []
    T = 0.0
    for l in range(1, steps + 1):
        rho = 1.0 / (4.0 * c_star_n * (c0 + (l - 1)))
        T = T + rho
        entries.append(ScheduleEntry(l, rho, c0 + l, T))
    return Schedule(float(c0), float(c_star_n), tuple(entries))


@dataclass(frozen=True)
class PicardRecord:
    k: int
    sup: float
    c01: float
    c12: float
    ratio: float | None


@dataclass
class PicardTrace:
    """Norms of the correction terms of one step (one attempt per ``retry``)."""

    step_index: int
    rho: float
    retry: int = 0
    records: list[PicardRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def substeps_used(self) -> int:
        return len(self.records)

    @property
    def ratios(self) -> list[float]:
        return [r.ratio for r in self.records if r.ratio is not None]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios, default=0.0)


@dataclass(frozen=True, eq=False)
class StepResult:
    """Summed solution of one step together with its first-substep term."""

    l: int
    rho: float
    t_start: float
    trajectory: Trajectory
    first: Trajectory
    traces: tuple[PicardTrace, ...]

    @property
    def t_end(self) -> float:
        return self.t_start + self.rho

    def physical_times(self) -> np.ndarray:
        return self.t_start + self.rho * (self.trajectory.times - self.l)


@dataclass(eq=False)
class GlobalSolution:
    """Stitched steps; the end field of step ``l`` is the start field of step ``l + 1``."""

    initial: VectorField
    nu: float
    schedule: Schedule
    steps: list[StepResult] = field(default_factory=list)

    @property
    def grid(self):
        return self.initial.grid

    @property
    def final(self) -> VectorField:
        if not self.steps:
            return self.initial
        return self.steps[-1].trajectory.final

    @property
    def final_time(self) -> float:
        return self.steps[-1].t_end if self.steps else 0.0

    @property
    def traces(self) -> list[PicardTrace]:
        return [t for s in self.steps for t in s.traces]

    @property
    def effective_rhos(self) -> list[float]:
        return [s.rho for s in self.steps]

    def sup_norms(self) -> np.ndarray:
        """Sup norm of every snapshot, steps concatenated (seams repeated)."""
        if not self.steps:
            return np.array([sup_values(self.initial.components)])
        return np.concatenate([
            np.max(np.abs(s.trajectory.values.reshape(len(s.trajectory), -1)), axis=1)
            for s in self.steps
        ])

    def running_sup(self) -> np.ndarray:
        return np.maximum.accumulate(self.sup_norms())

    def field_at(self, tau: float) -> VectorField:
        """Snapshot at ``tau`` (must coincide with a stored snapshot time)."""
        step, j = _locate(self, tau)
        traj = step.trajectory
        return traj.snapshot(j)

    def physical_time(self, tau: float) -> float:
        step, _ = _locate(self, tau)
        return step.t_start + step.rho * (tau - step.l)


def cstar_n_for(config: SolverConfig) -> float:
    """Override if given, otherwise the probe estimate on a fixed 64-point grid."""
    if config.c_star_n_override is not None:
        return float(config.c_star_n_override)
    params = KernelParams(config.nu, config.n)
    return estimate_cstar(params, make_grid(config.n, PROBE_POINTS)).c_star_n


def _series(config: SolverConfig) -> ParametrixSeries:
    return ParametrixSeries(config.truncation_order, config.quadrature_nodes_time)


def _step_times(l, substeps):
    times = l + np.arange(substeps + 1) / substeps
    times[-1] = l + 1
    return times


def first_substep(l: int, initial: VectorField, prev_drift: Trajectory | None, rho: float,
                  nu: float, backend: str = "spectral", substeps: int = 64,
                  series: ParametrixSeries | None = None) -> tuple[Trajectory, Trajectory]:
    """First term ``u^1`` of step ``l`` and the drift trajectory ``b^1`` it used.

    For ``l = 0`` (or no previous drift) the drift is the initial field held
    constant; otherwise it is ``prev_drift`` shifted onto ``[l, l + 1]``.
    """
    times = _step_times(l, substeps)
    if prev_drift is None:
        drift = Trajectory.constant(initial, times)
    else:
        drift = Trajectory(initial.grid, l + (prev_drift.times - prev_drift.times[0]),
                           prev_drift.values, prev_drift.rhs)
        if len(drift) == len(times) and np.allclose(drift.times, times, rtol=0, atol=1e-12):
            drift = Trajectory(initial.grid, times, drift.values, drift.rhs)
    problem = LinearProblem(rho, nu, initial, drift=drift, tau_span=(float(l), float(l + 1)))
    u1 = solve_linear(problem, backend, substeps, series)
    if not np.array_equal(drift.times, u1.times):
        idx = drift.sample_index(u1.times)
        drift = Trajectory(initial.grid, u1.times, drift.values[idx], drift.rhs[idx])
    return u1, drift


def _record(k, delta: Trajectory, previous: float | None) -> PicardRecord:
    s = sup_values(delta.values)
    ratio = None
    if previous is not None and previous > 0:
        ratio = s / previous
    return PicardRecord(k, s, c01_values(delta.values, delta.grid),
                        c12_values(delta.values, delta.rhs, delta.grid), ratio)


def _picard_attempt(l, initial, prev_drift, rho, config: SolverConfig, retry):
    series = _series(config)
    trace = PicardTrace(l, rho, retry)
    u1, b1 = first_substep(l, initial, prev_drift, rho, config.nu, config.backend,
                           config.substeps_per_step, series)
    delta = u1 - b1
    u = u1
    rec = _record(1, delta, None)
    trace.records.append(rec)
    k = 1
    while True:
        if rec.sup <= config.delta_tol:
            trace.converged = True
            return u, u1, trace, True
        if rec.ratio is not None and rec.ratio > config.contraction_bound:
            return u, u1, trace, False
        if k >= config.max_substeps:
            return u, u1, trace, False
        delta = solve_correction(u, delta, rho, config.nu, config.backend, series=series)
        u = u + delta
        k += 1
        rec = _record(k, delta, rec.sup)
        trace.records.append(rec)


def picard_step(l: int, initial: VectorField, schedule: Schedule, config: SolverConfig,
                prev_drift: Trajectory | None = None, t_start: float | None = None) -> StepResult:
    """Sum the correction series of step ``l`` with a posteriori contraction control.

    Uses schedule entry ``l + 1``.  When a ratio exceeds
    ``config.contraction_bound`` or the series has not reached
    ``config.delta_tol`` after ``config.max_substeps`` terms, ``rho`` is
    halved and the step recomputed, at most ``config.max_retries`` times.

    Raises
    ------
    StepFailure
        Carrying the trace of the last attempt.
    """
    entry = schedule[l + 1]
    if t_start is None:
        t_start = entry.T - entry.rho
    rho = entry.rho
    traces = []
    for retry in range(config.max_retries + 1):
        u, u1, trace, ok = _picard_attempt(l, initial, prev_drift, rho, config, retry)
        traces.append(trace)
        if ok:
            return StepResult(l, rho, t_start, u, u1, tuple(traces))
        rho = rho / 2.0
    raise StepFailure(
        f"step {l}: correction series did not contract after {config.max_retries} retries "
        f"(last max ratio {trace.max_ratio:.3g}, last sup {trace.records[-1].sup:.3e})",
        trace=traces,
    )


def run_global(h: VectorField, config: SolverConfig, c_star_n: float | None = None) -> GlobalSolution:
    """Run ``config.steps`` steps from ``h``.

    On :class:`StepFailure` the exception's ``partial`` attribute holds the
    solution of the completed steps.
    """
    if h.grid.n != config.n or h.grid.points_per_axis != config.points_per_axis:
        raise ConfigurationError("initial field does not match the configured grid")
    c0 = max(sup_values(h.components), C0_FLOOR)
    if c_star_n is None:
        c_star_n = cstar_n_for(config)
    schedule = build_schedule(c0, c_star_n, config.steps)
    solution = GlobalSolution(h, config.nu, schedule)
    current, prev_drift, t = h, None, 0.0
    for l in range(config.steps):
        try:
            step = picard_step(l, current, schedule, config, prev_drift, t_start=t)
        except StepFailure as exc:
            exc.partial = solution
            raise
        solution.steps.append(step)
        prev_drift = step.first if config.drift_source == "first_substep" else step.trajectory
        current = step.trajectory.final
        t = step.t_end
    return solution


def _locate(solution: GlobalSolution, tau: float, tol: float = 1e-9):
    if not solution.steps:
        raise RangeError("solution has no steps")
    lo, hi = solution.steps[0].l, solution.steps[-1].l + 1
    if not lo - tol <= tau <= hi + tol:
        raise RangeError(f"tau={tau!r} outside the computed span [{lo}, {hi}]")
    idx = min(int(np.floor(tau + tol)) - lo, len(solution.steps) - 1)
    step = solution.steps[idx]
    j = int(np.argmin(np.abs(step.trajectory.times - tau)))
    if abs(step.trajectory.times[j] - tau) > tol:
        raise RangeError(f"tau={tau!r} is not a snapshot time")
    return step, j


def _tau_derivative(values: np.ndarray, j: int, dtau: float) -> np.ndarray:
    last = values.shape[0] - 1
    if 0 < j < last:
        return (values[j + 1] - values[j - 1]) / (2.0 * dtau)
    if j == 0:
        return (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dtau)
    return (3.0 * values[last] - 4.0 * values[last - 1] + values[last - 2]) / (2.0 * dtau)


def residual(solution: GlobalSolution, taus=None) -> float:
    """Max pointwise Burgers residual in ``tau`` coordinates.

    ``d u/d tau - rho (nu Lap u - u . grad u)`` with spectral space
    derivatives and second-order differences across snapshots (one-sided at
    step ends).  ``taus`` defaults to every interior snapshot of every step;
    given values must be snapshot times inside the computed span.
    """
    if not solution.steps:
        raise RangeError("solution has no steps")
    grid = solution.grid
    if taus is None:
        picks = [(s, j) for s in solution.steps for j in range(1, len(s.trajectory) - 1)]
    else:
        picks = [_locate(solution, float(tau)) for tau in np.atleast_1d(taus)]
    worst = 0.0
    for step, j in picks:
        vals = step.trajectory.values
        if vals.shape[0] < 3:
            raise RangeError("residual needs at least three snapshots per step")
        dtau = step.trajectory.times[1] - step.trajectory.times[0]
        u = vals[j]
        adv = np.sum(u[None] * gradient_values(u, grid), axis=1)
        r = _tau_derivative(vals, j, dtau) - step.rho * (solution.nu * laplacian_values(u, grid) - adv)
        worst = max(worst, sup_values(r))
    return worst
