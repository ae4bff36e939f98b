"""Exact Hopf-Cole solutions and invariant checks used to validate the scheme."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import SolverConfig
from .errors import ConfigurationError, OverflowGuardError
from .fields import Grid, VectorField, _derivative_multiplier, make_grid, sup_values
from .kernels import heat_multiplier
from .scheme import GlobalSolution, cstar_n_for, run_global

__all__ = [
    "PotentialData",
    "hopf_cole_solution",
    "check_max_principle",
    "check_uniqueness",
    "decay_weight_probe",
]

ALPHA_FLOOR = 1e-300
SPECTRAL_TAIL = 1e-15
MAX_POINTS = {1: 4096, 2: 512, 3: 128}


@dataclass(frozen=True)
class PotentialData:
    """Potential ``phi0(x_1, ..., x_n)`` of the initial velocity ``h = -grad phi0``."""

    phi0: Callable[..., np.ndarray]
    nu: float

    def __post_init__(self):
        if not self.nu > 0:
            raise ConfigurationError(f"nu must be > 0, got {self.nu!r}")


def _alpha0(data: PotentialData, grid: Grid):
    phi = np.broadcast_to(np.asarray(data.phi0(*grid.mesh()), dtype=float), grid.shape)
    if not np.all(np.isfinite(phi)):
        raise ConfigurationError("phi0 is not finite on the grid")
    # shifting phi0 by a constant leaves u unchanged and keeps alpha <= 1
    alpha = np.exp((phi - np.max(phi)) / (2.0 * data.nu))
    if np.min(alpha) < ALPHA_FLOOR:
        raise OverflowGuardError(
            "exp(phi0 / (2 nu)) spans more than 300 decades; rescale phi0 or raise nu"
        )
    return alpha


def _resolved(coeffs: np.ndarray, grid: Grid) -> bool:
    """True when the top quarter of every axis' spectrum is below ``SPECTRAL_TAIL``."""
    peak = np.max(np.abs(coeffs))
    if peak == 0.0:
        return True
    N = grid.points_per_axis
    outer = np.zeros(coeffs.shape, dtype=bool)
    for k in grid.wavenumbers():
        outer |= np.abs(k) > 3 * N // 8
    return np.max(np.abs(coeffs[outer]), initial=0.0) <= SPECTRAL_TAIL * peak


def hopf_cole_solution(data: PotentialData, t: float, grid: Grid) -> VectorField:
    """Exact velocity at time ``t`` for potential data.

    ``alpha = exp(phi / (2 nu))`` solves the heat equation and
    ``u = -2 nu grad(alpha) / alpha``.  The heat flow is applied in Fourier
    space on a grid refined until ``alpha_0`` is resolved to
    ``SPECTRAL_TAIL``; the result is then restricted to ``grid``.

    Raises
    ------
    OverflowGuardError
        If ``alpha`` drops below ``1e-300`` at any node.
    """
    if t < 0:
        raise ConfigurationError(f"t must be >= 0, got {t!r}")
    fine = grid
    while True:
        alpha0 = _alpha0(data, fine)
        coeffs = fine.fft(alpha0)
        if _resolved(coeffs, fine) or fine.points_per_axis * 2 > MAX_POINTS[grid.n]:
            break
        fine = make_grid(grid.n, fine.points_per_axis * 2)
    coeffs = coeffs * heat_multiplier(fine, t, data.nu)
    alpha = fine.ifft(coeffs)
    if np.min(alpha) < ALPHA_FLOOR:
        raise OverflowGuardError("alpha underflowed during the heat evolution")
    grads = [fine.ifft(_derivative_multiplier(fine.n, fine.points_per_axis, j, 1) * coeffs)
             for j in range(fine.n)]
    u = np.stack([-2.0 * data.nu * g / alpha for g in grads])
    stride = fine.points_per_axis // grid.points_per_axis
    u = u[(slice(None),) + (slice(None, None, stride),) * grid.n]
    return VectorField(grid, u, t)


def check_max_principle(solution: GlobalSolution, tol: float = 1e-6) -> tuple[bool, float]:
    """``(passed, margin)`` where margin is the excess of the running sup over ``sup|h|``."""
    bound = sup_values(solution.initial.components)
    margin = max(0.0, float(np.max(solution.running_sup())) - bound)
    return margin <= tol, margin


def check_uniqueness(h: VectorField, config: SolverConfig) -> float:
    """Sup discrepancy at the final time between two independent discretizations.

    The reference run uses ``config`` as given.  The second run doubles the
    substeps and, for ``n = 1`` on at most 128 points, switches to the
    parametrix backend.  Both share one schedule.
    """
    if config.n > 2 or config.points_per_axis > 128:
        raise ConfigurationError("uniqueness check is limited to n <= 2 and grids <= 128")
    c_star_n = cstar_n_for(config)
    a = run_global(h, config, c_star_n)
    other = config.replace(substeps_per_step=2 * config.substeps_per_step)
    if config.n == 1 and config.backend == "spectral":
        other = other.replace(backend="parametrix")
    b = run_global(h, other, c_star_n)
    if abs(a.final_time - b.final_time) > 1e-12:
        raise ConfigurationError(
            f"runs ended at different times ({a.final_time!r} vs {b.final_time!r}) after retries"
        )
    return sup_values(a.final.components - b.final.components)


def decay_weight_probe(u_xx, x) -> bool:
    """Whether ``(1 + x^2)^3 |u_xx|`` decreases toward both ends of the sample.

    ``x`` is a symmetric sample of the real line; ``u_xx`` is an array of
    values at ``x`` or a callable.  Only the outer half of each side is
    inspected, where the weighted profile must be non-increasing outward.
    """
    x = np.asarray(x, dtype=float)
    vals = np.asarray(u_xx(x) if callable(u_xx) else u_xx, dtype=float)
    if vals.shape != x.shape:
        raise ConfigurationError("u_xx and x must have the same shape")
    order = np.argsort(x)
    x, vals = x[order], vals[order]
    w = (1.0 + x * x) ** 3 * np.abs(vals)
    scale = np.max(w, initial=0.0)
    if scale == 0.0:
        return True
    edge = np.max(np.abs(x))
    right = w[x >= edge / 2]
    left = w[x <= -edge / 2][::-1]
    slack = 1e-12 * scale
    return bool(np.all(np.diff(right) <= slack) and np.all(np.diff(left) <= slack))
