"""Heat kernels on the torus, the Levy parametrix, and empirical kernel constants.

The Gaussian ``N*(t, x) = (4 pi nu t)^{-n/2} exp(-|x|^2 / (4 nu t))`` is
periodized over the integer lattice.  Because it factorizes over axes, the
lattice sum is evaluated as a product of 1D image sums.

The parametrix ``p_M`` for ``dw/dt = rho (nu Lap w - b . grad w)`` is the
truncated Levy series

    p_M = N + sum_{m=1..M} int_s^t N(t - sigma) Phi_m(sigma) d sigma,
    Phi_1(sigma)     = L N(sigma - s),
    Phi_{m+1}(sigma) = int_s^sigma L N(sigma - sigma') Phi_m(sigma') d sigma',

with ``L N = -rho b . grad N`` (the heat part cancels).  Kernels are applied
to grid functions; spatial integrals are convolutions with the periodized
Gaussian done through its Fourier series, time integrals use the midpoint
rule in ``w`` after ``sigma = s + (t - s) w^2``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError, StepTooSmallError
from .fields import Grid, VectorField, _derivative_multiplier, make_grid

__all__ = [
    "KernelParams",
    "ParametrixSeries",
    "ConstantEstimate",
    "ParametrixKernel",
    "gaussian_kernel",
    "periodized_gaussian",
    "periodized_gaussian_gradient",
    "heat_multiplier",
    "parametrix_correction",
    "estimate_cstar",
    "cstar_n_from_cstar",
]

MIN_KERNEL_INTERVAL = 1e-6


@dataclass(frozen=True)
class KernelParams:
    """Viscosity, dimension and the minimum number of lattice images per axis.

    The image count is raised automatically for large ``nu * t`` so the
    dropped tail stays below 1e-17 of the retained sum.
    """

    nu: float
    n: int = 1
    lattice_truncation: int = 5

    def __post_init__(self):
        if not self.nu > 0:
            raise ConfigurationError(f"nu must be > 0, got {self.nu!r}")
        if self.n not in (1, 2, 3):
            raise ConfigurationError(f"n must be 1, 2 or 3, got {self.n!r}")
        if self.lattice_truncation < 1:
            raise ConfigurationError("lattice_truncation must be >= 1")

    def images(self, t: float) -> int:
        return max(self.lattice_truncation, math.ceil(1.0 + math.sqrt(156.0 * self.nu * t)))


@dataclass(frozen=True)
class ParametrixSeries:
    """Truncation order and quadrature sizes of the Levy series.

    ``quadrature_nodes_space`` is the per-axis size of the grid on which the
    intermediate products ``b . grad(...)`` are formed; ``None`` uses the
    field grid, larger powers of two de-alias the products.
    """

    truncation_order: int = 1
    quadrature_nodes_time: int = 8
    quadrature_nodes_space: int | None = None

    def __post_init__(self):
        if self.truncation_order < 0:
            raise ConfigurationError("truncation_order must be >= 0")
        if self.quadrature_nodes_time < 2:
            raise ConfigurationError("quadrature_nodes_time must be >= 2")
        q = self.quadrature_nodes_space
        if q is not None and (q < 2 or q & (q - 1)):
            raise ConfigurationError("quadrature_nodes_space must be a power of two >= 2")


@dataclass(frozen=True)
class ConstantEstimate:
    c_star: float
    c_star_n: float
    probe_report: tuple[tuple[str, float], ...] = field(default=())


def cstar_n_from_cstar(c_star: float, n: int) -> float:
    return (2 + n + n * n) * c_star * c_star * c_star


def _check_time(t):
    if not t > 0:
        raise DomainError(f"kernel time must be > 0, got {t!r}")


def _as_points(x, n):
    x = np.asarray(x, dtype=float)
    if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != n:
        raise DimensionError(f"points must have trailing axis of length {n}, got {x.shape}")
    return x


def gaussian_kernel(t: float, x, params: KernelParams):
    """Whole-space heat kernel ``(4 pi nu t)^{-n/2} exp(-|x|^2/(4 nu t))``."""
    _check_time(t)
    x = _as_points(x, params.n)
    r2 = np.sum(x * x, axis=-1)
    val = (4.0 * np.pi * params.nu * t) ** (-params.n / 2.0) * np.exp(-r2 / (4.0 * params.nu * t))
    return val if val.ndim else float(val)


def _image_sum_1d(t, y, nu, images, derivative=False):
    """Sum over lattice images of the 1D Gaussian (or its derivative) at ``y``.

    ``y`` is reduced to ``[0, 1/2]`` first so the result is exactly even
    (odd, for the derivative) in the original argument.
    """
    y = np.asarray(y, dtype=float)
    w = y - np.round(y)
    sign = np.where(w < 0, -1.0, 1.0)
    a = np.abs(w)
    norm = (4.0 * np.pi * nu * t) ** -0.5
    total = np.zeros_like(a)
    # fixed summation order: gamma = -L, ..., L
    for gamma in range(-images, images + 1):
        z = a + gamma
        g = norm * np.exp(-z * z / (4.0 * nu * t))
        if derivative:
            g = -z / (2.0 * nu * t) * g
        total = total + g
    return sign * total if derivative else total


def periodized_gaussian(t: float, x, params: KernelParams):
    """Heat kernel of the unit torus as a truncated lattice sum."""
    _check_time(t)
    x = _as_points(x, params.n)
    L = params.images(t)
    val = np.ones(x.shape[:-1])
    for j in range(params.n):
        val = val * _image_sum_1d(t, x[..., j], params.nu, L)
    return val if val.ndim else float(val)


def periodized_gaussian_gradient(t: float, x, params: KernelParams) -> np.ndarray:
    """Spatial gradient of :func:`periodized_gaussian`; trailing axis indexes ``j``."""
    _check_time(t)
    x = _as_points(x, params.n)
    L = params.images(t)
    vals = [_image_sum_1d(t, x[..., j], params.nu, L) for j in range(params.n)]
    ders = [_image_sum_1d(t, x[..., j], params.nu, L, derivative=True) for j in range(params.n)]
    out = []
    for j in range(params.n):
        g = ders[j]
        for i in range(params.n):
            if i != j:
                g = g * vals[i]
        out.append(g)
    return np.stack(out, axis=-1)


def heat_multiplier(grid: Grid, t, nu: float) -> np.ndarray:
    """Fourier coefficients ``exp(-nu t |2 pi k|^2)`` of the periodized kernel.

    ``t`` may be an array; its shape is prepended to the rfftn layout.
    """
    t = np.asarray(t, dtype=float)
    k2 = grid.k_squared()
    return np.exp(-nu * t.reshape(t.shape + (1,) * grid.n) * k2)


# --- Levy parametrix ---------------------------------------------------------


DriftSampler = Callable[[np.ndarray], np.ndarray]


def drift_sampler(drift, grid: Grid) -> DriftSampler:
    """Normalize a drift description into ``sigma -> array (P, n, *shape)``.

    Accepts a constant :class:`VectorField`, a trajectory-like object with
    ``times`` and ``values`` (piecewise constant from the left snapshot), a
    callable returning the field at one time, or ``None`` for zero drift.
    """
    if drift is None:
        zero = np.zeros((1, grid.n) + grid.shape)
        return lambda sig: np.broadcast_to(zero, (np.size(sig), grid.n) + grid.shape)
    if isinstance(drift, VectorField):
        vals = drift.components[None]
        return lambda sig: np.broadcast_to(vals, (np.size(sig),) + vals.shape[1:])
    if hasattr(drift, "times") and hasattr(drift, "values"):
        times = np.asarray(drift.times)
        values = drift.values

        def sampler(sig):
            idx = np.searchsorted(times, np.ravel(sig), side="right") - 1
            return values[np.clip(idx, 0, len(times) - 1)]

        return sampler
    if callable(drift):
        return lambda sig: np.stack([np.asarray(drift(s), dtype=float) for s in np.ravel(sig)])
    raise ConfigurationError(f"unsupported drift description {type(drift).__name__}")


def _midpoint_sqrt_rule(q):
    """Nodes ``w_q`` and weights for ``int_0^1 g(w^2) 2 w dw`` (midpoint in ``w``)."""
    w = (np.arange(q) + 0.5) / q
    return w * w, 2.0 * w / q


class ParametrixKernel:
    """Truncated Levy parametrix ``p_M(t, x; s, y)`` on a periodic grid.

    :meth:`apply` integrates the kernel against grid functions (the
    fundamental representation); :attr:`matrix` tabulates kernel values at
    grid pairs, ``matrix[i, j] = p_M(t, x_i; s, y_j)``.
    """

    def __init__(self, grid: Grid, drift, series: ParametrixSeries, params: KernelParams,
                 s: float, t: float, rho: float = 1.0):
        if not t - s >= MIN_KERNEL_INTERVAL:
            raise StepTooSmallError(
                f"kernel interval t - s = {t - s!r} is below {MIN_KERNEL_INTERVAL}"
            )
        if params.n != grid.n:
            raise DimensionError("kernel params and grid disagree on n")
        self.grid = grid
        self.series = series
        self.params = params
        self.s = float(s)
        self.t = float(t)
        self.rho = float(rho)
        self._drift = drift_sampler(drift, grid)
        self._w2, self._wt = _midpoint_sqrt_rule(series.quadrature_nodes_time)
        q = series.quadrature_nodes_space
        self._qgrid = grid if q is None or q == grid.points_per_axis else make_grid(grid.n, q)

    # spectral transfer between the field grid and the product grid
    def _to_q(self, coeffs):
        if self._qgrid is self.grid:
            return coeffs
        return _resample_coeffs(coeffs, self.grid, self._qgrid)

    def _from_q(self, coeffs):
        if self._qgrid is self.grid:
            return coeffs
        return _resample_coeffs(coeffs, self._qgrid, self.grid)

    def _heat(self, dt):
        return heat_multiplier(self.grid, self.rho * np.asarray(dt), self.params.nu)

    def _apply_L(self, sigma, coeffs):
        """``-rho b(sigma) . grad`` applied in physical space; input/output spectral.

        ``coeffs`` has shape ``(P, B..., spec)`` matching the ``P`` times in ``sigma``.
        """
        g, qg = self.grid, self._qgrid
        cq = self._to_q(coeffs)
        b = self._drift(sigma)
        if qg is not g:
            b = qg.ifft(_resample_coeffs(g.fft(b), g, qg))
        nb = coeffs.ndim - 1 - g.n
        out = 0.0
        for j in range(g.n):
            dj = qg.ifft(_derivative_multiplier(g.n, qg.points_per_axis, j, 1) * cq)
            bj = b[:, j].reshape((b.shape[0],) + (1,) * nb + qg.shape)
            out = out + bj * dj
        return self._from_q(qg.fft(-self.rho * out))

    def _phi(self, m, sigma, fhat):
        """``Phi_m(sigma) f`` in spectral form for the 1D array of times ``sigma``."""
        pad = (1,) * (fhat.ndim - self.grid.n)
        if m == 1:
            heat = self._heat(sigma - self.s)
            heat = heat.reshape(heat.shape[:1] + pad + heat.shape[1:])
            return self._apply_L(sigma, heat * fhat[None])
        q = self._w2.size
        inner = self.s + (sigma[:, None] - self.s) * self._w2[None, :]
        weights = (sigma[:, None] - self.s) * self._wt[None, :]
        ph = self._phi(m - 1, inner.ravel(), fhat)
        ph = ph.reshape((sigma.size, q) + ph.shape[1:])
        heat = self._heat(sigma[:, None] - inner)
        heat = heat.reshape(heat.shape[:2] + pad + heat.shape[2:])
        wt = weights.reshape(weights.shape + (1,) * (ph.ndim - 2))
        summed = np.sum(wt * heat * ph, axis=1)
        return self._apply_L(sigma, summed)

    def apply_spectral(self, fhat: np.ndarray) -> np.ndarray:
        """``int p_M(t, .; s, y) f(y) dy`` for spectral input of shape ``(B..., spec)``."""
        out = self._heat(self.t - self.s) * fhat
        M = self.series.truncation_order
        if M == 0:
            return out
        pad = (1,) * (fhat.ndim - self.grid.n)
        span = self.t - self.s
        sigma = self.s + span * self._w2
        weights = span * self._wt
        phis = sum(self._phi(m, sigma, fhat) for m in range(1, M + 1))
        heat = self._heat(self.t - sigma)
        heat = heat.reshape(heat.shape[:1] + pad + heat.shape[1:])
        wt = weights.reshape((sigma.size,) + (1,) * (phis.ndim - 1))
        return out + np.sum(wt * heat * phis, axis=0)

    def apply(self, values: np.ndarray) -> np.ndarray:
        g = self.grid
        return g.ifft(self.apply_spectral(g.fft(np.asarray(values, dtype=float))))

    @property
    def matrix(self) -> np.ndarray:
        g = self.grid
        basis = np.eye(g.size).reshape((g.size,) + g.shape) / g.spacing**g.n
        cols = self.apply(basis).reshape(g.size, g.size)
        return cols.T.copy()


def _resample_coeffs(coeffs, src: Grid, dst: Grid):
    """Zero-pad or truncate rfftn coefficients between grids, preserving values."""
    Ns, Nd = src.points_per_axis, dst.points_per_axis
    n = src.n
    lead = coeffs.shape[: coeffs.ndim - n]
    out_shape = lead + (Nd,) * (n - 1) + (Nd // 2 + 1,)
    out = np.zeros(out_shape, dtype=complex)
    m = min(Ns, Nd) // 2
    scale = (Nd / Ns) ** n
    # full axes are split into their nonnegative and negative frequency blocks
    for combo in itertools.product(*([(0, 1)] * (n - 1))):
        sl_src = tuple(slice(0, m) if c == 0 else slice(Ns - m, Ns) for c in combo)
        sl_dst = tuple(slice(0, m) if c == 0 else slice(Nd - m, Nd) for c in combo)
        src_ix = (Ellipsis,) + sl_src + (slice(0, m + 1),)
        dst_ix = (Ellipsis,) + sl_dst + (slice(0, m + 1),)
        out[dst_ix] = coeffs[src_ix]
    out *= scale
    # drop the shared Nyquist plane when truncating so the result stays real-consistent
    if Nd < Ns:
        out[(Ellipsis, slice(m, m + 1))] = 0.0
    return out


def parametrix_correction(drift, series: ParametrixSeries, params: KernelParams,
                          s: float, t: float, grid: Grid, rho: float = 1.0) -> ParametrixKernel:
    """Levy parametrix of order ``series.truncation_order`` between times ``s < t``."""
    return ParametrixKernel(grid, drift, series, params, s, t, rho)


# --- empirical constants ------------------------------------------------------


def _probe_battery(n):
    two_pi = 2.0 * np.pi
    probes = [("const", lambda *x: np.ones_like(x[0]))]
    for j in range(n):
        for m in range(1, 5):
            probes.append((f"sin{m}_x{j + 1}", lambda *x, j=j, m=m: np.sin(two_pi * m * x[j])))
            probes.append((f"cos{m}_x{j + 1}", lambda *x, j=j, m=m: np.cos(two_pi * m * x[j])))
    if n > 1:
        probes.append(("diag", lambda *x: np.sin(two_pi * sum(x))))

    def fejer(*x, K=8):
        out = 1.0
        for xj in x:
            acc = np.ones_like(xj)
            for m in range(1, K + 1):
                acc = acc + 2.0 * (1.0 - m / (K + 1)) * np.cos(two_pi * m * (xj - 0.5))
            out = out * acc
        return out

    probes.append(("fejer8", fejer))
    return probes


def _quadrature_grid(probe_grid: Grid, nu, t):
    """Smallest refinement of the probe grid resolving the kernel width at time ``t``."""
    cap = 512 if probe_grid.n == 1 else (256 if probe_grid.n == 2 else 128)
    N = probe_grid.points_per_axis
    width = math.sqrt(2.0 * nu * t)
    while width < 2.0 / N and N * 2 <= cap:
        N *= 2
    return make_grid(probe_grid.n, N)


def _trapezoid_convolve(kernel_fn, qgrid: Grid, probe_grid: Grid, f):
    """Trapezoid rule for ``int K(x - y) f(y) dy`` at the probe nodes.

    The circular sum over the quadrature grid is evaluated with FFTs; output
    is subsampled to the probe nodes.
    """
    offsets = np.stack(qgrid.mesh(), axis=-1)
    table = kernel_fn(offsets)
    fvals = f(*qgrid.mesh())
    h = qgrid.spacing**qgrid.n
    conv = h * qgrid.ifft(qgrid.fft(table) * qgrid.fft(fvals))
    step = qgrid.points_per_axis // probe_grid.points_per_axis
    return conv[(slice(None, None, step),) * qgrid.n]


def estimate_cstar(params: KernelParams, probe_grid: Grid, time_nodes: int = 16) -> ConstantEstimate:
    """Measure kernel amplification factors on a battery of band-limited probes.

    Two families are measured, both as ``sup|output| / sup|input|`` on the
    probe nodes:

    * ``heat:t=..``: convolution with the periodized Gaussian at
      ``t = 1/16, 1/4, 1``;
    * ``grad_x<j>``: ``int_0^1 (d N*/d x_j)(t) conv f dt``.

    ``c_star`` is the largest factor, clamped to at least 1.
    """
    if probe_grid.n != params.n:
        raise DimensionError("probe grid and kernel params disagree on n")
    if probe_grid.points_per_axis < 64:
        raise ConfigurationError("probe grid needs at least 64 points per axis")
    probes = _probe_battery(params.n)
    report = []
    x_nodes = probe_grid.mesh()
    in_sup = {}
    for name, f in probes:
        in_sup[name] = float(np.max(np.abs(f(*x_nodes))))

    for t in (1.0 / 16.0, 0.25, 1.0):
        qg = _quadrature_grid(probe_grid, params.nu, t)
        for name, f in probes:
            if in_sup[name] == 0.0:
                continue
            out = _trapezoid_convolve(lambda z: periodized_gaussian(t, z, params), qg, probe_grid, f)
            report.append((f"heat:t={t:g}:{name}", float(np.max(np.abs(out))) / in_sup[name]))

    w2, wt = _midpoint_sqrt_rule(time_nodes)
    for j in range(params.n):
        for name, f in probes:
            if in_sup[name] == 0.0:
                continue
            acc = 0.0
            for t, weight in zip(w2, wt):
                qg = _quadrature_grid(probe_grid, params.nu, t)
                acc = acc + weight * _trapezoid_convolve(
                    lambda z: periodized_gaussian_gradient(t, z, params)[..., j], qg, probe_grid, f
                )
            report.append((f"grad_x{j + 1}:{name}", float(np.max(np.abs(acc))) / in_sup[name]))

    c_star = max(1.0, max(v for _, v in report))
    return ConstantEstimate(c_star, cstar_n_from_cstar(c_star, params.n), tuple(report))
