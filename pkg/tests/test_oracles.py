import numpy as np
import pytest
import sympy
from scipy.special import ive

from burgers_series.config import SolverConfig, initial_field, preset_potential
from burgers_series.errors import OverflowGuardError
from burgers_series.fields import curl2d, make_grid, sup_norm
from burgers_series.oracles import (
    PotentialData,
    check_max_principle,
    check_uniqueness,
    decay_weight_probe,
    hopf_cole_solution,
)

from conftest import run_preset

TWO_PI = 2.0 * np.pi


def bessel_oracle(amp, nu, t, x, modes=60):
    """Cole-Hopf for phi0 = amp cos(2 pi x)/(2 pi) via the modified Bessel series of alpha_0."""
    kappa = amp / (4 * np.pi * nu)
    m = np.arange(1, modes + 1)
    w = ive(m, kappa) * np.exp(-4 * np.pi**2 * nu * m**2 * t)
    alpha = ive(0, kappa) + 2 * np.sum(w * np.cos(TWO_PI * np.outer(x, m)), axis=1)
    dalpha = -2 * np.sum(w * TWO_PI * m * np.sin(TWO_PI * np.outer(x, m)), axis=1)
    return -2 * nu * dalpha / alpha


class TestHopfCole:
    @pytest.mark.parametrize("phi", [lambda x: 0 * x, lambda x: 3.0 + 0 * x])
    def test_trivial_potentials(self, phi):
        u = hopf_cole_solution(PotentialData(phi, 0.1), 0.2, make_grid(1, 32))
        assert sup_norm(u) <= 1e-14

    def test_initial_data(self, sine_potential):
        g = make_grid(1, 128)
        u = hopf_cole_solution(sine_potential, 0.0, g)
        assert np.max(np.abs(u.components[0] - np.sin(TWO_PI * g.nodes()))) <= 1e-10

    @pytest.mark.parametrize("t", [0.01, 0.05, 0.3])
    @pytest.mark.parametrize("nu,amp", [(0.1, 1.0), (0.05, 1.0), (0.2, 2.0)])
    def test_matches_bessel_series(self, t, nu, amp):
        g = make_grid(1, 128)
        data = PotentialData(lambda x: amp * np.cos(TWO_PI * x) / TWO_PI, nu)
        u = hopf_cole_solution(data, t, g)
        np.testing.assert_allclose(u.components[0], bessel_oracle(amp, nu, t, g.nodes()), atol=1e-11)

    def test_small_amplitude_limit(self):
        g = make_grid(1, 64)
        nu, t = 0.1, 0.05
        x = g.nodes()
        gaps = []
        for eps in (1e-2, 1e-3):
            data = PotentialData(lambda x, e=eps: e * np.cos(TWO_PI * x) / TWO_PI, nu)
            u = hopf_cole_solution(data, t, g).components[0]
            gaps.append(np.max(np.abs(u - eps * np.exp(-4 * np.pi**2 * nu * t) * np.sin(TWO_PI * x))))
        # the remainder is second order in the amplitude
        assert gaps[1] / gaps[0] == pytest.approx(1e-2, rel=0.05)

    def test_nu_scaling(self):
        g = make_grid(1, 128)
        phi = lambda x: np.cos(TWO_PI * x) / TWO_PI
        s, nu, t = 2.0, 0.1, 0.08
        a = hopf_cole_solution(PotentialData(phi, nu), t, g).components
        b = hopf_cole_solution(PotentialData(lambda x: s * phi(x), s * nu), t / s, g).components
        assert np.max(np.abs(b - s * a)) <= 1e-8

    def test_two_dimensional_gradient_structure(self):
        g = make_grid(2, 64)
        data = PotentialData(preset_potential("potential", 2), 0.2)
        for t in (0.0, 0.02, 0.05):
            assert sup_norm(curl2d(hopf_cole_solution(data, t, g))) <= 1e-10

    def test_two_dimensional_initial_data(self):
        g = make_grid(2, 64)
        u = hopf_cole_solution(PotentialData(preset_potential("potential", 2), 0.2), 0.0, g)
        np.testing.assert_allclose(u.components, initial_field("potential", g).components, atol=1e-10)

    def test_overflow_guard(self):
        data = PotentialData(lambda x: np.cos(TWO_PI * x), 1e-3)
        with pytest.raises(OverflowGuardError):
            hopf_cole_solution(data, 0.1, make_grid(1, 64))


class TestMaxPrinciple:
    @pytest.mark.parametrize("preset", ["zero", "constant(value=2.0)"])
    def test_trivial(self, preset):
        _, _, sol = run_preset(1, 32, 0.1, 3, preset)
        ok, margin = check_max_principle(sol)
        assert ok and margin == 0.0

    def test_sine(self, sine_run_1d):
        ok, margin = check_max_principle(sine_run_1d[2])
        assert ok and margin <= 1e-6


class TestUniqueness:
    def test_zero(self):
        cfg = SolverConfig(1, 32, 0.1, 2, initial_condition="zero", substeps_per_step=16)
        assert check_uniqueness(initial_field("zero", make_grid(1, 32)), cfg) == 0.0

    def test_constant(self):
        cfg = SolverConfig(1, 32, 0.1, 2, substeps_per_step=16)
        h = initial_field("constant(value=0.4)", make_grid(1, 32))
        assert check_uniqueness(h, cfg) <= 1e-12

    def test_sine_two_steps(self):
        cfg = SolverConfig(1, 64, 0.1, 2, substeps_per_step=32)
        assert check_uniqueness(initial_field("sine", make_grid(1, 64)), cfg) <= 1e-2

    def test_two_dimensional_uses_spectral_refinement(self):
        cfg = SolverConfig(2, 16, 0.2, 1, substeps_per_step=16, initial_condition="potential")
        assert check_uniqueness(initial_field("potential", make_grid(2, 16)), cfg) <= 1e-2


class TestDecayProbe:
    x = np.linspace(-20, 20, 801)

    def test_gaussian(self):
        s = sympy.symbols("s")
        uxx = sympy.lambdify(s, sympy.diff(sympy.exp(-s**2), s, 2), "numpy")
        assert decay_weight_probe(uxx, self.x)

    def test_algebraic_profile(self):
        s = sympy.symbols("s")
        expr = sympy.diff(1 / (1 + s**2), s, 2)
        # symbolic growth order of the weighted profile is positive
        assert sympy.limit((1 + s**2) ** 3 * expr, s, sympy.oo) == sympy.oo
        assert not decay_weight_probe(sympy.lambdify(s, expr, "numpy"), self.x)

    def test_zero(self):
        assert decay_weight_probe(np.zeros_like(self.x), self.x)
