import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from burgers_series.errors import ConfigurationError, DimensionError, EvaluationError, ShapeError
from burgers_series.fields import (
    VectorField,
    c01_norm,
    c12_norm,
    curl2d,
    make_grid,
    norm_report,
    sample,
    spectral_derivative,
    sup_norm,
)

TWO_PI = 2.0 * np.pi


def band_limited(grid, coeffs, rng=None):
    """Trigonometric polynomial with modes |m| <= len(coeffs) on every axis."""
    def f(*x):
        out = np.zeros_like(x[0])
        for m, (a, b) in enumerate(coeffs, start=1):
            for xj in x:
                out = out + a * np.cos(TWO_PI * m * xj) + b * np.sin(TWO_PI * m * xj)
        return out
    return sample(grid, f)


class TestGrid:
    @pytest.mark.parametrize("n,N", [(1, 64), (2, 32), (3, 8), (1, 1024)])
    def test_valid(self, n, N):
        g = make_grid(n, N)
        assert g.spacing == 1.0 / N
        assert g.spacing * g.points_per_axis == 1.0
        assert g.shape == (N,) * n

    @pytest.mark.parametrize("n,N", [(1, 7), (1, 4), (0, 16), (4, 16), (2, 48)])
    def test_rejects(self, n, N):
        with pytest.raises(ConfigurationError):
            make_grid(n, N)

    def test_nodes(self):
        g = make_grid(1, 64)
        np.testing.assert_array_equal(g.nodes(), np.arange(64) / 64)


class TestSample:
    def test_zero(self):
        f = sample(make_grid(2, 16), lambda x, y: [0 * x, 0 * y])
        assert not np.any(f.components)

    def test_sine_nodes(self):
        g = make_grid(1, 64)
        f = sample(g, lambda x: np.sin(TWO_PI * x))
        expected = [math.sin(TWO_PI * k / 64) for k in range(64)]
        np.testing.assert_array_equal(f.components[0], expected)

    def test_constant_broadcast(self):
        f = sample(make_grid(2, 8), lambda x, y: 2.5)
        assert f.components.shape == (2, 8, 8)
        assert np.all(f.components == 2.5)

    def test_non_finite(self):
        with pytest.raises(EvaluationError):
            sample(make_grid(1, 8), lambda x: 1.0 / x)

    def test_field_is_read_only(self):
        f = sample(make_grid(1, 8), lambda x: x)
        with pytest.raises(ValueError):
            f.components[0, 0] = 1.0

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            VectorField(make_grid(2, 8), np.zeros((3, 8, 8)))


class TestNorms:
    def test_sup_trivial(self):
        g = make_grid(1, 16)
        assert sup_norm(sample(g, lambda x: 0 * x)) == 0
        assert sup_norm(sample(g, lambda x: -3.0 + 0 * x)) == 3

    def test_sup_sine_matches_brute_force(self):
        # 64 is divisible by 4, so the node k = 16 sits on the crest
        expected = max(abs(math.sin(TWO_PI * k / 64)) for k in range(64))
        f = sample(make_grid(1, 64), lambda x: np.sin(TWO_PI * x))
        assert sup_norm(f) == expected

    @pytest.mark.parametrize("N", [32, 128])
    def test_sup_sine_grid(self, N):
        expected = max(abs(math.sin(TWO_PI * k / N)) for k in range(N))
        f = sample(make_grid(1, N), lambda x: np.sin(TWO_PI * x))
        assert sup_norm(f) == pytest.approx(expected, abs=1e-15)

    def test_c01_constant(self):
        f = sample(make_grid(2, 16), lambda x, y: -1.25)
        assert c01_norm(f) == pytest.approx(1.25, abs=1e-14)

    def test_c01_sine(self):
        g = make_grid(1, 64)
        f = sample(g, lambda x: np.sin(TWO_PI * x))
        # independent oracle: node maxima of |sin| and |2 pi cos|
        x = g.nodes()
        expected = np.max(np.abs(np.sin(TWO_PI * x))) + np.max(np.abs(TWO_PI * np.cos(TWO_PI * x)))
        assert c01_norm(f) == pytest.approx(expected, rel=1e-12)
        assert c01_norm(f) == pytest.approx(1 + TWO_PI, rel=1e-12)

    def test_c12_sine(self):
        g = make_grid(1, 64)
        nu = 0.1
        f = sample(g, lambda x: np.sin(TWO_PI * x))
        dt = sample(g, lambda x: -4 * np.pi**2 * nu * np.sin(TWO_PI * x))
        expected = 1 + TWO_PI + 4 * np.pi**2 * nu + 4 * np.pi**2
        assert c12_norm(f, dt) == pytest.approx(expected, rel=1e-12)

    def test_c12_trivial(self):
        g = make_grid(1, 16)
        zero = sample(g, lambda x: 0 * x)
        assert c12_norm(zero, zero) == 0
        const = sample(g, lambda x: 4.0 + 0 * x)
        assert c12_norm(const, zero) == pytest.approx(4.0, abs=1e-13)

    def test_c12_grid_mismatch(self):
        a = sample(make_grid(1, 16), lambda x: x)
        b = sample(make_grid(1, 32), lambda x: x)
        with pytest.raises(ShapeError):
            c12_norm(a, b)

    def test_report_ordering(self, rng):
        g = make_grid(2, 16)
        f = VectorField(g, rng.standard_normal((2, 16, 16)))
        r = norm_report(f)
        assert 0 <= r.sup <= r.c01 <= r.c12
        assert max(r.per_component_sup) == r.sup

    def test_periodic_shift_invariance(self, rng):
        g = make_grid(2, 16)
        vals = rng.standard_normal((2, 16, 16))
        shifted = np.roll(vals, (3, -5), axis=(1, 2))
        a, b = norm_report(VectorField(g, vals)), norm_report(VectorField(g, shifted))
        assert a.sup == b.sup
        assert a.c01 == pytest.approx(b.c01, rel=1e-12)
        assert a.c12 == pytest.approx(b.c12, rel=1e-12)


class TestSpectralDerivative:
    def test_first_and_second(self):
        g = make_grid(1, 64)
        f = sample(g, lambda x: np.sin(TWO_PI * x))
        x = g.nodes()
        d1 = spectral_derivative(f, 0, 1).components[0]
        d2 = spectral_derivative(f, 0, 2).components[0]
        assert np.max(np.abs(d1 - TWO_PI * np.cos(TWO_PI * x))) <= 1e-10
        assert np.max(np.abs(d2 + TWO_PI**2 * np.sin(TWO_PI * x))) <= 1e-10

    def test_constant(self):
        f = sample(make_grid(2, 16), lambda x, y: 7.0)
        assert np.max(np.abs(spectral_derivative(f, 1).components)) <= 1e-13

    def test_bad_axis(self):
        f = sample(make_grid(1, 16), lambda x: x * 0)
        with pytest.raises(DimensionError):
            spectral_derivative(f, 1)

    @settings(max_examples=25, deadline=None)
    @given(
        st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=6),
        st.floats(-3, 3),
        st.floats(-3, 3),
    )
    def test_linearity(self, coeffs, a, b):
        g = make_grid(1, 32)
        f = band_limited(g, coeffs)
        h = band_limited(g, coeffs[::-1])
        lhs = spectral_derivative(a * f + b * h, 0).components
        rhs = a * spectral_derivative(f, 0).components + b * spectral_derivative(h, 0).components
        scale = max(1.0, np.max(np.abs(rhs)))
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=6),
           st.integers(0, 1))
    def test_second_equals_first_twice(self, coeffs, axis):
        g = make_grid(2, 32)
        f = band_limited(g, coeffs)
        twice = spectral_derivative(spectral_derivative(f, axis), axis).components
        direct = spectral_derivative(f, axis, 2).components
        scale = max(1.0, np.max(np.abs(direct)))
        assert np.max(np.abs(twice - direct)) <= 1e-10 * scale


class TestCurl:
    def test_gradient_field(self):
        g = make_grid(2, 32)
        # u = grad(cos(2 pi x) cos(2 pi y))
        f = sample(g, lambda x, y: [-TWO_PI * np.sin(TWO_PI * x) * np.cos(TWO_PI * y),
                                    -TWO_PI * np.cos(TWO_PI * x) * np.sin(TWO_PI * y)])
        assert sup_norm(curl2d(f)) <= 1e-10

    def test_shear(self):
        g = make_grid(2, 32)
        f = sample(g, lambda x, y: [np.sin(TWO_PI * y), 0 * x])
        _, y = g.mesh()
        np.testing.assert_allclose(curl2d(f).components[0], -TWO_PI * np.cos(TWO_PI * y), atol=1e-10)

    def test_zero(self):
        f = sample(make_grid(2, 16), lambda x, y: [0 * x, 0 * y])
        assert sup_norm(curl2d(f)) == 0

    def test_wrong_dimension(self):
        with pytest.raises(DimensionError):
            curl2d(sample(make_grid(1, 16), lambda x: x))

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=4))
    def test_curl_of_sampled_gradient(self, coeffs):
        g = make_grid(2, 32)
        phi = band_limited(g, coeffs)
        grad = np.stack([spectral_derivative(phi, j).components[0] for j in range(2)])
        assert sup_norm(curl2d(VectorField(g, grad))) <= 1e-10
