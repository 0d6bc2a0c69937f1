import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from guplab.grid import (
    NATURAL,
    GridMismatchError,
    GridWaveFunction,
    MomentumGrid,
    PhysicalUnits,
    canonical_moments,
    differentiate,
    expectation,
    inner_product,
    norm,
    normalize,
    passes_schwartz_heuristic,
    position_amplitude,
    read_wavefunction_csv,
    uncertainty,
    write_wavefunction_csv,
)
from guplab.operators import canonical_p, canonical_x
from guplab.states import SqueezedParams, squeezed_grid, squeezed_state

from conftest import smooth_states


def squeezed(a=1.0, x0=0.0, p0=0.0, units=NATURAL, grid=None):
    sp = SqueezedParams(a, x0, p0)
    return squeezed_state(sp, grid or squeezed_grid(sp), units)


class TestUnitsAndGrid:
    def test_scales(self):
        u = PhysicalUnits(hbar=2.0, mass=0.5, omega=4.0)
        assert u.L0 == pytest.approx(math.sqrt(2.0 / 4.0))
        assert u.K0 == pytest.approx(math.sqrt(2.0 * 0.5 * 4.0 / 2.0))

    @pytest.mark.parametrize("kw", [{"hbar": 0}, {"mass": -1}, {"omega": math.inf}])
    def test_rejects_nonpositive(self, kw):
        with pytest.raises(ValueError):
            PhysicalUnits(**kw)

    def test_default_grid(self, default_grid):
        assert default_grid.n_points == 2048
        assert default_grid.p_max == pytest.approx(40 * math.sqrt(2) * NATURAL.K0)
        assert default_grid.p_min == -default_grid.p_max

    def test_weights(self):
        g = MomentumGrid(-3.0, 5.0, 101)
        assert np.all(g.weights > 0)
        assert g.weights.sum() == pytest.approx(8.0, rel=1e-14)
        assert np.all(np.diff(g.points) > 0)
        assert np.allclose(np.diff(g.points), g.step)

    @pytest.mark.parametrize("args", [(1.0, 1.0, 100), (2.0, 1.0, 100), (0.0, 1.0, 15)])
    def test_invalid_grid(self, args):
        with pytest.raises(ValueError):
            MomentumGrid(*args)

    def test_wrong_length(self, default_grid):
        with pytest.raises(ValueError):
            GridWaveFunction(default_grid, np.zeros(10))

    def test_amplitudes_frozen(self):
        psi = squeezed()
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 1.0


class TestInnerProduct:
    def test_normalised_gaussian(self):
        psi = squeezed(a=2.0, x0=0.3, p0=-1.0)
        assert abs(inner_product(psi, psi) - 1) < 1e-10

    def test_disjoint_support(self, default_grid):
        p = default_grid.points
        a = normalize(default_grid.wavefunction(np.exp(-0.5 * (p + 10) ** 2)))
        b = normalize(default_grid.wavefunction(np.exp(-0.5 * (p - 10) ** 2)))
        assert abs(inner_product(a, b)) < 1e-12

    def test_shifted_overlap(self):
        # analytic overlap exp(-a/4) for a unit momentum shift; a=1/2 is the
        # state with unit momentum spread
        g = MomentumGrid(-20, 20, 2001)
        for a, expected in [(1.0, math.exp(-0.25)), (0.5, math.exp(-0.125))]:
            s0 = squeezed(a, 0, 0, grid=g)
            s1 = squeezed(a, 0, 1, grid=g)
            assert abs(inner_product(s0, s1)) == pytest.approx(expected, abs=1e-12)

    def test_incompatible(self):
        a = squeezed(grid=MomentumGrid(-10, 10, 201))
        b = squeezed(grid=MomentumGrid(-10, 10, 301))
        with pytest.raises(GridMismatchError, match="incompatible grids"):
            inner_product(a, b)

    @given(smooth_states(), smooth_states())
    def test_conjugate_symmetry_exact(self, phi, psi):
        assert inner_product(phi, psi) == inner_product(psi, phi).conjugate()

    @given(smooth_states())
    def test_quadrature_converged(self, psi):
        g = psi.grid
        fine = MomentumGrid(g.p_min, g.p_max, 2 * g.n_points - 1)
        # resample exactly by evaluating the same band-limited function
        coarse = inner_product(psi, psi)
        spec = np.fft.fft(psi.amplitudes[:-1])
        m = g.n_points - 1
        k = np.fft.fftfreq(m) * m
        t = (fine.points - g.p_min) / (g.step * m)
        vals = (spec[None, :] * np.exp(2j * np.pi * np.outer(t, k))).sum(axis=1) / m
        doubled = GridWaveFunction(fine, vals)
        assert abs(inner_product(doubled, doubled) - coarse) < 1e-8

    @given(smooth_states())
    def test_normalize_idempotent(self, psi):
        once = normalize(psi * 3.7)
        twice = normalize(once)
        assert np.max(np.abs(once.amplitudes - twice.amplitudes)) < 1e-14
        assert abs(norm(once) - 1) < 1e-12

    def test_normalize_zero(self, default_grid):
        with pytest.raises(ValueError):
            normalize(default_grid.wavefunction(np.zeros(default_grid.n_points)))


class TestDifferentiate:
    def test_gaussian(self, default_grid):
        p = default_grid.points
        g = default_grid.wavefunction(np.exp(-p**2 / 2))
        d = differentiate(g)
        assert not d.boundary_warning
        inner = np.abs(p) < 30
        assert np.max(np.abs(d.amplitudes - (-p * np.exp(-p**2 / 2)))[inner]) < 1e-8

    def test_gaussian_at_zero(self):
        g = MomentumGrid(-20, 20, 401)
        d = differentiate(g.sample(lambda p: np.exp(-p**2 / 2)))
        assert abs(d.amplitudes[200]) < 1e-8

    def test_sine_second_derivative(self):
        g = MomentumGrid(0.0, 2 * np.pi * 4, 257)
        s = g.sample(np.sin)
        d2 = differentiate(s, 2)
        assert np.max(np.abs(d2.amplitudes + np.sin(g.points))) < 1e-8

    def test_warning_flag(self):
        g = MomentumGrid(-1, 1, 65)
        d = differentiate(g.sample(lambda p: 1 + p))
        assert d.boundary_warning
        assert np.allclose(d.amplitudes, 1.0)

    def test_order(self, default_grid):
        with pytest.raises(ValueError):
            differentiate(squeezed(grid=default_grid), 3)

    @given(smooth_states(), smooth_states())
    def test_integration_by_parts(self, phi, psi):
        lhs = inner_product(psi, differentiate(phi))
        rhs = -inner_product(differentiate(psi), phi)
        assert abs(lhs - rhs) < 1e-8


class TestExpectations:
    def test_momentum(self):
        psi = squeezed(a=1.0, p0=2.0)
        assert abs(expectation(psi, canonical_p) - 2.0) < 1e-8

    def test_identity(self):
        psi = squeezed(a=0.4, x0=1.0, p0=-0.3)
        assert abs(expectation(psi, lambda s: s) - 1.0) < 1e-10

    def test_position(self):
        psi = squeezed(a=1.0, x0=-1.5)
        assert abs(expectation(psi, canonical_x) - (-1.5)) < 1e-8

    @pytest.mark.parametrize("a", [0.25, 1.0, 4.0])
    def test_canonical_widths(self, a):
        psi = squeezed(a=a, x0=0.7, p0=-0.2)
        dp = uncertainty(psi, canonical_p)
        dx = uncertainty(psi, canonical_x)
        assert dp == pytest.approx(math.sqrt(1 / (2 * a)), abs=1e-8)
        assert dx == pytest.approx(math.sqrt(a / 2), abs=1e-8)
        assert dx * dp == pytest.approx(0.5, abs=1e-8)

    def test_hbar_scaling(self):
        u = PhysicalUnits(hbar=0.3)
        psi = squeezed(a=2.0, x0=0.1, units=u)
        assert uncertainty(psi, lambda s: canonical_x(s, u)) == pytest.approx(0.3 * math.sqrt(1.0), abs=1e-8)

    def test_square_modes_agree(self):
        psi = squeezed(a=1.3, x0=0.4, p0=0.2)
        a = uncertainty(psi, canonical_x)
        b = uncertainty(psi, canonical_x, square="norm")
        assert a == pytest.approx(b, abs=1e-10)

    def test_non_symmetric_detected(self):
        psi = squeezed(a=1.0, x0=0.5)
        with pytest.raises(ValueError, match="non-symmetric operator or numerical breakdown"):
            uncertainty(psi, lambda s: s * 1j)

    def test_canonical_moments(self):
        psi = squeezed(a=2.0, x0=-0.8)
        mean, spread = canonical_moments(psi)
        assert mean == pytest.approx(-0.8, abs=1e-10)
        assert spread == pytest.approx(1.0, abs=1e-10)


class TestPositionAmplitude:
    def test_gaussian_transform(self):
        psi = squeezed(a=1.0)
        x = np.linspace(-5, 5, 41)
        amp = position_amplitude(psi, x)
        expected = np.pi ** -0.25 * np.exp(-x**2 / 2)
        assert np.max(np.abs(amp - expected)) < 1e-10

    def test_peak_follows_x0(self):
        psi = squeezed(a=1.0, x0=3.0)
        x = np.linspace(-2, 8, 1001)
        assert x[np.argmax(np.abs(position_amplitude(psi, x)))] == pytest.approx(3.0, abs=1e-9)

    @given(smooth_states(grid=MomentumGrid(-15, 15, 301)))
    def test_parseval(self, psi):
        x = np.linspace(-40, 40, 4001)
        dens = np.abs(position_amplitude(psi, x)) ** 2
        assert np.trapezoid(dens, x) == pytest.approx(1.0, abs=1e-6)

    def test_empty(self):
        with pytest.raises(ValueError):
            position_amplitude(squeezed(), [])


class TestHeuristicAndIO:
    def test_gaussian_passes(self):
        assert passes_schwartz_heuristic(squeezed(a=1.0))

    def test_slow_decay_fails(self, default_grid):
        psi = normalize(default_grid.sample(lambda p: 1 / (1 + p**2)))
        assert not passes_schwartz_heuristic(psi)

    def test_csv_round_trip(self, tmp_path):
        psi = squeezed(a=0.7, x0=1.1, p0=0.3, grid=MomentumGrid(-12, 12, 65))
        path = tmp_path / "psi.csv"
        write_wavefunction_csv(psi, path)
        assert path.read_text().splitlines()[0] == "p,re,im"
        back = read_wavefunction_csv(path)
        assert back.grid == psi.grid
        assert np.array_equal(back.amplitudes, psi.amplitudes)

    def test_pure(self):
        a = squeezed(a=0.9, x0=0.2)
        b = squeezed(a=0.9, x0=0.2)
        assert np.array_equal(differentiate(a, 2).amplitudes, differentiate(b, 2).amplitudes)
