import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from guplab.egup import (
    ConvergenceError,
    QDeformation,
    build_egup_XP,
    build_egup_XP_approx,
    build_q_ladders,
    commutator_fit,
    egup_min_uncertainty,
    egup_oscillator_spectrum,
    egup_squeezed_uncertainties,
    laurent_fit,
    q_number,
    q_oscillator_levels,
)
from guplab.grid import PhysicalUnits
from guplab.oscillator import FockVector, build_ladder, position_matrix
from guplab.states import SqueezedParams

NAT = PhysicalUnits()


class TestQNumber:
    def test_values(self):
        assert q_number(2.0, 3) == 7.0
        assert q_number(1.0, 5) == 5.0
        assert q_number(1.5, 0) == 0.0

    def test_series_oracle(self):
        eps = 0.01
        series = 4 + eps * 4 * 3 / 2 + eps**2 * 4 * 3 * 2 / 6
        assert q_number(1 + eps, 4) == pytest.approx(series, abs=1e-4)
        assert q_number(1 + eps, 4) == pytest.approx((1.01**4 - 1) / 0.01, rel=1e-13)

    @pytest.mark.parametrize("eps", [0.99e-8, 1.01e-8, 1e-4, 0.3, 0.7])
    def test_exact_rational_oracle(self, eps):
        # both sides of the series switch against exact rational arithmetic
        q = 1 + eps
        exact_q = Fraction(q)
        for n in (0, 1, 7, 59, 200):
            ref = (exact_q**n - 1) / (exact_q - 1)
            assert q_number(q, n) == pytest.approx(float(ref), rel=1e-13)

    def test_vectorised(self):
        assert np.array_equal(q_number(2.0, np.arange(4)), np.array([0.0, 1.0, 3.0, 7.0]))

    def test_negative(self):
        with pytest.raises(ValueError):
            q_number(1.1, -1)

    @given(st.floats(1.0, 2.0), st.integers(0, 200))
    def test_recursion(self, q, n):
        # [n+1] - q [n] = 1
        lhs = q_number(q, n + 1) - q * q_number(q, n)
        assert lhs == pytest.approx(1.0, abs=1e-12 * max(1.0, q_number(q, n + 1)))


class TestLadders:
    def test_vacuum(self):
        a, _ = build_q_ladders(QDeformation.paper_consistent(1.3, N=10))
        assert np.all((a @ FockVector.basis(0, 11)).coeffs == 0)

    @pytest.mark.parametrize("q", [1.0, 1.1, 1.2, 1.5, 2.0])
    def test_q_commutator(self, q):
        d = QDeformation.paper_consistent(q, N=40)
        a, ad = build_q_ladders(d)
        c = (a @ ad).matrix - q * (ad @ a).matrix
        inner = c[: d.N, : d.N]
        scale = q_number(q, np.arange(1, d.N + 1))
        assert np.max(np.abs(inner.diagonal() - 1) / scale) < 1e-14
        assert np.array_equal(inner - np.diag(inner.diagonal()), np.zeros_like(inner))

    def test_canonical(self):
        a, ad = build_q_ladders(QDeformation.paper_consistent(1.0, N=12))
        b, bd = build_ladder(13)
        assert np.array_equal(a.matrix, b.matrix)
        assert np.array_equal(ad.matrix, bd.matrix)


class TestXP:
    def test_hermitian(self):
        X, P = build_egup_XP(QDeformation.paper_consistent(1.3, N=50))
        assert X.is_hermitian(1e-12) and P.is_hermitian(1e-12)

    def test_canonical_commutator(self):
        d = QDeformation.paper_consistent(1.0, L=0.8, N=30)
        assert 4 * d.K * d.L == pytest.approx(2.0, rel=1e-15)
        X, P = build_egup_XP(d)
        c = (X @ P - P @ X).matrix[:-1, :-1]
        assert np.allclose(c, 1j * np.eye(d.N), atol=1e-13)

    def test_vacuum_spread(self):
        d = QDeformation.paper_consistent(1.4, L=1.7, N=20)
        X, _ = build_egup_XP(d)
        v = FockVector.basis(0, d.dim).coeffs
        assert np.vdot(X.matrix @ v, X.matrix @ v).real == pytest.approx(d.L**2, rel=1e-14)

    # [N] grows like q^N, so large q needs a small basis to keep c0 resolvable
    @pytest.mark.parametrize("q, N", [(1.05, 60), (1.1, 60), (1.5, 25), (2.0, 15)])
    def test_commutator_fit(self, q, N):
        d = QDeformation.paper_consistent(q, L=1.3, N=N)
        fit = commutator_fit(d)
        assert fit.residual < 1e-9 * max(1.0, q_number(q, d.N))
        assert np.allclose((fit.c0, fit.alpha, fit.beta), fit.closed_form, rtol=1e-8)

    def test_scale_constraint(self):
        d = QDeformation.paper_consistent(1.3, L=0.9, hbar=0.5)
        assert 4 * d.K * d.L == pytest.approx(0.5 * 2.3, rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            QDeformation(0.9, 1.0, 1.0)
        with pytest.raises(ValueError):
            QDeformation(1.1, 0.0, 1.0)


class TestMinimum:
    @pytest.mark.parametrize("q", [1.1, 1.2])
    def test_floor(self, q):
        d = QDeformation.paper_consistent(q, L=1.0, N=100)
        r = egup_min_uncertainty(d)
        floor = math.sqrt((q - 1) / q)
        assert r.dx_min >= floor - 1e-6
        assert r.dx_min / floor == pytest.approx(1.0, abs=0.02)

    def test_xp_symmetry(self):
        d = QDeformation.paper_consistent(1.1, L=1.5, N=60)
        r = egup_min_uncertainty(d)
        assert r.dp_min / d.K == pytest.approx(r.dx_min / d.L, rel=1e-10)

    def test_scale(self):
        a = egup_min_uncertainty(QDeformation.paper_consistent(1.2, L=1.0, N=60))
        b = egup_min_uncertainty(QDeformation.paper_consistent(1.2, L=3.0, N=60))
        assert b.dx_min == pytest.approx(3.0 * a.dx_min, rel=1e-9)

    def test_canonical_has_no_floor(self):
        spreads = [egup_min_uncertainty(QDeformation.paper_consistent(1.0, N=n)).dx_min for n in (20, 80)]
        assert spreads[1] < spreads[0] < 0.5

    def test_state_is_normalised(self):
        r = egup_min_uncertainty(QDeformation.paper_consistent(1.2, N=40))
        assert r.x_state.norm() == pytest.approx(1.0, abs=1e-12)

    def test_nonconvergence(self):
        # parity pins the mean at zero, so one step always suffices; a zero
        # budget is the only way to exhaust it
        with pytest.raises(ConvergenceError) as info:
            egup_min_uncertainty(QDeformation.paper_consistent(1.2, N=40), max_iter=0)
        assert info.value.last.dim == 41


class TestApprox:
    def test_canonical(self):
        d = QDeformation.oscillator_mode(1.0, NAT, N=20)
        X, _ = build_egup_XP_approx(d, NAT)
        assert np.allclose(X.matrix, position_matrix(NAT, 21).matrix, atol=1e-14)

    def test_second_order_gap(self):
        units = PhysicalUnits(hbar=0.8, mass=1.3, omega=0.6)

        def gap(eps):
            d = QDeformation.oscillator_mode(1 + eps, units, N=30)
            Xa, Pa = build_egup_XP_approx(d, units)
            X, P = build_egup_XP(d)
            return np.abs(Xa.matrix - X.matrix)[:10, :10], np.abs(Pa.matrix - P.matrix)[:10, :10]

        for big, small in zip(gap(1e-2), gap(5e-3)):
            mask = big > 1e-10
            ratio = big[mask] / small[mask]
            assert np.all(np.abs(ratio - 4) < 0.5)

    def test_vacuum_first_order(self):
        eps = 1e-3
        d = QDeformation.oscillator_mode(1 + eps, NAT, N=20)
        X, _ = build_egup_XP_approx(d, NAT)
        v = FockVector.basis(0, d.dim).coeffs
        val = np.vdot(X.matrix @ v, X.matrix @ v).real / NAT.L0**2
        assert abs(val - 1) < 5 * eps


class TestSqueezed:
    def test_canonical(self):
        d = QDeformation.oscillator_mode(1.0, NAT, N=80)
        r = egup_squeezed_uncertainties(d, NAT, SqueezedParams(1.0))
        assert r.dX == pytest.approx(math.sqrt(0.5), abs=1e-8)
        assert r.dP == pytest.approx(math.sqrt(0.5), abs=1e-8)

    @pytest.mark.parametrize("a", [0.3, 1.0, 3.0])
    def test_routes_agree(self, a):
        d = QDeformation.oscillator_mode(1.01, NAT, N=150)
        sp = SqueezedParams(a, 1.0, 1.0)
        f = egup_squeezed_uncertainties(d, NAT, sp, route="fock")
        g = egup_squeezed_uncertainties(d, NAT, sp, route="grid")
        assert f.dX == pytest.approx(g.dX, rel=1e-6)
        assert f.dP == pytest.approx(g.dP, rel=1e-6)

    def test_projection_refused(self):
        d = QDeformation.oscillator_mode(1.01, NAT, N=40)
        with pytest.raises(ValueError, match="increase N or reduce squeezing"):
            egup_squeezed_uncertainties(d, NAT, SqueezedParams(1e-3, 1.0, 1.0))

    def test_both_ends(self):
        d = QDeformation.oscillator_mode(1.01, NAT, N=100)
        vals = {a: egup_squeezed_uncertainties(d, NAT, SqueezedParams(a, 1.0, 1.0), route="grid") for a in (1e-3, 1.0, 1e3)}
        assert vals[1e-3].dX > vals[1.0].dX and vals[1e3].dX > vals[1.0].dX
        assert vals[1e-3].dP > vals[1.0].dP and vals[1e3].dP > vals[1.0].dP

    def test_bad_route(self):
        with pytest.raises(ValueError):
            egup_squeezed_uncertainties(QDeformation.oscillator_mode(1.01), NAT, SqueezedParams(1.0), route="x")


class TestSpectrum:
    def test_canonical(self):
        E = egup_oscillator_spectrum(QDeformation.oscillator_mode(1.0, NAT, N=60), NAT, 30)
        assert np.max(np.abs(E - (np.arange(30) + 0.5))) < 1e-10

    @pytest.mark.parametrize("q", [1.001, 1.1, 1.5, 2.0])
    def test_closed_form(self, q):
        units = PhysicalUnits(hbar=0.9, mass=1.2, omega=0.7)
        d = QDeformation.oscillator_mode(q, units, N=60)
        E = egup_oscillator_spectrum(d, units, 40)
        ref = q_oscillator_levels(d, units, 40)
        assert np.max(np.abs(E - ref) / np.maximum(1.0, np.abs(ref))) < 1e-10

    def test_first_order(self):
        E = egup_oscillator_spectrum(QDeformation.oscillator_mode(1.001, NAT, N=40), NAT, 5)
        assert (E[4] - 4.5) / 0.008 == pytest.approx(1.0, abs=0.05)

    @pytest.mark.parametrize("n", range(1, 11))
    def test_series_identity(self, n):
        ratios = []
        for eps in (1e-2, 1e-3, 1e-4):
            d = QDeformation.oscillator_mode(1 + eps, NAT, N=40)
            level = q_oscillator_levels(d, NAT, n + 1)[n]
            ratios.append((level - (n + 0.5)) / (0.5 * eps * n * n))
        errors = [abs(r - 1) for r in ratios]
        if n > 1:
            # n = 1 has no higher-order terms, so only round-off is left there
            assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 1e-3

    def test_needs_oscillator_mode(self):
        with pytest.raises(ValueError, match="oscillator mode"):
            egup_oscillator_spectrum(QDeformation.paper_consistent(1.1, L=3.0, N=60), NAT, 10)

    def test_needs_truncation(self):
        with pytest.raises(ValueError):
            egup_oscillator_spectrum(QDeformation.oscillator_mode(1.1, NAT, N=17), NAT, 10)


def test_laurent_fit_recovers_coefficients():
    a = np.geomspace(1e-2, 1e2, 30)
    y = 0.3 / a + 1.5 + 0.02 * a
    coef, resid = laurent_fit(a, y, [-1, 0, 1])
    assert np.allclose(coef, [0.3, 1.5, 0.02], rtol=1e-10)
    assert resid < 1e-12
