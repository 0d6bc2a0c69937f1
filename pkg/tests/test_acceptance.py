"""Acceptance gate: criteria 1-14, one PASS/FAIL line each.

Run under pytest (the lines are collected in the terminal summary) or as a
script, ``python3 tests/test_acceptance.py``, which prints them directly.
Every criterion is evaluated at its stated tolerance.
"""

import contextlib
import io
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from guplab import cli
from guplab.deform import parse_deformation, quadratic
from guplab.egup import (
    QDeformation,
    build_q_ladders,
    egup_min_uncertainty,
    egup_oscillator_spectrum,
    egup_squeezed_uncertainties,
    q_number,
    q_oscillator_levels,
)
from guplab.grid import NATURAL, MomentumGrid, expectation, inner_product, norm, position_amplitude, uncertainty
from guplab.operators import (
    check_gup,
    commutator_residual,
    deformed_X,
    deformed_X_sandwich,
    deformed_X_via_g,
    momentum_action,
    nonsymmetric_X,
    position_action,
)
from guplab.oscillator import (
    OscillatorSpec,
    apply_V_momentum,
    build_H_gup,
    delta_E_perturbative,
    hermite_eigenstate,
    oscillator_grid,
    spectrum,
)
from guplab.states import (
    MLParams,
    SqueezedParams,
    gaussian_deformed_dx,
    min_dx_over_gaussians,
    ml_grid,
    ml_state,
    squeezed_grid,
    squeezed_state,
    windowed_ml_state,
)
from guplab.wigner import (
    default_x_grid,
    marginals,
    phase_space_expectation,
    weyl_symbol_deformed_X,
    weyl_symbol_deformed_X2,
    wigner_function,
)

sys.path.insert(0, str(Path(__file__).parent))
from conftest import gaussian_mixture  # noqa: E402

HBAR = NATURAL.hbar


def _squeezed(a, x0=0.0, p0=0.0, grid=None):
    sp = SqueezedParams(a, x0, p0)
    return squeezed_state(sp, grid or squeezed_grid(sp))


# ------------------------------------------------------------ criteria
# each returns (passed, detail)


def criterion_1():
    worst_ml = 0.0
    for beta in (0.01, 0.04):
        psi = ml_state(MLParams(0.0, beta), ml_grid(beta))
        dx = uncertainty(psi, position_action(quadratic(beta), form="sandwich"), square="norm")
        worst_ml = max(worst_ml, abs(dx / (HBAR * math.sqrt(beta)) - 1.0))
    rng = np.random.default_rng(20240601)
    worst_gap = math.inf
    for _ in range(100):
        beta = 10 ** rng.uniform(-4, 0)
        x0, p0 = rng.uniform(-3, 3, size=2)
        r = min_dx_over_gaussians(beta, x0, p0)
        worst_gap = min(worst_gap, r.dx_min - HBAR * math.sqrt(beta))
    ok = worst_ml < 1e-5 and worst_gap >= 0.0
    return ok, f"ML state rel err {worst_ml:.2e} (tol 1e-5); min over 100 draws of dx_min - hbar sqrt(beta) = {worst_gap:.3e}"


def criterion_2():
    spec, canon = quadratic(0.01), quadratic(0.0)
    worst_margin, worst_sat = math.inf, 0.0
    for a in np.geomspace(1e-3, 1e3, 61):
        psi = _squeezed(a)
        r = check_gup(spec, psi)
        worst_margin = min(worst_margin, r.lhs - r.rhs)
        worst_sat = max(worst_sat, abs(check_gup(canon, psi).lhs - 0.5 * HBAR))
    ok = worst_margin >= -1e-9 and worst_sat < 1e-8
    return ok, f"min lhs - rhs {worst_margin:.3e} (>= -1e-9); beta=0 |lhs - hbar/2| max {worst_sat:.2e} (tol 1e-8)"


def criterion_3():
    worst, where = 0.0, None
    for a in (0.1, 1.0, 10.0):
        for beta in (0.0, 0.01, 0.1):
            X = position_action(quadratic(beta))
            for x0, p0 in ((0, 0), (1, 0), (0, 1), (1, 1)):
                sp = SqueezedParams(a, x0, p0)
                num = uncertainty(squeezed_state(sp, squeezed_grid(sp)), X)
                err = abs(num / gaussian_deformed_dx(sp, beta) - 1.0)
                if err >= worst:
                    worst, where = err, (a, beta, x0, p0)
    return worst < 1e-6, f"36 cases, max rel err {worst:.2e} at (a, beta, x0, p0) = {where} (tol 1e-6)"


def criterion_4():
    grid = MomentumGrid.default()
    rng = np.random.default_rng(7)
    specs = [quadratic(0.1), parse_deformation("1 + beta*p^2/(1 + p^2)", {"beta": 0.5})]
    worst = 0.0
    for i in range(50):
        k = int(rng.integers(1, 4))
        psi = gaussian_mixture(
            grid,
            rng.uniform(-4, 4, k),
            rng.uniform(0.6, 2.5, k),
            rng.uniform(-3, 3, k),
            rng.uniform(-1, 1, (k, 2)),
        )
        spec = specs[i % 2]
        diff = deformed_X_sandwich(spec, psi) - deformed_X_via_g(spec, psi)
        worst = max(worst, norm(diff) / norm(psi))
    return worst < 1e-8, f"50 random states, max relative difference {worst:.2e} (tol 1e-8)"


def criterion_5():
    grid = MomentumGrid.default()
    worst = 0.0
    for beta in (0.01, 0.1):
        spec = quadratic(beta)
        for a, x0, p0 in ((1.0, 0.0, 0.0), (0.5, 1.0, -0.5), (2.0, -1.5, 1.0), (0.2, 0.5, 2.0)):
            worst = max(worst, commutator_residual(spec, _squeezed(a, x0, p0, grid)))
    return worst < 1e-8, f"max residual {worst:.2e} over 8 Gaussian cases (tol 1e-8)"


def criterion_6():
    spec = quadratic(0.1)
    psi = _squeezed(1.0, 0.0, 1.0)
    im_old = abs(expectation(psi, lambda s: nonsymmetric_X(spec, s)).imag)
    im_new = abs(expectation(psi, lambda s: deformed_X(spec, s)).imag)
    ok = im_old > 1e-3 and im_new < 1e-10
    return ok, f"|Im<X>| non-symmetric {im_old:.4g} (> 1e-3), symmetric {im_new:.2e} (< 1e-10), p0 = 1"


def criterion_7():
    start = time.perf_counter()
    worst = 0.0
    for beta in (1e-4, 1e-3):
        spec = OscillatorSpec(NATURAL, beta=beta, truncation=200)
        E = spectrum(build_H_gup(spec), 11)
        for n in range(11):
            ratio = (E[n] - (n + 0.5)) / delta_E_perturbative(spec, n)
            worst = max(worst, abs(ratio - 1.0))
    elapsed = time.perf_counter() - start
    ok = worst <= 0.05 and elapsed <= 5.0
    return ok, f"max |ratio - 1| {worst:.2e} (<= 0.05), runtime {elapsed:.2f} s (<= 5 s)"


def criterion_8():
    spec = OscillatorSpec(NATURAL, beta=1e-3)
    grid = oscillator_grid(NATURAL, 5)
    worst, where = 0.0, None
    for n in range(6):
        psi = hermite_eigenstate(NATURAL, n, grid)
        val = inner_product(psi, apply_V_momentum(spec, psi)).real
        err = abs(val / delta_E_perturbative(spec, n) - 1.0)
        if err >= worst:
            worst, where = err, n
    return worst < 1e-6, f"beta=1e-3, max rel err {worst:.2e} at n={where} (tol 1e-6)"


def _wigner_errors(psi, spec, widths, units=NATURAL):
    x = default_x_grid(psi, units, n=257, widths=widths)
    W = wigner_function(psi, x, units)
    mom, pos = marginals(W)
    rows = np.searchsorted(psi.p, W.p)
    marg = max(
        float(np.max(np.abs(mom - np.abs(psi.amplitudes[rows]) ** 2))),
        float(np.max(np.abs(pos - np.abs(position_amplitude(psi, x, units)) ** 2))),
    )
    X = deformed_X(spec, psi, units)
    ops = (norm(psi) ** 2, inner_product(psi, psi.multiply(psi.p)).real, inner_product(psi, X).real, norm(X) ** 2)
    symbols = (
        lambda x, p: np.ones_like(x),
        lambda x, p: p,
        lambda x, p: weyl_symbol_deformed_X(spec, x, p),
        lambda x, p: weyl_symbol_deformed_X2(spec, x, p, units),
    )
    moment = max(abs(phase_space_expectation(W, s) - o) for s, o in zip(symbols, ops))
    return marg, moment


def criterion_9():
    start = time.perf_counter()
    spec = quadratic(0.1)
    cases = [(_squeezed(a, x0, p0), spec, 12.0) for a, x0, p0 in ((1.0, 0.0, 0.0), (0.5, 1.0, -0.5), (2.0, -0.8, 1.0))]
    grid = oscillator_grid(NATURAL, 3, n_points=1025)
    cases += [(hermite_eigenstate(NATURAL, n, grid), spec, 12.0) for n in range(4)]
    for beta, xi in ((0.04, 0.0), (0.04, 0.5), (0.1, -0.3)):
        reach = 60.0 / math.sqrt(beta)
        psi = windowed_ml_state(MLParams(xi, beta), MomentumGrid(-reach, reach, 4097), 3.0 / math.sqrt(beta))
        cases.append((psi, quadratic(beta), 16.0))
    errs = [_wigner_errors(*c) for c in cases]
    marg = max(e[0] for e in errs)
    moment = max(e[1] for e in errs)
    elapsed = time.perf_counter() - start
    ok = marg < 1e-6 and moment < 1e-5 and elapsed <= 30.0
    return ok, (
        f"{len(cases)} states, marginal err {marg:.2e} (tol 1e-6), moment err {moment:.2e} (tol 1e-5), "
        f"runtime {elapsed:.2f} s (<= 30 s)"
    )


def criterion_10():
    eps = np.finfo(float).eps
    worst_alg = 0.0
    for q in (1.0, 1.1, 1.5, 2.0):
        d = QDeformation.paper_consistent(q, N=100)
        a, ad = build_q_ladders(d)
        c = ((a @ ad).matrix - q * (ad @ a).matrix)[: d.N, : d.N]
        n = np.arange(d.N)
        # round-off of a difference of terms of size [n+1] and q[n], in ulps
        scale = q_number(q, n + 1) + q * q_number(q, n)
        worst_alg = max(worst_alg, float(np.max(np.abs(c - np.eye(d.N)).max(axis=1) / (eps * scale))))
    worst_spec = 0.0
    for q in (1.0, 1.1, 1.5, 2.0):
        d = QDeformation.oscillator_mode(q, NATURAL, N=100)
        count = d.N - 9
        E = egup_oscillator_spectrum(d, NATURAL, count)
        ref = q_oscillator_levels(d, NATURAL, count)
        worst_spec = max(worst_spec, float(np.max(np.abs(E - ref) / np.maximum(1.0, np.abs(ref)))))
    ok = worst_alg <= 4.0 and worst_spec < 1e-10
    return ok, (
        f"q-commutator interior residual {worst_alg:.1f} ulp (<= 4 ulp); "
        f"spectrum vs ([n]+[n+1])/2 for n <= N-10, N=100: {worst_spec:.2e} relative (tol 1e-10)"
    )


def criterion_11():
    lo, hi = math.inf, -math.inf
    for eps in (1e-3, 1e-2):
        d = QDeformation.oscillator_mode(1.0 + eps, NATURAL, N=40)
        E = egup_oscillator_spectrum(d, NATURAL, 11)
        n = np.arange(1, 11)
        ratio = (E[1:] - (n + 0.5)) / (0.5 * eps * n**2)
        lo, hi = min(lo, float(ratio.min())), max(hi, float(ratio.max()))
    return 0.95 <= lo and hi <= 1.05, f"ratio range [{lo:.4f}, {hi:.4f}] (within [0.95, 1.05])"


def criterion_12():
    parts, ok = [], True
    for q in (1.05, 1.1, 1.2):
        d = QDeformation.paper_consistent(q, L=1.0, N=100)
        floor = d.L * math.sqrt((q - 1.0) / q)
        dx = egup_min_uncertainty(d).dx_min
        good = abs(dx / floor - 1.0) <= 0.02 and dx >= floor - 1e-6
        ok &= good
        parts.append(f"q={q}: dx/floor={dx / floor:.4f}{'' if good else ' (out)'}")
    return ok, "N=100, " + ", ".join(parts) + " (within 2%, never below by > 1e-6)"


def criterion_13():
    ok, parts = True, []
    # GUP, grid quadrature, interior point from the closed-form minimiser
    X = position_action(quadratic(0.01))
    for x0, p0 in ((0.0, 0.0), (1.0, 1.0)):
        a_mid = min_dx_over_gaussians(0.01, x0, p0).a_star
        lo, mid, hi = (uncertainty(_squeezed(a, x0, p0), X) for a in (1e-4, a_mid, 1e4))
        ok &= lo > mid and hi > mid
        parts.append(f"GUP(x0={x0:g},p0={p0:g}) {lo:.4g} > {mid:.4g} < {hi:.4g}")
    # EGUP, grid route, interior point from a log scan
    d = QDeformation.oscillator_mode(1.01, NATURAL)
    dX = lambda a: egup_squeezed_uncertainties(d, NATURAL, SqueezedParams(a, 1.0, 1.0), route="grid").dX
    scan = np.geomspace(1e-4, 1e4, 81)
    a_mid = scan[int(np.argmin([dX(a) for a in scan[1:-1]])) + 1]
    lo, mid, hi = dX(1e-4), dX(a_mid), dX(1e4)
    ok &= lo > mid and hi > mid
    parts.append(f"EGUP(eps=0.01) {lo:.4g} > {mid:.4g} < {hi:.4g}")
    return ok, "; ".join(parts)


def criterion_14():
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        rc = cli.main(["check"])
    failed = [line for line in err.getvalue().splitlines() if not line.startswith("PASS")]
    return rc == 0, f"check exit code {rc}, {len(failed)} failing checks"


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 15)}


def verdict(n):
    passed, detail = CRITERIA[n]()
    return passed, f"{'PASS' if passed else 'FAIL'} criterion {n}: {detail}"


@pytest.mark.parametrize("n", list(CRITERIA))
def test_criterion(n, record_criterion):
    passed, line = verdict(n)
    print(line)
    record_criterion(line)
    assert passed, line


if __name__ == "__main__":
    results = [verdict(n) for n in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(p for p, _ in results) else 1)
