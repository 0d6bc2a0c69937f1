"""Deformation functions of the momentum operator.

A deformation is a positive function ``f(p)`` written in a small text
language (see :mod:`guplab.expr`).  This module binds parameters, derives
``f'`` symbolically, and provides the momentum map ``k(p) = int_0^p dq/f(q)``,
its large-momentum limit and the transfer from the ``dp/f`` measure to the
flat one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import minimize_scalar

from . import expr as ex
from .grid import NATURAL, GridWaveFunction, MomentumGrid, PhysicalUnits

__all__ = [
    "DeformationError",
    "QuadratureError",
    "DeformationSpec",
    "parse_deformation",
    "quadratic",
    "momentum_map",
    "momentum_map_on",
    "momentum_cutoff",
    "to_unit_measure",
    "adaptive_simpson",
]

QUAD_TOL = 1e-12


class DeformationError(ValueError):
    pass


class QuadratureError(RuntimeError):
    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved tolerance {achieved:.3g})")
        self.achieved = achieved


@dataclass(frozen=True, eq=False)
class DeformationSpec:
    """Bound deformation function.

    Attributes
    ----------
    tree : expression tree of ``f``
    params : bound parameter values (read-only mapping)
    derivative : expression tree of ``f'`` in ``p``
    canonical_limit : require ``f(0) == 1``
    polynomial : True iff the tree is a polynomial in ``p``
    """

    tree: ex.Expr
    params: Mapping[str, float]
    derivative: ex.Expr
    canonical_limit: bool = True
    polynomial: bool = False
    coefficients: Optional[Polynomial] = field(default=None, repr=False)

    @property
    def text(self) -> str:
        return ex.to_text(self.tree)

    def f(self, p):
        """Deformation function, broadcast over ``p``."""
        out = ex.evaluate(self.tree, p, self.params)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(p)) * 1.0

    def df(self, p):
        out = ex.evaluate(self.derivative, p, self.params)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(p)) * 1.0

    def g(self, p):
        """``f(p) - 1``."""
        return self.f(p) - 1.0

    def is_canonical(self) -> bool:
        """True when ``f`` is identically one."""
        if self.coefficients is not None:
            c = self.coefficients.trim()
            return c.degree() == 0 and c.coef[0] == 1.0
        return False

    def rebind(self, **params) -> "DeformationSpec":
        """Same expression with some parameters replaced."""
        merged = dict(self.params)
        merged.update(params)
        return _bind(self.tree, merged, self.canonical_limit, self.derivative)

    def sqrt_g(self, p):
        """Smooth square root of ``g = f - 1``.

        The branch flips sign at real zeros of even multiplicity ``2 mod 4``
        so that e.g. ``beta p^2`` gives ``sqrt(beta) p`` rather than
        ``sqrt(beta)|p|``.  Zeros come from the polynomial roots when ``f``
        is polynomial and are otherwise located among the samples ``p``.
        Raises when ``g < 0``.
        """
        p = np.asarray(p, dtype=float)
        gv = self.g(p)
        scale = max(1.0, float(np.max(np.abs(gv)))) if gv.size else 1.0
        if np.any(gv < -1e-14 * scale):
            raise DeformationError("g not nonnegative")
        root = np.sqrt(np.clip(gv, 0.0, None))
        flips = self._flip_points() if self.coefficients is not None else _sampled_flips(self.g, p.ravel(), scale)
        for r in flips:
            root = root * np.where(p < r, -1.0, 1.0)
        return root

    def _flip_points(self):
        g = (self.coefficients - 1.0).trim()
        if g.degree() < 1 or not np.any(g.coef):
            return ()
        return _flip_roots(g)


def _sampled_flips(g, p, scale, tol=1e-12):
    """Flip points of ``sqrt(g)`` for non-polynomial ``g`` sampled at sorted ``p``.

    Each interior local minimum of the samples is refined by a bounded
    scalar search; if ``g`` vanishes there its multiplicity is read off the
    growth ratio ``g(r + 2h) / g(r + h) = 2^m`` at a small offset ``h``.
    """
    if p.size < 3 or np.any(np.diff(p) <= 0):
        return ()
    gv = g(p)
    idx = np.nonzero((gv[1:-1] <= gv[:-2]) & (gv[1:-1] <= gv[2:]))[0] + 1
    flips = []
    for i in idx:
        res = minimize_scalar(lambda x: float(g(np.array([x]))[0]), bounds=(p[i - 1], p[i + 1]), method="bounded",
                              options={"xatol": 1e-14 * max(1.0, abs(p[i]))})
        r = float(res.x) if res.fun < gv[i] else float(p[i])
        if min(res.fun, gv[i]) > tol * scale:
            continue
        if flips and abs(r - flips[-1]) < p[i + 1] - p[i - 1]:
            continue
        h = 1e-3 * max(1.0, abs(r))
        ratios = []
        for sgn in (1.0, -1.0):
            g1, g2 = g(np.array([r + sgn * h, r + 2 * sgn * h]))
            if g1 > 0:
                ratios.append(g2 / g1)
        if not ratios:
            continue
        m = int(round(math.log2(np.mean(ratios))))
        if m % 4 == 2:
            flips.append(r)
    return tuple(flips)


def _flip_roots(g: Polynomial):
    coef = g.coef.copy()
    # exact zeros at the origin first
    k0 = 0
    while k0 < len(coef) - 1 and coef[k0] == 0.0:
        k0 += 1
    flips = []
    if (k0 // 2) % 2 == 1:
        flips.append(0.0)
    rest = Polynomial(coef[k0:])
    if rest.degree() < 2:
        return tuple(flips)
    roots = rest.roots()
    scale = max(1.0, float(np.max(np.abs(roots))))
    real = sorted(r.real for r in roots if abs(r.imag) < 1e-6 * scale)
    # cluster nearly-equal real roots into multiplicities
    clusters = []
    for r in real:
        if clusters and abs(r - clusters[-1][0]) < 1e-6 * scale:
            clusters[-1][1] += 1
        else:
            clusters.append([r, 1])
    for r, m in clusters:
        if m % 2 == 0 and (m // 2) % 2 == 1:
            flips.append(r)
    return tuple(flips)


def _bind(tree, params, canonical_limit, derivative=None, grid: Optional[MomentumGrid] = None):
    missing = ex.parameters(tree) - set(params)
    if missing:
        raise ex.UnboundParameterError(f"unbound parameter {sorted(missing)[0]!r}")
    for name, value in params.items():
        if not math.isfinite(float(value)):
            raise DeformationError(f"parameter {name!r} is not finite")
    frozen = MappingProxyType({k: float(v) for k, v in params.items()})
    deriv = ex.derivative(tree) if derivative is None else derivative
    poly = ex.to_polynomial(tree, frozen) if ex.is_polynomial(tree) else None
    spec = DeformationSpec(
        tree=tree,
        params=frozen,
        derivative=deriv,
        canonical_limit=canonical_limit,
        polynomial=poly is not None,
        coefficients=poly,
    )
    grid = grid or MomentumGrid.default(NATURAL)
    with np.errstate(all="ignore"):
        values = spec.f(grid.points)
        at_zero = float(spec.f(0.0))
    if not np.all(np.isfinite(values)):
        raise DeformationError("deformation not finite on the default grid")
    if np.any(values <= 0.0):
        raise DeformationError("deformation not positive")
    if canonical_limit and abs(at_zero - 1.0) > 1e-12:
        raise DeformationError(f"deformation has f(0) = {at_zero:g}, expected 1")
    return spec


def parse_deformation(
    text: str,
    params: Optional[Mapping[str, float]] = None,
    canonical_limit: bool = True,
) -> DeformationSpec:
    """Parse and bind a deformation function.

    Parameters
    ----------
    text : str
        Expression in ``p`` and named parameters, e.g. ``"1 + beta*p^2"``.
    params : mapping, optional
        Values for every parameter appearing in ``text``.
    canonical_limit : bool
        Require ``f(0) = 1``.

    Raises
    ------
    ParseError
        Syntax error, with the character offset.
    UnboundParameterError
        A parameter in the text has no value.
    DeformationError
        ``f <= 0`` somewhere on the default grid.

    Examples
    --------
    >>> spec = parse_deformation("1 + beta*p^2", {"beta": 0.1})
    >>> round(float(spec.f(2.0)), 12), round(float(spec.df(3.0)), 12)
    (1.4, 0.6)
    """
    if text is None or not str(text).strip():
        raise ex.ParseError("empty expression", 0)
    tree = ex.parse(text)
    return _bind(tree, dict(params or {}), canonical_limit)


def quadratic(beta: float) -> DeformationSpec:
    """The common choice ``1 + beta p^2``."""
    return parse_deformation("1 + beta*p^2", {"beta": beta})


# --- quadrature -------------------------------------------------------------


def adaptive_simpson(func, a, b, tol=QUAD_TOL, max_depth=48):
    """Vectorised adaptive Simpson rule over many intervals at once.

    Integrates ``func`` over each ``[a[i], b[i]]``.  The absolute tolerance
    is shared among intervals in proportion to their width.  ``func`` must
    accept and return 1-d arrays.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    total_width = float(np.sum(np.abs(b - a))) or 1.0
    result = np.zeros(a.shape)
    owner = np.arange(a.size)
    fa, fb = func(a), func(b)
    m = 0.5 * (a + b)
    fm = func(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    tols = tol * np.abs(b - a) / total_width
    err_left = np.zeros(0)
    for _ in range(max_depth):
        if a.size == 0:
            break
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = func(lm), func(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        both = left + right
        err = np.abs(both - whole)
        floor = 64 * np.finfo(float).eps * np.abs(both)
        done = err <= 15.0 * np.maximum(tols, floor)
        if np.any(done):
            np.add.at(result, owner[done], both[done] + (both[done] - whole[done]) / 15.0)
        keep = ~done
        err_left = err[keep] / 15.0
        # split each unfinished interval into two children
        a2 = np.concatenate([a[keep], m[keep]])
        b2 = np.concatenate([m[keep], b[keep]])
        fa2 = np.concatenate([fa[keep], fm[keep]])
        fb2 = np.concatenate([fm[keep], fb[keep]])
        fm2 = np.concatenate([flm[keep], frm[keep]])
        m2 = np.concatenate([lm[keep], rm[keep]])
        w2 = np.concatenate([left[keep], right[keep]])
        t2 = np.concatenate([tols[keep], tols[keep]]) / 2.0
        o2 = np.concatenate([owner[keep], owner[keep]])
        a, b, fa, fb, fm, m, whole, tols, owner = a2, b2, fa2, fb2, fm2, m2, w2, t2, o2
    if a.size:
        achieved = float(np.max(err_left)) if err_left.size else float("nan")
        raise QuadratureError("adaptive Simpson did not converge", achieved)
    return result


def _inverse_f(spec):
    def inv(q):
        with np.errstate(all="ignore"):
            return 1.0 / spec.f(q)

    return inv


def momentum_map(spec: DeformationSpec, p, tol: float = QUAD_TOL):
    """``k(p) = int_0^p dq / f(q)`` by adaptive Simpson quadrature.

    Accepts a scalar or an array of momenta; returns the same shape.

    Examples
    --------
    >>> spec = parse_deformation("1 + beta*p^2", {"beta": 1.0})
    >>> abs(momentum_map(spec, 1.0) - math.pi / 4) < 1e-10
    True
    """
    p_arr = np.asarray(p, dtype=float)
    if spec.is_canonical():
        return p_arr.copy() if p_arr.ndim else float(p_arr)
    flat = p_arr.ravel()
    out = adaptive_simpson(_inverse_f(spec), np.zeros_like(flat), flat, tol=tol)
    out = out.reshape(p_arr.shape)
    return out if p_arr.ndim else float(out)


def momentum_map_on(spec: DeformationSpec, points, tol: float = QUAD_TOL) -> np.ndarray:
    """``k`` at sorted ``points``, integrated cell by cell from ``p = 0``.

    Cheaper than :func:`momentum_map` for dense grids: each cell between
    neighbouring points is integrated once and the results are summed
    outward from the origin.
    """
    pts = np.asarray(points, dtype=float)
    if np.any(np.diff(pts) <= 0):
        raise ValueError("points must be strictly increasing")
    if spec.is_canonical():
        return pts.copy()
    nodes = np.unique(np.concatenate([pts, [0.0]]))
    zero = int(np.searchsorted(nodes, 0.0))
    cells = adaptive_simpson(_inverse_f(spec), nodes[:-1], nodes[1:], tol=tol)
    k = np.empty(nodes.size)
    k[zero] = 0.0
    k[zero + 1 :] = np.cumsum(cells[zero:])
    k[:zero] = -np.cumsum(cells[:zero][::-1])[::-1]
    return k[np.searchsorted(nodes, pts)]


SUPERLINEAR_PROBES = np.array([1e3, 1e4, 1e5, 1e6])


def _superlinear(spec: DeformationSpec) -> bool:
    for sign in (1.0, -1.0):
        probe = sign * SUPERLINEAR_PROBES
        with np.errstate(all="ignore"):
            ratio = spec.f(probe) / probe**2
        if not np.all(np.isfinite(ratio)) or np.any(ratio <= 0):
            return False
        # a ratio decaying like 1/p marks merely linear growth
        if ratio[-1] / ratio[0] < 0.1:
            return False
    return True


def momentum_cutoff(spec: DeformationSpec, s_min: float = 1e-8) -> float:
    """Large-momentum limit of ``k(p)``, or ``math.inf`` if it diverges.

    The tail beyond ``p = 1`` is mapped to ``s = 1/p`` where the integrand
    ``1/(s^2 f(1/s))`` stays bounded for super-linear ``f``; the sliver
    ``[0, s_min]`` is added by constant extrapolation.

    Examples
    --------
    >>> round(momentum_cutoff(parse_deformation("1 + beta*p^2", {"beta": 1.0})), 10)
    1.5707963268
    """
    if not _superlinear(spec):
        return math.inf

    def tail(s):
        with np.errstate(all="ignore"):
            return 1.0 / (s * s * spec.f(1.0 / s))

    head = momentum_map(spec, 1.0)
    body = float(adaptive_simpson(tail, [s_min], [1.0])[0])
    sliver = s_min * float(tail(np.array([s_min]))[0])
    return head + body + sliver


def to_unit_measure(psi: GridWaveFunction, spec: DeformationSpec) -> GridWaveFunction:
    """Map a state normalised under ``dp/f`` to one normalised under ``dp``."""
    return psi.multiply(1.0 / np.sqrt(spec.f(psi.p)))
