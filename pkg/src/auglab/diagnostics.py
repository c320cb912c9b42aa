"""Verification instruments: balance identities, limit measures, shocks.

* :func:`identity_residual` checks the pointwise entropy balance
  ``v . dS/dx + d(Fdiff+Fdisp)/dx = D`` on a manufactured field, both with
  exact derivatives (adjudicating the flux-correction formulas) and with
  finite-difference outer derivatives (checking the discrete order).
* :func:`measure_estimate` evaluates the eps-weighted entropy-production
  integral along a family of fields or solutions and extrapolates in eps.
* :func:`flux_gap_decay` measures how fast the total-flux corrections decay
  as eps -> 0, integrated against a test function.
* :func:`classify_shock` extracts plateaus and the fastest jump from a
  Riemann run and classifies the jump as classical or nonclassical.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import sympy as sp

from .augmentation import (LinearConstant, NonlinearMatrix, PointJet,
                           ScalarFactored, ScalarGeneral)
from .expressions import ExprFunc


class ResolutionViolation(RuntimeError):
    """A solution-based family member has dx > eps/8."""


class NoJumpFound(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# manufactured fields


class ManufacturedField:
    """Analytic field x -> (N,) from expression strings, derivatives free."""

    def __init__(self, exprs, domain=(0.0, 2.0 * np.pi)):
        if isinstance(exprs, str):
            exprs = [exprs]
        self.components = [e if isinstance(e, ExprFunc) else ExprFunc(e, ("x",))
                           for e in exprs]
        self.domain = (float(domain[0]), float(domain[1]))
        self._derivs = {}

    @property
    def N(self):
        return len(self.components)

    def deriv(self, xs, order=0):
        """(n, N) array of the order-th derivative at the points xs."""
        if order not in self._derivs:
            self._derivs[order] = [c.diff("x", order) if order else c
                                   for c in self.components]
        xs = np.asarray(xs, dtype=float)
        return np.stack([f(xs) for f in self._derivs[order]], axis=-1)

    def grid(self, n):
        return np.linspace(self.domain[0], self.domain[1], n)


_STOCK = [
    ["0.4*sin(x)", "0.3*cos(x)", "0.25*sin(2*x)"],
    ["0.5 + 0.2*sin(x)", "0.1 + 0.3*cos(2*x)", "0.2*sin(x) + 0.1*cos(3*x)"],
    ["0.3*cos(2*x) + 0.1*sin(x)", "0.35*sin(x + 1)", "0.15*cos(x)"],
]


def stock_fields(N, domain=(0.0, 2.0 * np.pi)):
    """Three smooth test fields with N components each."""
    return [ManufacturedField([_STOCK[k][j % 3] for j in range(N)], domain)
            for k in range(3)]


# ---------------------------------------------------------------------------
# pointwise entropy-balance identity


@dataclass
class IdentityResult:
    analytic_residual: Optional[float]
    fd_residual_coarse: float
    fd_residual_fine: float
    order: float
    n: int
    worst_x: Optional[float] = None

    def to_dict(self):
        return {
            "analytic_residual": self.analytic_residual,
            "fd_residual_coarse": self.fd_residual_coarse,
            "fd_residual_fine": self.fd_residual_fine,
            "observed_order": self.order,
            "n": self.n,
            "worst_x": self.worst_x,
        }


def _implementation_terms(spec, field, xs):
    eps = spec.eps
    V = field.deriv(xs, 0)
    V1 = field.deriv(xs, 1)
    V2 = field.deriv(xs, 2)
    jet = PointJet(V, eps * V1, eps * eps * V2)
    svals = spec.eval_S(jet)
    fdiff, fdisp = spec.flux_corrections(jet)
    return V, svals, fdiff + fdisp, spec.dissipation(jet)


def _fd_residual(spec, field, n, stencil_order):
    xs = field.grid(n)
    dx = xs[1] - xs[0]
    V, svals, fcorr, dvals = _implementation_terms(spec, field, xs)
    if stencil_order == 2:
        def d1(a):
            return (a[2:] - a[:-2]) / (2.0 * dx)
        trim = slice(1, -1)
    else:
        def d1(a):
            return (-a[4:] + 8.0 * a[3:-1] - 8.0 * a[1:-3] + a[:-4]) / (12.0 * dx)
        trim = slice(2, -2)
    sx = np.stack([d1(svals[:, a]) for a in range(V.shape[1])], axis=-1)
    resid = np.einsum("ij,ij->i", V[trim], sx) + d1(fcorr) - dvals[trim]
    return float(np.max(np.abs(resid)))


def _jet_syms(N):
    mk = lambda tag: [sp.Symbol(f"{tag}{i}", real=True) for i in range(N)]
    return mk("jv"), mk("jp"), mk("jq"), mk("jr")


def _make_dx(vs, ps, qs, rs):
    def Dx(e):
        out = sp.S.Zero
        for j in range(len(vs)):
            out += sp.diff(e, vs[j]) * ps[j] + sp.diff(e, ps[j]) * qs[j] \
                + sp.diff(e, qs[j]) * rs[j]
        return out
    return Dx


def _lamb(exprs, args):
    fns = [sp.lambdify(args, e, modules="numpy") for e in exprs]

    def call(cols):
        vals = [np.asarray(f(*cols), dtype=float) for f in fns]
        n = cols[0].shape[0]
        return np.stack([np.broadcast_to(v, (n,)) for v in vals], axis=-1)

    return call


def _exact_terms_linear(spec, V, V1, V2, V3):
    eps, B, K = spec.eps, spec.B, spec.K
    sx = eps * np.einsum("ij,nj->ni", B, V2) + eps**2 * np.einsum(
        "ij,nj->ni", K, V3)
    q = lambda a, M, b: np.einsum("ni,ij,nj->n", a, M, b)
    fdiff_x = -eps * (q(V1, B, V1) + q(V, B, V2))
    cubic = q(V3, K, V) + 3.0 * q(V2, K, V1) + 3.0 * q(V1, K, V2) + q(V, K, V3)
    fdisp_x = 0.5 * eps**2 * (3.0 * (q(V2, K, V1) + q(V1, K, V2)) - cubic)
    dvals = -0.5 * eps * q(V1, B + B.T, V1)
    return sx, fdiff_x + fdisp_x, dvals


def _memo_build(spec, builder):
    """Cache the lambdified identity evaluators on the (frozen) spec."""
    fns = spec.__dict__.get("_identity_fns")
    if fns is None:
        fns = builder()
        object.__setattr__(spec, "_identity_fns", fns)
    return fns


def _exact_terms_nonlinear(spec, V, V1, V2, V3):
    if spec.sym is None:
        raise ValueError("exact identity needs an expression-backed spec")
    N = spec.N

    def build():
        vs, ps, qs, rs = _jet_syms(N)
        Dx = _make_dx(vs, ps, qs, rs)
        sub = dict(zip(spec.sym["symbols"], vs))
        B = spec.sym["B"].subs(sub)
        h = spec.sym["h"].subs(sub)
        gradh = h.jacobian(vs)
        vM, pM = sp.Matrix(vs), sp.Matrix(ps)
        Hm = sp.Matrix(spec.H)
        eps = sp.Float(spec.eps)
        hx = gradh * pM
        hxx = hx.applyfunc(Dx)
        S = eps * B * pM + eps**2 * gradh.T * Hm * hxx
        fdiff = -(eps * (vM.T * B * pM))[0, 0]
        fdisp = (-(eps**2) * (vM.T * gradh.T * Hm * hxx)
                 + (eps**2 / 2) * (hx.T * Hm * hx))[0, 0]
        dexpr = (-(eps / 2) * (pM.T * (B + B.T) * pM))[0, 0]
        args = vs + ps + qs + rs
        return (_lamb([Dx(S[a, 0]) for a in range(N)], args),
                _lamb([Dx(fdiff + fdisp), dexpr], args))

    sx_fn, rest_fn = _memo_build(spec, build)
    cols = [V[:, j] for j in range(N)] + [V1[:, j] for j in range(N)] \
        + [V2[:, j] for j in range(N)] + [V3[:, j] for j in range(N)]
    sx = sx_fn(cols)
    rest = rest_fn(cols)
    return sx, rest[:, 0], rest[:, 1]


def _exact_terms_factored(spec, V, V1, V2, V3):
    if spec.sym is None:
        raise ValueError("exact identity needs an expression-backed spec")

    def build():
        (ju,), (jp,), (jq,), (jr,) = _jet_syms(1)
        Dx = _make_dx([ju], [jp], [jq], [jr])
        usym = sp.Symbol("u", real=True)
        B = spec.sym["B"].subs(usym, ju)
        k1 = spec.sym["k1"].subs(usym, ju)
        k2 = spec.sym["k2"].subs(usym, ju)
        k2p = sp.diff(spec.sym["k2"], usym).subs(usym, ju)
        eps = sp.Float(spec.eps)
        S = eps * B * jp + eps**2 * k1 * (k2p * jp**2 + k2 * jq)
        s1 = B * (eps * jp) + k1 * k2p * (eps * jp) ** 2
        s2 = k1 * k2
        sbar = s2 / 2
        fdiff = -ju * s1
        fdisp = -(eps**2) * ju * jq * s2 + eps**2 * jp**2 * sbar
        dexpr = -jp * s1 + eps**2 * jp**3 * sp.diff(sbar, ju)
        return _lamb([Dx(S), Dx(fdiff + fdisp), dexpr], [ju, jp, jq, jr])

    out = _memo_build(spec, build)([V[:, 0], V1[:, 0], V2[:, 0], V3[:, 0]])
    return out[:, 0][:, None], out[:, 1], out[:, 2]


def _exact_terms_general(spec, V, V1, V2, V3):
    if spec.sym is None:
        raise ValueError("exact identity needs an expression-backed spec")

    def build():
        (ju,), (jp,), (jq,), (jr,) = _jet_syms(1)
        Dx = _make_dx([ju], [jp], [jq], [jr])
        usym, vsym = sp.Symbol("u", real=True), sp.Symbol("v", real=True)
        eps = sp.Float(spec.eps)
        s1 = spec.sym["S1"].subs({usym: ju, vsym: eps * jp}, simultaneous=True)
        s2 = spec.sym["S2"].subs({usym: ju, vsym: eps * jp}, simultaneous=True)
        S = s1 + eps**2 * jq * s2
        fdiff = -ju * s1
        fdisp_sym = -(eps**2) * ju * jq * s2
        return _lamb([Dx(S), Dx(fdiff + fdisp_sym)], [ju, jp, jq, jr])

    out = _memo_build(spec, build)([V[:, 0], V1[:, 0], V2[:, 0], V3[:, 0]])
    sx, fcx_sym = out[:, 0], out[:, 1]
    # quadrature-backed pieces: the averaged coefficient and its derivatives
    U, P, Q = V[:, 0], V1[:, 0], V2[:, 0]
    e = spec.eps
    du = e * P
    sb = spec.sbar2(U, du)
    d1 = spec.d1_sbar2(U, du)
    d2 = spec.d2_sbar2(U, du)
    fcx_quad = e**2 * (2.0 * P * Q * sb + P**2 * (d1 * P + d2 * e * Q))
    dvals = -P * spec.S1(U, du) + e**2 * P**3 * d1
    return sx[:, None], fcx_sym + fcx_quad, dvals


def _exact_terms(spec, V, V1, V2, V3):
    if isinstance(spec, LinearConstant):
        return _exact_terms_linear(spec, V, V1, V2, V3)
    if isinstance(spec, NonlinearMatrix):
        fn = _exact_terms_nonlinear
    elif isinstance(spec, ScalarFactored):
        fn = _exact_terms_factored
    elif isinstance(spec, ScalarGeneral):
        fn = _exact_terms_general
    else:
        raise TypeError(type(spec).__name__)
    return fn(spec, V, V1, V2, V3)


def identity_residual(spec, field, n=192, stencil_order=2, analytic=True,
                      system=None) -> IdentityResult:
    """Residual of v . dS/dx + d(Fdiff + Fdisp)/dx - D on the field.

    The finite-difference mode differentiates the implementation's pointwise
    outputs and reports residuals on grids of n and 2n points together with
    the observed convergence order.  The analytic mode assembles the exact
    x-derivatives (closed form or symbolically from the spec's expressions)
    and must vanish to near machine precision when the formulas are
    consistent.  ``system`` is only consulted for scalar variants, which
    assume a scalar law with quadratic entropy.
    """
    if isinstance(spec, (ScalarFactored, ScalarGeneral)) and system is not None:
        if system.N != 1 or not system.has_quadratic_entropy:
            raise ValueError("scalar variants verify the quadratic-entropy "
                             "balance of a scalar law")
    if field.N != spec.N:
        raise ValueError(f"field has {field.N} components, spec needs {spec.N}")
    r_coarse = _fd_residual(spec, field, n, stencil_order)
    r_fine = _fd_residual(spec, field, 2 * n, stencil_order)
    if r_fine > 0 and r_coarse > 0:
        order = math.log2(r_coarse / r_fine)
    else:
        order = math.inf
    analytic_residual = None
    worst_x = None
    if analytic:
        xs = field.grid(n)
        V, V1, V2, V3 = (field.deriv(xs, k) for k in range(4))
        sx, fcx, dvals = _exact_terms(spec, V, V1, V2, V3)
        resid = np.einsum("ij,ij->i", V, sx) + fcx - dvals
        iw = int(np.argmax(np.abs(resid)))
        analytic_residual = float(np.abs(resid[iw]))
        worst_x = float(xs[iw])
    return IdentityResult(analytic_residual, r_coarse, r_fine, order, n,
                          worst_x)


# ---------------------------------------------------------------------------
# eps-limit studies


@dataclass
class FamilyMember:
    """One entry of an eps-indexed family of fields or solution snapshots."""

    eps: float
    xs: np.ndarray
    w: np.ndarray                       # (n, N)
    wx: Optional[np.ndarray] = None     # analytic derivatives, else stencil
    wxx: Optional[np.ndarray] = None

    def jets(self, stencil_order=2):
        dx = self.xs[1] - self.xs[0]
        n, N = self.w.shape

        def d(a, k):
            from . import kernels
            return kernels.diff(np.ascontiguousarray(a), dx, k, stencil_order,
                                False)
        wx = self.wx if self.wx is not None else np.stack(
            [d(self.w[:, j], 1) for j in range(N)], axis=-1)
        wxx = self.wxx if self.wxx is not None else np.stack(
            [d(self.w[:, j], 2) for j in range(N)], axis=-1)
        return wx, PointJet(self.w, self.eps * wx, self.eps**2 * wxx)


@dataclass
class MeasureEstimate:
    eps_sequence: list
    values: list                 # with the leading eps factor
    values_unweighted: list      # the same integrals without that factor
    extrapolated: float
    min_margin: float
    theta_desc: str = ""

    def to_dict(self):
        return {
            "eps_sequence": self.eps_sequence,
            "values": self.values,
            "values_unweighted": self.values_unweighted,
            "extrapolated": self.extrapolated,
            "min_margin": self.min_margin,
            "theta": self.theta_desc,
        }


def _check_family(family, check_resolution):
    eps_seq = [m.eps for m in family]
    if len(family) < 3:
        raise ValueError("need at least 3 eps values")
    if not all(a > b for a, b in zip(eps_seq, eps_seq[1:])):
        raise ValueError("eps sequence must be strictly decreasing")
    if check_resolution:
        for m in family:
            dx = m.xs[1] - m.xs[0]
            if dx > m.eps / 8.0 * (1.0 + 1e-12):
                raise ResolutionViolation(
                    f"dx = {dx:.4g} exceeds eps/8 = {m.eps / 8:.4g}")
    return eps_seq


def measure_estimate(spec_factory, family, theta, stencil_order=2,
                     check_resolution=True) -> MeasureEstimate:
    """Trapezoid estimates of  int eps * w_x . S[w] * theta dx  per eps.

    ``spec_factory(eps)`` builds the augmentation at each scale; ``theta``
    is a non-negative test function of x.  ``extrapolated`` is the
    first-order Richardson value from the last two entries.
    """
    eps_seq = _check_family(family, check_resolution)
    values, raw = [], []
    for m in family:
        tvals = np.asarray(theta(m.xs), dtype=float)
        if np.any(tvals < 0):
            raise ValueError("theta must be non-negative")
        spec = spec_factory(m.eps)
        wx, jet = m.jets(stencil_order)
        svals = spec.eval_S(jet)
        integrand = np.einsum("ij,ij->i", m.eps * wx, svals) * tvals
        dx = m.xs[1] - m.xs[0]
        values.append(float(np.trapezoid(integrand, dx=dx)))
        raw.append(values[-1] / m.eps)
    ratio = eps_seq[-2] / eps_seq[-1]
    extrapolated = (ratio * values[-1] - values[-2]) / (ratio - 1.0)
    return MeasureEstimate(
        eps_sequence=list(eps_seq), values=values, values_unweighted=raw,
        extrapolated=float(extrapolated), min_margin=float(min(values)),
        theta_desc=getattr(theta, "expr", theta).__str__())


@dataclass
class FluxGapTable:
    eps_sequence: list
    flux_gaps: list
    entropy_flux_gaps: list
    flux_exponent: float
    entropy_flux_exponent: float

    def to_dict(self):
        return {
            "eps_sequence": self.eps_sequence,
            "flux_gaps": self.flux_gaps,
            "entropy_flux_gaps": self.entropy_flux_gaps,
            "flux_exponent": self.flux_exponent,
            "entropy_flux_exponent": self.entropy_flux_exponent,
        }


def _fit_exponent(eps_seq, gaps):
    gaps = np.asarray(gaps)
    if np.all(gaps < 1e-300):
        return math.inf
    mask = gaps > 1e-300
    if np.count_nonzero(mask) < 2:
        return math.inf
    slope = np.polynomial.polynomial.polyfit(
        np.log(np.asarray(eps_seq)[mask]), np.log(gaps[mask]), 1)[1]
    return float(slope)


def flux_gap_decay(spec_factory, family, theta, stencil_order=2,
                   check_resolution=True) -> FluxGapTable:
    """Decay of |int (f_tot - f) theta dx| and the entropy-flux analogue.

    The total-flux correction equals -S[.], so the integrand only needs the
    augmentation bracket and the entropy-flux corrections.
    """
    eps_seq = _check_family(family, check_resolution)
    fgaps, Fgaps = [], []
    for m in family:
        tvals = np.asarray(theta(m.xs), dtype=float)
        spec = spec_factory(m.eps)
        _, jet = m.jets(stencil_order)
        svals = spec.eval_S(jet)
        fdiff, fdisp = spec.flux_corrections(jet)
        dx = m.xs[1] - m.xs[0]
        comps = [abs(float(np.trapezoid(svals[:, a] * tvals, dx=dx)))
                 for a in range(svals.shape[1])]
        fgaps.append(max(comps))
        Fgaps.append(abs(float(np.trapezoid((fdiff + fdisp) * tvals, dx=dx))))
    return FluxGapTable(
        eps_sequence=list(eps_seq), flux_gaps=fgaps, entropy_flux_gaps=Fgaps,
        flux_exponent=_fit_exponent(eps_seq, fgaps),
        entropy_flux_exponent=_fit_exponent(eps_seq, Fgaps))


# ---------------------------------------------------------------------------
# shock extraction and classification


@dataclass
class ShockReport:
    position: float
    left_state: np.ndarray
    right_state: np.ndarray
    measured_speed: float
    rh_speed: float
    entropy_jump: float
    classification: str
    rh_residual: float
    oleinik_slack: Optional[float] = None
    n_plateaus: int = 0
    n_jumps: int = 0

    def to_dict(self):
        return {
            "position": self.position,
            "left_state": np.asarray(self.left_state).tolist(),
            "right_state": np.asarray(self.right_state).tolist(),
            "measured_speed": self.measured_speed,
            "rh_speed": self.rh_speed,
            "entropy_jump": self.entropy_jump,
            "classification": self.classification,
            "rh_residual": self.rh_residual,
            "oleinik_slack": self.oleinik_slack,
            "n_plateaus": self.n_plateaus,
            "n_jumps": self.n_jumps,
        }


def _plateau_runs(xs, u, tol, min_cells):
    dx = xs[1] - xs[0]
    slope = np.gradient(u, dx, axis=0)
    flat = np.max(np.abs(slope), axis=1) < tol
    runs = []
    start = None
    for i, ok in enumerate(list(flat) + [False]):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            if i - start >= min_cells:
                runs.append((start, i))
            start = None
    return runs


def _level_crossing(xs, vals, level, sign_left, lo, hi):
    """x where vals crosses level inside [lo, hi], scanning left to right."""
    window = (xs >= lo) & (xs <= hi)
    idx = np.nonzero(window)[0]
    if idx.size < 2:
        return None
    crossings = []
    v = vals[idx] - level
    for k in range(idx.size - 1):
        if v[k] == 0.0:
            crossings.append(xs[idx[k]])
        elif v[k] * v[k + 1] < 0.0:
            frac = v[k] / (v[k] - v[k + 1])
            crossings.append(xs[idx[k]] + frac * (xs[idx[k] + 1] - xs[idx[k]]))
    if not crossings:
        return None
    return float(np.median(crossings))


def oleinik_slack(flux_fn, u_left, u_right, speed, n_samples=400):
    """min over v between the states of (f(v) - f(u_l))/(v - u_l) - s.

    Non-negative slack means the chord condition (classical admissibility)
    holds; strictly negative slack marks an undercompressive jump.
    """
    vs = np.linspace(u_left, u_right, n_samples + 2)[1:-1]
    fv = flux_fn(vs[:, None])[:, 0]
    fl = flux_fn(np.array([[u_left]]))[0, 0]
    chords = (fv - fl) / (vs - u_left)
    return float(np.min(chords - speed))


def classify_shock(xs, snapshots, system, plateau_frac=1e-3, chord_tol=1e-2,
                   min_jump_frac=0.02, rh_tol=0.02,
                   entropy_tol=1e-8) -> ShockReport:
    """Plateau/jump extraction and classification from two snapshots.

    ``snapshots`` is a list of (t, u) pairs; the last two are used for the
    speed measurement (displacement of the half-value level set).  Plateaus
    are runs of cells with |u_x| below ``plateau_frac`` times the data
    range; jumps connect consecutive plateaus with amplitude at least
    ``min_jump_frac`` times the range.
    """
    if len(snapshots) < 2:
        raise ValueError("need two snapshots to measure a speed")
    (t1, u1), (t2, u2) = snapshots[-2], snapshots[-1]
    u1 = np.atleast_2d(u1)
    u2 = np.atleast_2d(u2)
    urange = float(np.max(u2) - np.min(u2))
    if urange == 0.0:
        raise NoJumpFound("constant state")
    n = xs.shape[0]
    tol = plateau_frac * urange
    runs = _plateau_runs(xs, u2, tol, min_cells=max(3, n // 128))
    if len(runs) < 2:
        raise NoJumpFound(f"found {len(runs)} plateaus, need at least 2")
    values = [np.mean(u2[a:b], axis=0) for a, b in runs]
    jumps = []
    for k in range(len(runs) - 1):
        dv = values[k + 1] - values[k]
        if np.max(np.abs(dv)) >= min_jump_frac * urange:
            jumps.append(k)
    if not jumps:
        raise NoJumpFound("no plateau-to-plateau jump above the amplitude floor")

    best = None
    for k in jumps:
        left, right = values[k], values[k + 1]
        comp = int(np.argmax(np.abs(right - left)))
        level = 0.5 * (left[comp] + right[comp])
        lo = xs[runs[k][1] - 1]
        hi = xs[runs[k + 1][0]]
        x2 = _level_crossing(xs, u2[:, comp], level, left[comp], lo, hi)
        # the front has moved since t1: widen the search window accordingly
        pad = (hi - lo) + 2.0 * abs(t2 - t1) * max(
            1.0, float(np.max(np.abs(system.flux_jacobian(u2)))))
        x1 = _level_crossing(xs, u1[:, comp], level, left[comp], lo - pad,
                             hi + pad)
        if x1 is None or x2 is None:
            continue
        speed = (x2 - x1) / (t2 - t1)
        if best is None or abs(speed) > abs(best[0]):
            best = (speed, k, left, right, x2)
    if best is None:
        raise NoJumpFound("could not track a level crossing between snapshots")
    speed, k, left, right, position = best

    du = right - left
    df = system.flux(right[None, :])[0] - system.flux(left[None, :])[0]
    if system.N == 1:
        rh_speed = float(df[0] / du[0])
    else:
        rh_speed = float(np.dot(df, du) / np.dot(du, du))
    dU = float(system.entropy(right[None, :])[0] - system.entropy(left[None, :])[0])
    dF = float(system.entropy_flux(right[None, :])[0]
               - system.entropy_flux(left[None, :])[0])
    entropy_jump = -rh_speed * dU + dF
    fscale = max(float(np.max(np.abs(df))), 1e-12)
    rh_residual = float(np.max(np.abs(speed * du - df)))
    rh_ok = rh_residual <= rh_tol * fscale

    slack = None
    if system.N == 1:
        slack = oleinik_slack(system.flux, float(left[0]), float(right[0]),
                              rh_speed)
        if rh_ok and slack >= -chord_tol:
            classification = "Classical"
        elif rh_ok and entropy_jump <= entropy_tol:
            classification = "Nonclassical"
        else:
            classification = "Unresolved"
    else:
        classification = "Unresolved"
    return ShockReport(
        position=float(position), left_state=left, right_state=right,
        measured_speed=float(speed), rh_speed=rh_speed,
        entropy_jump=entropy_jump, classification=classification,
        rh_residual=rh_residual, oleinik_slack=slack,
        n_plateaus=len(runs), n_jumps=len(jumps))
