"""Augmentation terms: diffusive-dispersive corrections to a conservation law.

Four model classes are supported; each evaluates the bracket S whose spatial
derivative is the PDE right-hand side, the pointwise entropy dissipation D,
and the diffusive/dispersive entropy-flux corrections (Fdiff, Fdisp) that
close the balance

    v . d/dx S  +  d/dx (Fdiff + Fdisp)  =  D .

Jets store the rescaled derivatives (v, eps*v_x, eps^2*v_xx), which makes
every evaluation formula free of eps except the dissipation.  Matrix
variants work in entropy variables; the scalar variants work in the
conservative variable of a scalar law with quadratic entropy.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import sympy as sp

from .expressions import ExprFunc

__all__ = [
    "VariantMismatch", "PointJet",
    "LinearConstant", "NonlinearMatrix", "ScalarFactored", "ScalarGeneral",
    "eval_S", "dissipation", "entropy_flux_corrections", "sbar2",
]


class VariantMismatch(ValueError):
    """Jet shape or variable convention inconsistent with the variant."""


@dataclass(frozen=True)
class PointJet:
    """State and rescaled derivatives at one or many points.

    ``v`` is ``(..., N)``; ``dv = eps * v_x`` and ``ddv = eps^2 * v_xx``
    have the same shape.  For scalar variants ``v`` holds the conservative
    variable u.
    """

    v: np.ndarray
    dv: np.ndarray
    ddv: np.ndarray

    @classmethod
    def of(cls, v, dv, ddv):
        v, dv, ddv = (np.atleast_1d(np.asarray(a, dtype=float))
                      for a in (v, dv, ddv))
        return cls(v, dv, ddv)

    @classmethod
    def scalar(cls, u, du, ddu):
        """Jet of a scalar field: adds the trailing component axis."""
        u, du, ddu = (np.asarray(a, dtype=float)[..., None]
                      for a in (u, du, ddu))
        return cls(u, du, ddu)

    @property
    def n_components(self):
        return self.v.shape[-1]


def _check(spec, jet):
    if jet.n_components != spec.N:
        raise VariantMismatch(
            f"{type(spec).__name__} has N={spec.N} but jet has "
            f"{jet.n_components} components"
        )


# ---------------------------------------------------------------------------
# quadrature for the averaged dispersion coefficient


def _gl_nodes_01(q):
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def sbar2_of(S2, u, v, quad_n):
    """Tensor Gauss-Legendre value of the double integral

    Sbar2(u, v) = int_0^1 int_0^1 S2(u, v*(1 + m*(s-1))) * (1-s) ds dm.
    """
    if quad_n < 2:
        raise ValueError("quad_n must be at least 2")
    s, ws = _gl_nodes_01(quad_n)
    m, wm = _gl_nodes_01(quad_n)
    factor = (1.0 + np.outer(m, s - 1.0)).ravel()        # (q*q,)
    weight = (np.outer(wm, ws) * (1.0 - s)[None, :]).ravel()
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    vals = S2(u[..., None], v[..., None] * factor)
    return vals @ weight


def _dbar2_arg1(dS2_du, u, v, quad_n):
    """Same rule applied to dS2/du: differentiation under the integral."""
    s, ws = _gl_nodes_01(quad_n)
    m, wm = _gl_nodes_01(quad_n)
    factor = (1.0 + np.outer(m, s - 1.0)).ravel()
    weight = (np.outer(wm, ws) * (1.0 - s)[None, :]).ravel()
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    vals = dS2_du(u[..., None], v[..., None] * factor)
    return vals @ weight


def _dbar2_arg2(dS2_dv, u, v, quad_n):
    """d/dv of Sbar2: the chain rule pulls one factor into the integrand."""
    s, ws = _gl_nodes_01(quad_n)
    m, wm = _gl_nodes_01(quad_n)
    factor = (1.0 + np.outer(m, s - 1.0)).ravel()
    weight = (np.outer(wm, ws) * (1.0 - s)[None, :]).ravel() * factor
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    vals = dS2_dv(u[..., None], v[..., None] * factor)
    return vals @ weight


def _fd_in_first(fn, u, v, step_scale=1e-5):
    h = step_scale * (1.0 + np.abs(u))
    return (-fn(u + 2 * h, v) + 8 * fn(u + h, v)
            - 8 * fn(u - h, v) + fn(u - 2 * h, v)) / (12 * h)


def _fd_in_second(fn, u, v, step_scale=1e-5):
    h = step_scale * (1.0 + np.abs(v))
    return (-fn(u, v + 2 * h) + 8 * fn(u, v + h)
            - 8 * fn(u, v - h) + fn(u, v - 2 * h)) / (12 * h)


# ---------------------------------------------------------------------------
# symbolic-ingredient helpers (used by from_expressions constructors)


def _state_names(N):
    return ("v",) if N == 1 else tuple(f"v{i+1}" for i in range(N))


def _lambdify_entry(expr, symbols):
    fn = sp.lambdify(symbols, expr, modules="numpy")

    def call(*args):
        out = np.asarray(fn(*args), dtype=float)
        return np.broadcast_to(out, np.broadcast(*args).shape).copy()

    return call


def _matrix_callable(entries, symbols):
    fns = [[_lambdify_entry(e, symbols) for e in row] for row in entries]

    def call(v):
        comps = [v[..., j] for j in range(len(symbols))]
        rows = [np.stack([f(*comps) for f in row], axis=-1) for row in fns]
        return np.stack(rows, axis=-2)

    return call


def _vector_callable(entries, symbols):
    fns = [_lambdify_entry(e, symbols) for e in entries]

    def call(v):
        comps = [v[..., j] for j in range(len(symbols))]
        return np.stack([f(*comps) for f in fns], axis=-1)

    return call


def _tensor3_callable(entries, symbols):
    fns = [[[_lambdify_entry(e, symbols) for e in row] for row in block]
           for block in entries]

    def call(v):
        comps = [v[..., j] for j in range(len(symbols))]
        blocks = [np.stack([np.stack([f(*comps) for f in row], axis=-1)
                            for row in block], axis=-2) for block in fns]
        return np.stack(blocks, axis=-3)

    return call


# ---------------------------------------------------------------------------
# variants


@dataclass(frozen=True)
class LinearConstant:
    """Constant-matrix diffusion and dispersion: eps*B*v_xx + eps^2*K*v_xxx."""

    B: np.ndarray
    K: np.ndarray
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "B", np.atleast_2d(np.asarray(self.B, float)))
        object.__setattr__(self, "K", np.atleast_2d(np.asarray(self.K, float)))
        if self.B.shape != self.K.shape or self.B.shape[0] != self.B.shape[1]:
            raise VariantMismatch(
                f"B and K must be square matrices of equal size, got "
                f"{self.B.shape} and {self.K.shape}"
            )
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def N(self):
        return self.B.shape[0]

    def eval_S(self, jet):
        _check(self, jet)
        return np.einsum("ij,...j->...i", self.B, jet.dv) \
            + np.einsum("ij,...j->...i", self.K, jet.ddv)

    def dissipation(self, jet):
        _check(self, jet)
        sym = self.B + self.B.T
        return -0.5 / self.eps * np.einsum("...i,ij,...j->...", jet.dv, sym, jet.dv)

    def flux_corrections(self, jet):
        _check(self, jet)
        v, dv, ddv = jet.v, jet.dv, jet.ddv
        fdiff = -np.einsum("...i,ij,...j->...", v, self.B, dv)
        # (v^T K v)_xx expanded through second-order jet data
        fdisp = 0.5 * (
            np.einsum("...i,ij,...j->...", dv, self.K, dv)
            - np.einsum("...i,ij,...j->...", ddv, self.K, v)
            - np.einsum("...i,ij,...j->...", v, self.K, ddv)
        )
        return fdiff, fdisp


@dataclass(frozen=True)
class NonlinearMatrix:
    """State-dependent diffusion and a structured nonlinear dispersion:

    eps*(B(v) v_x)_x + eps^2*(grad_h(v)^T H h(v)_xx)_x.

    ``Bfun(v) -> (..., N, N)``, ``h(v) -> (..., N)``,
    ``grad_h(v)[..., a, j] = d h_a / d v_j``,
    ``hess_h(v)[..., a, j, k]``; ``H`` is a constant matrix.
    """

    Bfun: Callable
    h: Callable
    grad_h: Callable
    hess_h: Callable
    H: np.ndarray
    eps: float
    N: int
    sym: Optional[dict] = None

    def __post_init__(self):
        object.__setattr__(self, "H", np.atleast_2d(np.asarray(self.H, float)))
        if self.H.shape != (self.N, self.N):
            raise VariantMismatch(f"H must be {self.N}x{self.N}, got {self.H.shape}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @classmethod
    def from_expressions(cls, B_entries, h_entries, H, eps):
        """Build from expression strings in the state symbols.

        ``h_entries`` is a list of N strings, ``B_entries`` an NxN nested
        list; the symbols are ``v`` for N = 1 and ``v1..vN`` otherwise.
        Gradient and Hessian of h are derived analytically.
        """
        N = len(h_entries)
        names = _state_names(N)
        syms = [sp.Symbol(s, real=True) for s in names]
        h_exprs = [ExprFunc(e, names).expr for e in h_entries]
        B_exprs = [[ExprFunc(e, names).expr for e in row] for row in B_entries]
        grad = [[sp.diff(ha, sj) for sj in syms] for ha in h_exprs]
        hess = [[[sp.diff(ha, sj, sk) for sk in syms] for sj in syms]
                for ha in h_exprs]
        return cls(
            Bfun=_matrix_callable(B_exprs, syms),
            h=_vector_callable(h_exprs, syms),
            grad_h=_matrix_callable(grad, syms),
            hess_h=_tensor3_callable(hess, syms),
            H=H, eps=eps, N=N,
            sym={"symbols": syms, "B": sp.Matrix(B_exprs),
                 "h": sp.Matrix(h_exprs)},
        )

    def _dispersive_core(self, jet):
        """grad_h(v)^T H (eps^2 h(v)_xx) from jet data."""
        grad = self.grad_h(jet.v)
        hess = self.hess_h(jet.v)
        h_xx = np.einsum("...aj,...j->...a", grad, jet.ddv) \
            + np.einsum("...ajk,...j,...k->...a", hess, jet.dv, jet.dv)
        return grad, np.einsum("...aj,ab,...b->...j", grad, self.H, h_xx), h_xx

    def eval_S(self, jet):
        _check(self, jet)
        diff = np.einsum("...ij,...j->...i", self.Bfun(jet.v), jet.dv)
        _, disp, _ = self._dispersive_core(jet)
        return diff + disp

    def dissipation(self, jet):
        _check(self, jet)
        B = self.Bfun(jet.v)
        sym = B + np.swapaxes(B, -1, -2)
        return -0.5 / self.eps * np.einsum("...i,...ij,...j->...",
                                           jet.dv, sym, jet.dv)

    def flux_corrections(self, jet):
        _check(self, jet)
        fdiff = -np.einsum("...i,...ij,...j->...", jet.v, self.Bfun(jet.v),
                           jet.dv)
        grad, disp, _ = self._dispersive_core(jet)
        h_x = np.einsum("...aj,...j->...a", grad, jet.dv)   # eps * h(v)_x
        fdisp = -np.einsum("...j,...j->...", jet.v, disp) \
            + 0.5 * np.einsum("...a,ab,...b->...", h_x, self.H, h_x)
        return fdiff, fdisp

    def K_of_v(self, v):
        """K(v) = grad_h(v)^T H grad_h(v); symmetric whenever H is."""
        grad = self.grad_h(np.asarray(v, dtype=float))
        return np.einsum("...aj,ab,...bk->...jk", grad, self.H, grad)

    def L_of_v(self, v):
        """L(v) = (3/2) K(v) + hess_h(v)^T H grad_h(v) (second slots matched)."""
        v = np.asarray(v, dtype=float)
        grad = self.grad_h(v)
        hess = self.hess_h(v)
        return 1.5 * self.K_of_v(v) + np.einsum(
            "...ajk,ab,...bk->...jk", hess, self.H, grad)


@dataclass(frozen=True)
class ScalarFactored:
    """Scalar model eps*(B(u) u_x)_x + eps^2*(k1(u) (k2(u) u_x)_x)_x."""

    Bfun: Callable
    k1: Callable
    k2: Callable
    k2_prime: Callable
    eps: float
    sym: Optional[dict] = None
    N = 1

    @classmethod
    def from_expressions(cls, B, k1, k2, eps):
        exprs = {"B": ExprFunc(B, ("u",)), "k1": ExprFunc(k1, ("u",)),
                 "k2": ExprFunc(k2, ("u",))}
        k2p = exprs["k2"].diff("u")
        return cls(Bfun=exprs["B"], k1=exprs["k1"], k2=exprs["k2"],
                   k2_prime=k2p, eps=eps,
                   sym={name: f.expr for name, f in exprs.items()})

    def eval_S(self, jet):
        _check(self, jet)
        u, du, ddu = jet.v[..., 0], jet.dv[..., 0], jet.ddv[..., 0]
        s = self.Bfun(u) * du + self.k1(u) * (
            self.k2_prime(u) * du**2 + self.k2(u) * ddu)
        return s[..., None]

    @cached_property
    def reduction(self):
        """Equivalent ScalarGeneral: S1 = B(u) w + k1 k2' w^2, S2 = k1 k2."""
        if self.sym is not None:
            u = sp.Symbol("u", real=True)
            w = sp.Symbol("v", real=True)
            s1 = self.sym["B"] * w + self.sym["k1"] * sp.diff(self.sym["k2"], u) * w**2
            s2 = self.sym["k1"] * self.sym["k2"]
            return ScalarGeneral.from_expressions(s1, s2, self.eps)
        return ScalarGeneral(
            S1=lambda u, w: self.Bfun(u) * w + self.k1(u) * self.k2_prime(u) * w**2,
            S2=lambda u, w: self.k1(u) * self.k2(u) + 0.0 * w,
            eps=self.eps,
        )

    def dissipation(self, jet):
        return self.reduction.dissipation(jet)

    def flux_corrections(self, jet):
        return self.reduction.flux_corrections(jet)


@dataclass(frozen=True)
class ScalarGeneral:
    """Scalar model u_t + f(u)_x = (S1(u, eps u_x) + eps^2 u_xx S2(u, eps u_x))_x.

    ``S1``/``S2`` take (u, w) with w the rescaled gradient eps*u_x.
    Analytic partial derivatives may be supplied; otherwise 4th-order
    central differences with step 1e-5*(1+|u|) are used where needed.
    """

    S1: Callable
    S2: Callable
    eps: float
    d1_S2: Optional[Callable] = None
    d2_S2: Optional[Callable] = None
    d2_S1: Optional[Callable] = None
    quad_n: int = 24
    sym: Optional[dict] = None
    N = 1

    @classmethod
    def from_expressions(cls, S1, S2, eps, quad_n=24):
        f1 = ExprFunc(S1, ("u", "v"))
        f2 = ExprFunc(S2, ("u", "v"))
        return cls(S1=f1, S2=f2, eps=eps,
                   d1_S2=f2.diff("u"), d2_S2=f2.diff("v"), d2_S1=f1.diff("v"),
                   quad_n=quad_n, sym={"S1": f1.expr, "S2": f2.expr})

    def eval_S(self, jet):
        _check(self, jet)
        u, du, ddu = jet.v[..., 0], jet.dv[..., 0], jet.ddv[..., 0]
        return (self.S1(u, du) + ddu * self.S2(u, du))[..., None]

    def sbar2(self, u, v, quad_n=None):
        return sbar2_of(self.S2, u, v, quad_n or self.quad_n)

    def d1_sbar2(self, u, v, quad_n=None):
        q = quad_n or self.quad_n
        if self.d1_S2 is not None:
            return _dbar2_arg1(self.d1_S2, u, v, q)
        return _fd_in_first(lambda uu, vv: sbar2_of(self.S2, uu, vv, q), u, v)

    def d2_sbar2(self, u, v, quad_n=None):
        q = quad_n or self.quad_n
        if self.d2_S2 is not None:
            return _dbar2_arg2(self.d2_S2, u, v, q)
        return _fd_in_second(lambda uu, vv: sbar2_of(self.S2, uu, vv, q), u, v)

    def dissipation(self, jet):
        _check(self, jet)
        u, du = jet.v[..., 0], jet.dv[..., 0]
        return -(du * self.S1(u, du) - du**3 * self.d1_sbar2(u, du)) / self.eps

    def flux_corrections(self, jet):
        _check(self, jet)
        u, du, ddu = jet.v[..., 0], jet.dv[..., 0], jet.ddv[..., 0]
        fdiff = -u * self.S1(u, du)
        fdisp = -u * ddu * self.S2(u, du) + du**2 * self.sbar2(u, du)
        return fdiff, fdisp


# ---------------------------------------------------------------------------
# operation-style dispatch


def eval_S(spec, jet):
    """The bracket S[.] whose x-derivative is the PDE right-hand side."""
    return spec.eval_S(jet)


def dissipation(spec, jet):
    """Pointwise entropy dissipation D (unscaled, carries the 1/eps factor)."""
    return spec.dissipation(jet)


def entropy_flux_corrections(spec, jet):
    """(Fdiff, Fdisp) closing the entropy balance; jet data is sufficient."""
    return spec.flux_corrections(jet)


def sbar2(spec, u, v, quad_n=None):
    if not isinstance(spec, ScalarGeneral):
        raise VariantMismatch("sbar2 applies to the scalar-general variant")
    return spec.sbar2(u, v, quad_n)
