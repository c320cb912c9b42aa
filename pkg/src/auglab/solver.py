"""Method-of-lines solver for 1-D augmented conservation laws.

Space: centered differences for the augmentation bracket and its jets, a
local Lax-Friedrichs flux for the hyperbolic part (its dx-scaled numerical
viscosity vanishes faster than the physical eps-terms once dx <= eps/8).
Time: classical RK4 with a step obeying advective, diffusive and dispersive
restrictions.  Runs are sequential and deterministic; concurrency across
independent runs is safe because all inputs are immutable.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import kernels
from .augmentation import (LinearConstant, NonlinearMatrix, PointJet,
                           ScalarFactored, ScalarGeneral, VariantMismatch,
                           _fd_in_second)
from .backend import USE_NUMBA
from .systems import P

RESOLUTION_FACTOR = 8.0  # resolved small-scale runs need dx <= eps/8


class StateBlowup(RuntimeError):
    """Solution left the inflated domain box (or became non-finite).

    Carries the diagnostics recorded so far in ``.diagnostics`` (and the
    last state in ``.state``) so partial results can be preserved.
    """

    def __init__(self, message, state=None, diagnostics=None):
        super().__init__(message)
        self.state = state
        self.diagnostics = diagnostics


class NonFiniteDiagnostic(RuntimeError):
    pass


@dataclass(frozen=True)
class Grid1D:
    x_lo: float
    x_hi: float
    n_cells: int
    boundary: str = "periodic"

    def __post_init__(self):
        if self.n_cells < 16:
            raise ValueError("need at least 16 cells")
        if not self.x_hi > self.x_lo:
            raise ValueError("empty interval")
        if self.boundary not in ("periodic", "outflow"):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def dx(self):
        return (self.x_hi - self.x_lo) / self.n_cells

    @property
    def periodic(self):
        return self.boundary == "periodic"

    def centers(self):
        return self.x_lo + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass(frozen=True)
class SolverConfig:
    t_end: float
    cfl: float = 0.9
    rk_order: int = 4
    stencil_order: int = 2
    record_every: int = 10
    snapshot_times: tuple = ()
    diff_safety: float = 2.0
    disp_safety: float = 4.0
    blowup_factor: float = 1.5

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.rk_order != 4:
            raise ValueError("only classical RK4 is implemented")
        if self.stencil_order not in (2, 4):
            raise ValueError("stencil_order must be 2 or 4")
        if self.record_every < 1:
            raise ValueError("record_every must be positive")


@dataclass
class State:
    u: np.ndarray  # (n_cells, N)
    t: float


@dataclass
class RunDiagnostics:
    t: list = field(default_factory=list)
    mass: list = field(default_factory=list)            # (N,) per record
    entropy: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)
    flux_gap: list = field(default_factory=list)        # sup |f_tot - f|
    entropy_flux_gap: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)       # (t, u.copy())
    boundary_contaminated: bool = False
    notes: list = field(default_factory=list)

    def arrays(self):
        return {
            "t": np.asarray(self.t),
            "mass": np.asarray(self.mass),
            "entropy": np.asarray(self.entropy),
            "dissipation": np.asarray(self.dissipation),
            "flux_gap": np.asarray(self.flux_gap),
            "entropy_flux_gap": np.asarray(self.entropy_flux_gap),
        }


def _is_scalar_variant(spec):
    return isinstance(spec, (ScalarFactored, ScalarGeneral))


def _max_abs_eig(jac):
    """Largest |eigenvalue| of a batch of small Jacobians, (n, N, N) -> (n,)."""
    N = jac.shape[-1]
    if N == 1:
        return np.abs(jac[..., 0, 0])
    if N == 2:
        tr = jac[..., 0, 0] + jac[..., 1, 1]
        det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
        disc = tr * tr - 4.0 * det
        real = disc >= 0.0
        out = np.empty(tr.shape)
        sq = np.sqrt(np.where(real, disc, 0.0))
        out[real] = np.maximum(np.abs(tr + sq), np.abs(tr - sq))[real] / 2.0
        out[~real] = np.sqrt(np.abs(det[~real]))  # complex pair: |eig|^2 = det
        return out
    return np.max(np.abs(np.linalg.eigvals(jac)), axis=-1)


def _entropy_variable_field(system, spec, u):
    """Variable the jets are built in: entropy vars for matrix variants,
    the conservative scalar otherwise."""
    if _is_scalar_variant(spec):
        return u
    return system.entropy_gradient(u)


def build_jet(spec, w, dx, periodic, stencil_order):
    """Rescaled jet of the (n, N) field ``w`` by centered differences."""
    eps = spec.eps
    n, N = w.shape
    dv = np.empty_like(w)
    ddv = np.empty_like(w)
    for a in range(N):
        col = np.ascontiguousarray(w[:, a])
        dv[:, a] = eps * kernels.diff(col, dx, 1, stencil_order, periodic)
        ddv[:, a] = eps * eps * kernels.diff(col, dx, 2, stencil_order, periodic)
    return PointJet(w, dv, ddv)


def _generic_rhs(system, spec, grid, stencil_order):
    dx, periodic = grid.dx, grid.periodic

    def rhs(u):
        f = system.flux(u)
        alpha = _max_abs_eig(system.flux_jacobian(u))
        out = np.empty_like(u)
        for a in range(system.N):
            out[:, a] = -kernels.llf_divergence(
                np.ascontiguousarray(f[:, a]), np.ascontiguousarray(u[:, a]),
                alpha, dx, periodic, stencil_order)
        if spec is not None:
            w = _entropy_variable_field(system, spec, u)
            jet = build_jet(spec, w, dx, periodic, stencil_order)
            svals = spec.eval_S(jet)
            for a in range(system.N):
                out[:, a] += kernels.diff(
                    np.ascontiguousarray(svals[:, a]), dx, 1, stencil_order,
                    periodic)
        return out

    return rhs


def _fused_applicable(system, spec):
    return (
        USE_NUMBA
        and system.N == 1
        and system.flux_poly is not None
        and system.entropy_poly is not None
        and (spec is None or isinstance(spec, LinearConstant))
    )


def _fused_rhs(system, spec, grid, stencil_order):
    dx, periodic = grid.dx, grid.periodic
    fpoly = np.ascontiguousarray(system.flux_poly)
    dfpoly = np.ascontiguousarray(P.polyder(system.flux_poly))
    vpoly = np.ascontiguousarray(P.polyder(system.entropy_poly))
    if spec is None:
        B = K = 0.0
        eps = 1.0
    else:
        B, K, eps = float(spec.B[0, 0]), float(spec.K[0, 0]), spec.eps

    def rhs(u):
        col = np.ascontiguousarray(u[:, 0])
        return kernels.rhs_scalar_linear(
            col, dx, eps, B, K, fpoly, dfpoly, vpoly, periodic, stencil_order
        )[:, None]

    return rhs


def make_rhs(system, spec, grid, stencil_order=2) -> Callable:
    """Spatial right-hand side -d/dx f(u) + d/dx S[.] as a closure over u."""
    if spec is not None:
        if spec.N != system.N:
            raise VariantMismatch(
                f"augmentation has N={spec.N}, system has N={system.N}")
        if _is_scalar_variant(spec) and not system.has_quadratic_entropy:
            raise VariantMismatch(
                "scalar augmentation variants assume the quadratic entropy "
                "u^2/2; attach them to a model with that entropy")
    if _fused_applicable(system, spec):
        return _fused_rhs(system, spec, grid, stencil_order)
    return _generic_rhs(system, spec, grid, stencil_order)


def spatial_rhs(system, spec, grid, u, stencil_order=2):
    """One-shot evaluation of the semi-discrete right-hand side."""
    u = np.ascontiguousarray(np.atleast_2d(u), dtype=float)
    return make_rhs(system, spec, grid, stencil_order)(u)


def _augmentation_scales(system, spec, u, dx, periodic, stencil_order):
    """(beta, kappa): diffusion and dispersion magnitudes for the dt bound."""
    if spec is None:
        return 0.0, 0.0
    if isinstance(spec, LinearConstant):
        return (float(np.linalg.norm(spec.B, 2)),
                float(np.linalg.norm(spec.K, 2)))
    if isinstance(spec, NonlinearMatrix):
        v = system.entropy_gradient(u)
        bnorm = float(np.max(np.linalg.norm(spec.Bfun(v), axis=(-2, -1))))
        gnorm = float(np.max(np.linalg.norm(spec.grad_h(v), axis=(-2, -1))))
        return bnorm, float(np.linalg.norm(spec.H, 2)) * gnorm**2
    uu = u[:, 0]
    if isinstance(spec, ScalarFactored):
        return (float(np.max(np.abs(spec.Bfun(uu)))),
                float(np.max(np.abs(spec.k1(uu) * spec.k2(uu)))))
    # scalar-general: effective diffusion is dS1/dv along the current jet
    du = spec.eps * kernels.diff(np.ascontiguousarray(uu), dx, 1,
                                 stencil_order, periodic)
    if spec.d2_S1 is not None:
        beta = float(np.max(np.abs(spec.d2_S1(uu, du))))
    else:
        beta = float(np.max(np.abs(_fd_in_second(spec.S1, uu, du))))
    return beta, float(np.max(np.abs(spec.S2(uu, du))))


def stable_dt(system, spec, grid, u, cfl, diff_safety=2.0, disp_safety=4.0,
              stencil_order=2):
    """cfl * min(dx/lambda, dx^2/(2 eps beta), dx^3/(4 eps^2 kappa)).

    Suprema are taken over the current grid states; absent terms give inf.
    """
    u = np.atleast_2d(u)
    dx = grid.dx
    lam = float(np.max(_max_abs_eig(system.flux_jacobian(u))))
    beta, kappa = _augmentation_scales(system, spec, u, dx, grid.periodic,
                                       stencil_order)
    eps = spec.eps if spec is not None else 0.0
    dt = math.inf
    if lam > 0.0:
        dt = min(dt, dx / lam)
    if eps * beta > 0.0:
        dt = min(dt, dx**2 / (diff_safety * eps * beta))
    if eps**2 * kappa > 0.0:
        dt = min(dt, dx**3 / (disp_safety * eps**2 * kappa))
    return cfl * dt


def _integral(vals, dx, periodic):
    if periodic:
        return dx * np.sum(vals, axis=0)
    return np.trapezoid(vals, dx=dx, axis=0)


def _record(diag, system, spec, grid, config, u, t):
    dx, periodic = grid.dx, grid.periodic
    diag.t.append(t)
    diag.mass.append(_integral(u, dx, periodic))
    diag.entropy.append(float(_integral(system.entropy(u), dx, periodic)))
    if spec is None:
        diag.dissipation.append(0.0)
        diag.flux_gap.append(0.0)
        diag.entropy_flux_gap.append(0.0)
    else:
        w = _entropy_variable_field(system, spec, u)
        jet = build_jet(spec, w, dx, periodic, config.stencil_order)
        diag.dissipation.append(float(_integral(spec.dissipation(jet), dx,
                                                periodic)))
        svals = spec.eval_S(jet)
        fdiff, fdisp = spec.flux_corrections(jet)
        diag.flux_gap.append(float(np.max(np.abs(svals))))
        diag.entropy_flux_gap.append(float(np.max(np.abs(fdiff + fdisp))))
    last = [diag.mass[-1], diag.entropy[-1], diag.dissipation[-1],
            diag.flux_gap[-1], diag.entropy_flux_gap[-1]]
    if not all(np.all(np.isfinite(x)) for x in last):
        raise NonFiniteDiagnostic(f"non-finite diagnostic at t = {t}")


def run(system, spec, grid, config, initial) -> tuple:
    """Advance ``initial`` (a callable of x returning states) to t_end.

    Returns (final State, RunDiagnostics).  Snapshots of the solution are
    stored at ``config.snapshot_times`` and at t_end.
    """
    x = grid.centers()
    u0 = np.asarray(initial(x), dtype=float)
    if u0.ndim == 1:
        u0 = u0[:, None]
    if u0.shape != (grid.n_cells, system.N):
        raise ValueError(f"initial data has shape {u0.shape}, expected "
                         f"{(grid.n_cells, system.N)}")
    box = system.domain_box
    if np.any(u0 < box[:, 0]) or np.any(u0 > box[:, 1]):
        raise ValueError("initial data leaves the model's domain box")
    center = 0.5 * (box[:, 0] + box[:, 1])
    half = 0.5 * (box[:, 1] - box[:, 0]) * config.blowup_factor
    lo, hi = center - half, center + half

    rhs = make_rhs(system, spec, grid, config.stencil_order)
    targets = sorted(set(round(ts, 15) for ts in config.snapshot_times
                         if 0.0 < ts < config.t_end))
    targets.append(config.t_end)

    diag = RunDiagnostics()
    u = u0.copy()
    t = 0.0
    _record(diag, system, spec, grid, config, u, t)
    step = 0
    next_target = 0
    while t < config.t_end - 1e-14 * max(1.0, config.t_end):
        dt = stable_dt(system, spec, grid, u, config.cfl, config.diff_safety,
                       config.disp_safety, config.stencil_order)
        dt = min(dt, targets[next_target] - t)
        if not dt > 1e-15 * max(1.0, config.t_end):
            raise RuntimeError(f"time step collapsed at t = {t}")
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * dt * k1)
        k3 = rhs(u + 0.5 * dt * k2)
        k4 = rhs(u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
        step += 1
        if not np.all(np.isfinite(u)) or np.any(u < lo) or np.any(u > hi):
            raise StateBlowup(
                f"state left the inflated domain box at t = {t:.6g} "
                f"(range [{np.nanmin(u):.3g}, {np.nanmax(u):.3g}])",
                state=State(u=u, t=t), diagnostics=diag)
        if abs(t - targets[next_target]) <= 1e-13 * max(1.0, config.t_end):
            diag.snapshots.append((t, u.copy()))
            next_target = min(next_target + 1, len(targets) - 1)
        if step % config.record_every == 0:
            _record(diag, system, spec, grid, config, u, t)
    if diag.t[-1] != t:
        _record(diag, system, spec, grid, config, u, t)
    return State(u=u, t=t), diag


def riemann_initial(u_left, u_right, x_mid, width):
    """Smoothed jump: tanh profile of the given width at x_mid."""
    u_left = np.atleast_1d(np.asarray(u_left, dtype=float))
    u_right = np.atleast_1d(np.asarray(u_right, dtype=float))

    def initial(x):
        ramp = 0.5 * (1.0 + np.tanh((x - x_mid) / width))
        return u_left[None, :] + (u_right - u_left)[None, :] * ramp[:, None]

    return initial


def riemann_run(system, spec, grid, config, u_left, u_right) -> tuple:
    """Riemann experiment: smoothed jump at the domain midpoint, outflow.

    Adds a boundary-contamination guard: if the final state differs from the
    constant left/right data on the outer 10% of cells by more than 1e-8,
    the diagnostics are flagged.
    """
    if grid.periodic:
        raise ValueError("riemann_run needs outflow boundaries")
    x_mid = 0.5 * (grid.x_lo + grid.x_hi)
    if not config.snapshot_times:
        config = replace(config, snapshot_times=(config.t_end / 2.0,))
    initial = riemann_initial(u_left, u_right, x_mid, 3.0 * grid.dx)
    state, diag = run(system, spec, grid, config, initial)
    edge = max(1, grid.n_cells // 10)
    left_dev = float(np.max(np.abs(state.u[:edge] - np.atleast_1d(u_left))))
    right_dev = float(np.max(np.abs(state.u[-edge:] - np.atleast_1d(u_right))))
    if max(left_dev, right_dev) >= 1e-8:
        diag.boundary_contaminated = True
        diag.notes.append(
            f"boundary contamination: deviations {left_dev:.3e} (left), "
            f"{right_dev:.3e} (right)")
    return state, diag


# ---------------------------------------------------------------------------
# artifact output


def _fmt(x):
    return f"{x:.17g}"


def write_fields_csv(path, grid, u, system):
    """Snapshot CSV: x, u_1..u_N, v_1..v_N with 17 significant digits."""
    u = np.atleast_2d(u)
    v = system.entropy_gradient(u)
    N = u.shape[1]
    header = ["x"] + [f"u_{a+1}" for a in range(N)] + \
        [f"v_{a+1}" for a in range(N)]
    lines = [",".join(header)]
    for xi, ui, vi in zip(grid.centers(), u, v):
        lines.append(",".join([_fmt(xi)] + [_fmt(c) for c in ui]
                              + [_fmt(c) for c in vi]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_diagnostics_csv(path, diag, N):
    mass_cols = ["mass"] if N == 1 else [f"mass_{a+1}" for a in range(N)]
    header = ["t"] + mass_cols + ["entropy", "dissipation", "flux_gap",
                                  "entropy_flux_gap"]
    lines = [",".join(header)]
    for i, t in enumerate(diag.t):
        m = np.atleast_1d(diag.mass[i])
        row = [_fmt(t)] + [_fmt(c) for c in m] + [
            _fmt(diag.entropy[i]), _fmt(diag.dissipation[i]),
            _fmt(diag.flux_gap[i]), _fmt(diag.entropy_flux_gap[i])]
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
