"""Certification of the positive-entropy-production conditions.

Each checker evaluates the algebraic sign conditions of its model class on
a sampled box and returns an :class:`AdmissibilityReport` with a verdict and
per-condition witnesses.  Verdicts are sampled certificates over the stated
region, not global proofs.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import qmc

from .augmentation import ScalarFactored, ScalarGeneral

ADMISSIBLE = "Admissible"
INADMISSIBLE = "Inadmissible"
INCONCLUSIVE = "Inconclusive"


class DimensionMismatch(ValueError):
    pass


@dataclass
class Condition:
    name: str
    passed: bool
    witness: Optional[dict] = None
    detail: str = ""

    def to_dict(self):
        return {"name": self.name, "passed": self.passed,
                "witness": self.witness, "detail": self.detail}


@dataclass
class AdmissibilityReport:
    verdict: str
    conditions: list
    sampling: str
    tolerances: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "conditions": [c.to_dict() for c in self.conditions],
            "sampling": self.sampling,
            "tolerances": self.tolerances,
        }

    def failed(self):
        return [c for c in self.conditions if not c.passed]


def _finish(conditions, sampling, tolerances):
    verdict = ADMISSIBLE if all(c.passed for c in conditions) else INADMISSIBLE
    return AdmissibilityReport(verdict, conditions, sampling, tolerances)


def _sym_min_eig(M):
    sym = M + M.T
    eigvals, eigvecs = np.linalg.eigh(sym)
    return sym, float(eigvals[0]), eigvecs[:, 0]


def _psd_condition(name, M, tol, relative=True, state=None):
    sym, lam, vec = _sym_min_eig(M)
    norm = float(np.max(np.abs(np.linalg.eigvalsh(sym)))) if relative else 1.0
    threshold = -tol * max(norm, 0.0) if relative else -tol
    passed = lam >= threshold
    witness = None
    if not passed:
        witness = {
            "min_eigenvalue": lam,
            "direction": vec.tolist(),
            "quadratic_form": float(vec @ sym @ vec),
        }
        if state is not None:
            witness["state"] = np.asarray(state).tolist()
    return Condition(name, passed, witness,
                     detail=f"min eigenvalue of symmetric part = {lam:.6e}")


def _symmetry_condition(name, M, tol):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    scale = float(np.max(np.abs(M)))
    asym = M - M.T
    worst = np.unravel_index(np.argmax(np.abs(asym)), asym.shape)
    err = float(np.abs(asym[worst]))
    passed = err <= tol * scale or scale == 0.0
    witness = None
    if not passed:
        i, j = worst
        witness = {"entry": [int(i) + 1, int(j) + 1],
                   "values": [float(M[i, j]), float(M[j, i])],
                   "difference": float(asym[worst])}
    return Condition(name, passed, witness,
                     detail=f"max |M - M^T| = {err:.6e} (scale {scale:.6e})")


def check_linear(B, K, tol=1e-10):
    """Linear-constant class: B + B^T >= 0 and K symmetric.

    Necessary conditions for positive entropy production; also sufficient
    for this class (it is the h = id case of the nonlinear class), so a
    pass verdict is Admissible.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if B.shape != K.shape or B.shape[0] != B.shape[1]:
        raise DimensionMismatch(
            f"B and K must be square and equal-sized, got {B.shape}, {K.shape}")
    conditions = [
        _psd_condition("diffusion_nonnegative", B, tol, relative=True),
        _symmetry_condition("dispersion_symmetric", K, tol),
    ]
    return _finish(conditions, sampling="exact matrix conditions",
                   tolerances={"tol": tol})


def check_nonlinear(spec, box, n_samples=128, tol=1e-10):
    """Nonlinear-matrix class: H symmetric and B(v) + B(v)^T >= 0 on the box.

    Sufficient conditions; the PSD requirement is sampled at ``n_samples``
    Halton points of ``box`` (an (N, 2) array of state bounds).
    """
    box = np.atleast_2d(np.asarray(box, dtype=float))
    if box.shape != (spec.N, 2):
        raise DimensionMismatch(f"box must be ({spec.N}, 2), got {box.shape}")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    conditions = [_symmetry_condition("H_symmetric", spec.H, tol)]
    sampler = qmc.Halton(d=spec.N, scramble=False)
    pts = qmc.scale(sampler.random(n_samples), box[:, 0], box[:, 1])
    Bvals = spec.Bfun(pts)
    worst = None
    for i in range(n_samples):
        _, lam, _ = _sym_min_eig(Bvals[i])
        if worst is None or lam < worst[0]:
            worst = (lam, i)
    lam, idx = worst
    if lam >= -tol:
        conditions.append(Condition(
            "diffusion_nonnegative", True,
            detail=f"min eigenvalue over samples = {lam:.6e}"))
    else:
        conditions.append(_psd_condition(
            "diffusion_nonnegative", Bvals[idx], tol, relative=False,
            state=pts[idx]))
    return _finish(
        conditions,
        sampling=f"{n_samples} Halton points in box {box.tolist()}",
        tolerances={"tol": tol})


def check_scalar_factored(spec, interval, n=256, tol=1e-10):
    """Factored scalar class: B(u) >= 0 and k1 proportional to k2.

    The constant c is fitted by least squares over samples where k2 is
    nonzero; the residual max |k1 - c k2| is compared against the larger of
    the two function scales, which also enforces k1 = 0 wherever k2 = 0.
    """
    if n < 3:
        raise ValueError("need at least 3 samples")
    u = np.linspace(interval[0], interval[1], n)
    conditions = []

    bvals = np.asarray(spec.Bfun(u), dtype=float)
    imin = int(np.argmin(bvals))
    if bvals[imin] >= -tol:
        conditions.append(Condition(
            "diffusion_nonnegative", True,
            detail=f"min B(u) = {bvals[imin]:.6e}"))
    else:
        conditions.append(Condition(
            "diffusion_nonnegative", False,
            witness={"u": float(u[imin]), "B": float(bvals[imin])},
            detail=f"B({u[imin]:.6g}) = {bvals[imin]:.6e} < 0"))

    k1v = np.asarray(spec.k1(u), dtype=float)
    k2v = np.asarray(spec.k2(u), dtype=float)
    scale = max(float(np.max(np.abs(k1v))), float(np.max(np.abs(k2v))))
    mask = np.abs(k2v) > tol * max(float(np.max(np.abs(k2v))), 1e-300)
    if not np.any(mask):
        if float(np.max(np.abs(k1v))) <= tol * max(scale, 1.0):
            conditions.append(Condition(
                "proportionality", True,
                detail="k1 = k2 = 0: dispersive term absent, c = 0"))
            c = 0.0
        else:
            conditions.append(Condition(
                "proportionality", False,
                witness={"u": float(u[int(np.argmax(np.abs(k1v)))]),
                         "k1": float(np.max(np.abs(k1v))), "k2": 0.0,
                         "reason": "degenerate_k2"},
                detail="k2 vanishes identically while k1 does not"))
            c = None
    else:
        c = float(np.sum(k1v[mask] * k2v[mask]) / np.sum(k2v[mask] ** 2))
        resid = np.abs(k1v - c * k2v)
        iworst = int(np.argmax(resid))
        if resid[iworst] <= tol * max(scale, 1e-300):
            conditions.append(Condition(
                "proportionality", True,
                detail=f"fitted c = {c!r}, max residual = {resid[iworst]:.3e}"))
        else:
            conditions.append(Condition(
                "proportionality", False,
                witness={"u": float(u[iworst]), "c": c,
                         "k1": float(k1v[iworst]),
                         "c_times_k2": float(c * k2v[iworst]),
                         "residual": float(resid[iworst])},
                detail=f"best-fit c = {c!r} leaves residual "
                       f"{resid[iworst]:.3e} at u = {u[iworst]:.6g}"))
    report = _finish(
        conditions,
        sampling=f"{n} uniform samples of [{interval[0]}, {interval[1]}]",
        tolerances={"tol": tol})
    report.tolerances["fitted_c"] = c
    return report


def check_scalar_general(spec, box, n=48, quad_n=None, tol=1e-10):
    """General scalar class: v S1(u, v) - v^3 d/du Sbar2(u, v) >= 0 on the box.

    ``box`` is ((u_lo, u_hi), (v_lo, v_hi)); the inequality is sampled on an
    n x n grid, so the verdict is a certificate for the box only.
    """
    if n < 2:
        raise ValueError("need at least a 2x2 grid")
    (ulo, uhi), (vlo, vhi) = box
    ug = np.linspace(ulo, uhi, n)
    vg = np.linspace(vlo, vhi, n)
    U, V = np.meshgrid(ug, vg, indexing="ij")
    g = V * spec.S1(U, V) - V**3 * spec.d1_sbar2(U, V, quad_n)
    gmax = float(np.max(np.abs(g)))
    imin = np.unravel_index(int(np.argmin(g)), g.shape)
    gmin = float(g[imin])
    passed = gmin >= -tol * (1.0 + gmax)
    witness = None if passed else {
        "u": float(U[imin]), "v": float(V[imin]), "g": gmin}
    conditions = [Condition(
        "entropy_production_sign", passed, witness,
        detail=f"min g = {gmin:.6e} on the sampled grid")]
    return _finish(
        conditions,
        sampling=f"{n}x{n} grid on box {list(map(list, box))} "
                 "(sampled certificate, not a global proof)",
        tolerances={"tol": tol, "quad_n": quad_n or getattr(spec, "quad_n", None)})


def check_spec(spec, *, box=None, interval=None, n=None, quad_n=None, tol=1e-10,
               n_samples=128):
    """Dispatch to the checker matching the augmentation variant."""
    from .augmentation import LinearConstant, NonlinearMatrix

    if isinstance(spec, LinearConstant):
        return check_linear(spec.B, spec.K, tol)
    if isinstance(spec, NonlinearMatrix):
        if box is None:
            raise ValueError("nonlinear-matrix check needs a state box")
        return check_nonlinear(spec, box, n_samples=n_samples, tol=tol)
    if isinstance(spec, ScalarFactored):
        if interval is None:
            interval = box[0] if box is not None else (-3.0, 3.0)
        return check_scalar_factored(spec, interval, n=n or 256, tol=tol)
    if isinstance(spec, ScalarGeneral):
        if box is None:
            raise ValueError("scalar-general check needs a (u, v) box")
        return check_scalar_general(spec, box, n=n or 48, quad_n=quad_n, tol=tol)
    raise TypeError(f"unsupported augmentation spec {type(spec).__name__}")


def witness_reproduces(condition, *, B=None, K=None, H=None, spec=None,
                       tol=1e-10, quad_n=None):
    """Re-evaluate a failed condition's witness; True if it still violates."""
    w = condition.witness
    if w is None:
        return False
    name = condition.name
    if name == "diffusion_nonnegative":
        if "direction" in w:
            M = np.atleast_2d(B) if B is not None else spec.Bfun(
                np.asarray(w["state"], dtype=float))
            d = np.asarray(w["direction"])
            return float(d @ (M + M.T) @ d) < 0.0
        return float(spec.Bfun(np.asarray(w["u"]))) < 0.0
    if name in ("dispersion_symmetric", "H_symmetric"):
        M = np.atleast_2d(K if name == "dispersion_symmetric" else H)
        i, j = (w["entry"][0] - 1, w["entry"][1] - 1)
        scale = max(float(np.max(np.abs(M))), 1e-300)
        return abs(M[i, j] - M[j, i]) > tol * scale
    if name == "proportionality":
        u = np.asarray(w["u"])
        k1 = float(spec.k1(u))
        k2 = float(spec.k2(u))
        if w.get("reason") == "degenerate_k2":
            return k1 != 0.0 and k2 == 0.0
        return abs(k1 - w["c"] * k2) > tol
    if name == "entropy_production_sign":
        u, v = np.asarray(w["u"]), np.asarray(w["v"])
        g = float(v * spec.S1(u, v) - v**3 * spec.d1_sbar2(u, v, quad_n))
        return g < 0.0
    raise ValueError(f"unknown condition {name!r}")
