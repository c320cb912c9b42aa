"""Run-configuration parsing: a TOML file with flat sections.

Sections: ``[model]``, ``[augmentation]``, ``[grid]``, ``[solver]``,
``[initial]``, ``[admissibility]``, ``[identity]``, ``[output]``.  Every
functional ingredient is declarative: matrices as nested arrays, functions
as expression strings in the documented grammar.  Parse and validation
errors carry the offending section/field for the CLI diagnostics.
"""

import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .augmentation import (LinearConstant, NonlinearMatrix, ScalarFactored,
                           ScalarGeneral)
from .expressions import ExpressionError, ExprFunc
from .solver import Grid1D, SolverConfig
from .systems import builtin_model, polynomial_system

VARIANTS = ("none", "linear_constant", "nonlinear_matrix", "scalar_factored",
            "scalar_general")


class ConfigError(ValueError):
    def __init__(self, field_name, message):
        self.field = field_name
        super().__init__(f"[{field_name}] {message}")


def _get(section, key, default=None, required=False, where=""):
    if key in section:
        return section[key]
    if required:
        raise ConfigError(f"{where}.{key}", "missing required field")
    return default


@dataclass
class RunSetup:
    """Everything needed to execute a command, derived from one config."""

    system: object
    variant: str
    spec_params: dict
    eps: Optional[float]
    eps_sequence: Optional[list]
    grid: Grid1D
    solver: SolverConfig
    snapshot_time: float
    initial_type: str
    initial_params: dict
    admissibility: dict
    identity: dict
    sweep: dict
    output_dir: str

    def spec_for(self, eps):
        return build_spec(self.variant, self.spec_params, eps, self.system.N)

    @property
    def spec(self):
        if self.eps is None:
            raise ConfigError("augmentation.eps",
                              "this command needs a single eps")
        return self.spec_for(self.eps)

    def eps_list(self):
        if self.eps_sequence is not None:
            return list(self.eps_sequence)
        return [self.eps]


def _build_system(cfg):
    model = cfg.get("model", {})
    name = model.get("name")
    if name is not None:
        try:
            return builtin_model(name)
        except Exception as exc:
            raise ConfigError("model.name", str(exc)) from None
    if "flux_poly" not in model or "entropy_poly" not in model:
        raise ConfigError(
            "model", "give either a builtin name or flux_poly/entropy_poly")
    if int(model.get("N", 1)) != 1:
        raise ConfigError("model.N", "inline polynomial models are scalar only")
    try:
        return polynomial_system(
            model["flux_poly"], model["entropy_poly"],
            domain_box=model.get("domain_box"))
    except ValueError as exc:
        raise ConfigError("model", str(exc)) from None


def _expr_field(where, text, variables):
    try:
        return ExprFunc(text, variables)
    except ExpressionError as exc:
        raise ConfigError(where, str(exc)) from None


def build_spec(variant, params, eps, N):
    """Instantiate the augmentation for one value of eps."""
    if variant == "none":
        return None
    if variant == "linear_constant":
        return LinearConstant(B=params["B"], K=params["K"], eps=eps)
    if variant == "nonlinear_matrix":
        return NonlinearMatrix.from_expressions(
            params["B"], params["h"], H=params["H"], eps=eps)
    if variant == "scalar_factored":
        return ScalarFactored.from_expressions(
            params["B"], params["k1"], params["k2"], eps=eps)
    if variant == "scalar_general":
        return ScalarGeneral.from_expressions(
            params["S1"], params["S2"], eps=eps,
            quad_n=params.get("quad_n", 24))
    raise ConfigError("augmentation.variant", f"unknown variant {variant!r}")


def _validate_augmentation(aug, N):
    """Normalize the augmentation section into (variant, params)."""
    variant = aug.get("variant")
    if "xi" in aug:
        if variant not in (None, "linear_constant"):
            raise ConfigError("augmentation.xi",
                              "xi shorthand applies to linear_constant only")
        variant = "linear_constant"
        nu = float(aug.get("nu", 1.0))
        xi = float(aug["xi"])
        eye = np.eye(N)
        return variant, {"B": nu * eye, "K": xi * nu**2 * eye}
    if variant is None:
        raise ConfigError("augmentation.variant", "missing required field")
    if variant not in VARIANTS:
        raise ConfigError("augmentation.variant",
                          f"must be one of {VARIANTS}, got {variant!r}")
    if variant == "none":
        return variant, {}
    if variant == "linear_constant":
        B = np.atleast_2d(np.asarray(
            _get(aug, "B", required=True, where="augmentation"), dtype=float))
        K = np.atleast_2d(np.asarray(
            _get(aug, "K", required=True, where="augmentation"), dtype=float))
        if B.shape != (N, N) or K.shape != (N, N):
            raise ConfigError("augmentation.B",
                              f"B and K must be {N}x{N} for this model")
        return variant, {"B": B, "K": K}
    if variant == "nonlinear_matrix":
        h = _get(aug, "h", required=True, where="augmentation")
        Bexpr = _get(aug, "B", required=True, where="augmentation")
        H = np.atleast_2d(np.asarray(
            _get(aug, "H", required=True, where="augmentation"), dtype=float))
        if len(h) != N or H.shape != (N, N):
            raise ConfigError("augmentation.h",
                              f"h needs {N} components and H must be {N}x{N}")
        names = ("v",) if N == 1 else tuple(f"v{i+1}" for i in range(N))
        for i, e in enumerate(h):
            _expr_field(f"augmentation.h[{i}]", e, names)
        for i, row in enumerate(Bexpr):
            for j, e in enumerate(row):
                _expr_field(f"augmentation.B[{i}][{j}]", e, names)
        return variant, {"B": Bexpr, "h": h, "H": H}
    if variant == "scalar_factored":
        if N != 1:
            raise ConfigError("augmentation.variant",
                              "scalar variants need a scalar model")
        params = {}
        for key in ("B", "k1", "k2"):
            text = _get(aug, key, required=True, where="augmentation")
            _expr_field(f"augmentation.{key}", text, ("u",))
            params[key] = text
        return variant, params
    # scalar_general
    if N != 1:
        raise ConfigError("augmentation.variant",
                          "scalar variants need a scalar model")
    params = {"quad_n": int(aug.get("quad_n", 24))}
    for key in ("S1", "S2"):
        text = _get(aug, key, required=True, where="augmentation")
        _expr_field(f"augmentation.{key}", text, ("u", "v"))
        params[key] = text
    return variant, params


def _validate_initial(section, N):
    itype = section.get("type", "sine")
    params = dict(section)
    params.pop("type", None)
    if itype == "sine":
        for key in ("amplitude", "mean", "wavenumber", "phase"):
            val = params.get(key)
            if isinstance(val, list) and len(val) != N:
                raise ConfigError(f"initial.{key}",
                                  f"needs {N} entries for this model")
    elif itype == "riemann":
        for key in ("u_left", "u_right"):
            val = _get(section, key, required=True, where="initial")
            val = np.atleast_1d(np.asarray(val, dtype=float))
            if val.shape != (N,):
                raise ConfigError(f"initial.{key}", f"needs {N} components")
            params[key] = val
    elif itype == "expression":
        exprs = _get(section, "expr", required=True, where="initial")
        if isinstance(exprs, str):
            exprs = [exprs]
        if len(exprs) != N:
            raise ConfigError("initial.expr", f"needs {N} components")
        params["expr"] = [
            _expr_field(f"initial.expr[{i}]", e, ("x",))
            for i, e in enumerate(exprs)]
    else:
        raise ConfigError("initial.type", f"unknown type {itype!r}")
    return itype, params


def make_initial(setup):
    """Initial-data callable x -> (n, N) for the configured run."""
    N = setup.system.N
    itype, p = setup.initial_type, setup.initial_params
    if itype == "riemann":
        from .solver import riemann_initial
        x_mid = 0.5 * (setup.grid.x_lo + setup.grid.x_hi)
        return riemann_initial(p["u_left"], p["u_right"], x_mid,
                               3.0 * setup.grid.dx)

    def per_component(key, default):
        val = p.get(key, default)
        if isinstance(val, list):
            return [float(v) for v in val]
        return [float(val)] * N

    if itype == "sine":
        amp = per_component("amplitude", 1.0)
        mean = per_component("mean", 0.0)
        wav = per_component("wavenumber", 1.0)
        phase = per_component("phase", 0.0)
        L = setup.grid.x_hi - setup.grid.x_lo
        x_lo = setup.grid.x_lo

        def initial(x):
            cols = [m + a * np.sin(2.0 * np.pi * k * (x - x_lo) / L + ph)
                    for a, m, k, ph in zip(amp, mean, wav, phase)]
            return np.stack(cols, axis=-1)

        return initial

    def initial(x):
        return np.stack([f(x) for f in p["expr"]], axis=-1)

    return initial


def load_config(path) -> RunSetup:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"no such file: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"TOML parse error: {exc}") from None

    system = _build_system(raw)
    N = system.N

    aug = raw.get("augmentation", {"variant": "none"})
    variant, spec_params = _validate_augmentation(aug, N)
    eps = aug.get("eps")
    eps_sequence = aug.get("eps_sequence")
    if variant != "none":
        if (eps is None) == (eps_sequence is None):
            raise ConfigError("augmentation.eps",
                              "give exactly one of eps / eps_sequence")
        if eps is not None and not float(eps) > 0:
            raise ConfigError("augmentation.eps", "eps must be positive")
        if eps_sequence is not None:
            eps_sequence = [float(e) for e in eps_sequence]
            if any(a <= b for a, b in zip(eps_sequence, eps_sequence[1:])):
                raise ConfigError("augmentation.eps_sequence",
                                  "must be strictly decreasing")
        # instantiating once validates matrix shapes and expressions
        build_spec(variant, spec_params,
                   float(eps) if eps is not None else eps_sequence[0], N)
    else:
        eps, eps_sequence = None, None

    g = raw.get("grid", {})
    try:
        grid = Grid1D(
            x_lo=float(_get(g, "x_lo", 0.0)), x_hi=float(_get(g, "x_hi", 1.0)),
            n_cells=int(_get(g, "n_cells", 256)),
            boundary=_get(g, "boundary", "periodic"))
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from None

    s = raw.get("solver", {})
    try:
        t_end = float(_get(s, "t_end", required=True, where="solver"))
        snapshot_time = float(_get(s, "snapshot_time", t_end / 2.0))
        snaps = tuple(sorted({snapshot_time})) if 0 < snapshot_time < t_end else ()
        solver = SolverConfig(
            t_end=t_end, cfl=float(_get(s, "cfl", 0.9)),
            stencil_order=int(_get(s, "stencil_order", 2)),
            record_every=int(_get(s, "record_every", 10)),
            snapshot_times=snaps,
            diff_safety=float(_get(s, "diff_safety", 2.0)),
            disp_safety=float(_get(s, "disp_safety", 4.0)),
            blowup_factor=float(_get(s, "blowup_factor", 1.5)))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("solver", str(exc)) from None

    initial_type, initial_params = _validate_initial(
        raw.get("initial", {"type": "sine"}), N)

    adm = raw.get("admissibility", {})
    box = adm.get("box")
    admissibility = {
        "box": np.atleast_2d(np.asarray(box, dtype=float))
        if box is not None else system.domain_box,
        "v_max": float(adm.get("v_max", 3.0)),
        "n_samples": int(adm.get("n_samples", 128)),
        "n_grid": int(adm.get("n_grid", 48)),
        "quad_n": int(adm.get("quad_n", 24)),
        "tol": float(adm.get("tol", 1e-10)),
    }

    ident = raw.get("identity", {})
    identity = {
        "n": int(ident.get("n", 192)),
        "domain": [float(v) for v in ident.get("domain", [0.0, 2.0 * np.pi])],
        "fields": ident.get("fields", []),
    }
    for i, comp_list in enumerate(identity["fields"]):
        if isinstance(comp_list, str):
            comp_list = [comp_list]
            identity["fields"][i] = comp_list
        for j, e in enumerate(comp_list):
            _expr_field(f"identity.fields[{i}][{j}]", e, ("x",))

    sw = raw.get("sweep", {})
    sweep = {"theta": sw.get("theta", "1"), "workers": int(sw.get("workers", 4))}
    _expr_field("sweep.theta", sweep["theta"], ("x",))

    return RunSetup(
        system=system, variant=variant, spec_params=spec_params,
        eps=float(eps) if eps is not None else None,
        eps_sequence=eps_sequence, grid=grid, solver=solver,
        snapshot_time=snapshot_time, initial_type=initial_type,
        initial_params=initial_params, admissibility=admissibility,
        identity=identity, sweep=sweep,
        output_dir=str(raw.get("output", {}).get("dir", "out")))
