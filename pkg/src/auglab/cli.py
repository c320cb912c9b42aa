"""Command-line front end.

Subcommands: ``check`` (admissibility certification), ``run`` (single
solve), ``sweep`` (eps-family limit study), ``identity`` (entropy-balance
verification on manufactured fields).  All artifacts are CSV/JSON with
deterministic formatting; identical configs produce identical bytes.

Exit codes: 0 success/Admissible, 1 configuration error, 2 Inadmissible,
3 Inconclusive, 4 state blow-up, 5 boundary contamination, 6 identity
failure.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import admissibility as adm
from . import diagnostics as diag_mod
from . import solver as solver_mod
from .augmentation import (LinearConstant, NonlinearMatrix, ScalarFactored,
                           ScalarGeneral)
from .config import ConfigError, load_config, make_initial
from .expressions import ExprFunc
from .solver import (Grid1D, StateBlowup, riemann_run, run,
                     write_diagnostics_csv, write_fields_csv)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INADMISSIBLE = 2
EXIT_INCONCLUSIVE = 3
EXIT_BLOWUP = 4
EXIT_CONTAMINATED = 5
EXIT_IDENTITY = 6

IDENTITY_ANALYTIC_TOL = 1e-11
IDENTITY_ORDER_MARGIN = 0.2


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _say(quiet, *args):
    if not quiet:
        print(*args)


def _run_admissibility(setup):
    spec = setup.spec_for(setup.eps_list()[0])
    a = setup.admissibility
    if isinstance(spec, LinearConstant):
        return adm.check_linear(spec.B, spec.K, tol=a["tol"])
    if isinstance(spec, NonlinearMatrix):
        return adm.check_nonlinear(spec, a["box"], n_samples=a["n_samples"],
                                   tol=a["tol"])
    if isinstance(spec, ScalarFactored):
        return adm.check_scalar_factored(
            spec, tuple(a["box"][0]), n=max(a["n_samples"], 3), tol=a["tol"])
    if isinstance(spec, ScalarGeneral):
        box = (tuple(a["box"][0]), (-a["v_max"], a["v_max"]))
        return adm.check_scalar_general(spec, box, n=a["n_grid"],
                                        quad_n=a["quad_n"], tol=a["tol"])
    raise ConfigError("augmentation.variant",
                      "the check command needs an augmentation block")


def cmd_check(setup, out_dir, quiet=False, seed=0):
    report = _run_admissibility(setup)
    _write_json(os.path.join(out_dir, "report.json"), report.to_dict())
    _say(quiet, f"verdict: {report.verdict}")
    for cond in report.conditions:
        _say(quiet, f"  [{'pass' if cond.passed else 'FAIL'}] "
                    f"{cond.name}: {cond.detail}")
    return {adm.ADMISSIBLE: EXIT_OK, adm.INADMISSIBLE: EXIT_INADMISSIBLE,
            adm.INCONCLUSIVE: EXIT_INCONCLUSIVE}[report.verdict]


def _resolution_ok(setup, eps):
    if setup.variant == "none":
        return True
    return setup.grid.dx <= eps / solver_mod.RESOLUTION_FACTOR * (1 + 1e-12)


def _write_run_artifacts(out_dir, setup, state, diagnostics):
    grid, system = setup.grid, setup.system
    write_diagnostics_csv(os.path.join(out_dir, "diagnostics.csv"),
                          diagnostics, system.N)
    x = grid.centers()
    initial = make_initial(setup)
    u0 = np.asarray(initial(x), dtype=float)
    if u0.ndim == 1:
        u0 = u0[:, None]
    frames = [(0.0, u0)] + list(diagnostics.snapshots)
    if state is not None and (not frames or frames[-1][0] != state.t):
        frames.append((state.t, state.u))
    for k, (t, u) in enumerate(frames):
        write_fields_csv(os.path.join(out_dir, f"fields_{k}.csv"), grid, u,
                         system)
    return frames


def _summarize(setup, state, diagnostics, resolution_ok, shock=None,
               error=None):
    arr = diagnostics.arrays()
    mass0 = np.atleast_1d(arr["mass"][0])
    mass1 = np.atleast_1d(arr["mass"][-1])
    drift = float(np.max(np.abs(mass1 - mass0)) /
                  (1.0 + float(np.max(np.abs(mass0)))))
    summary = {
        "t_final": float(arr["t"][-1]),
        "final_entropy": float(arr["entropy"][-1]),
        "initial_entropy": float(arr["entropy"][0]),
        "entropy_monotone": bool(np.all(np.diff(arr["entropy"]) <=
                                        1e-8 * (1.0 + abs(arr["entropy"][0])))),
        "dissipation_time_integral": float(np.trapezoid(arr["dissipation"],
                                                        arr["t"])),
        "final_mass": mass1.tolist(),
        "mass_drift": drift,
        "final_flux_gap": float(arr["flux_gap"][-1]),
        "final_entropy_flux_gap": float(arr["entropy_flux_gap"][-1]),
        "resolution_ok": bool(resolution_ok),
        "boundary_contaminated": bool(diagnostics.boundary_contaminated),
        "notes": list(diagnostics.notes),
    }
    if shock is not None:
        summary["shock"] = shock.to_dict()
    if error is not None:
        summary["error"] = error
    return summary


def _single_run(setup, eps, grid=None, quiet=True):
    """Execute one configured run; returns (state, diagnostics, exit_code)."""
    grid = grid or setup.grid
    system = setup.system
    spec = setup.spec_for(eps)
    initial_is_riemann = setup.initial_type == "riemann"
    try:
        if initial_is_riemann:
            state, diagnostics = riemann_run(
                system, spec, grid, setup.solver,
                setup.initial_params["u_left"],
                setup.initial_params["u_right"])
        else:
            state, diagnostics = run(system, spec, grid, setup.solver,
                                     make_initial(setup))
    except StateBlowup as exc:
        return exc.state, exc.diagnostics, EXIT_BLOWUP, str(exc)
    code = EXIT_OK
    if diagnostics.boundary_contaminated:
        code = EXIT_CONTAMINATED
    return state, diagnostics, code, None


def cmd_run(setup, out_dir, quiet=False, seed=0):
    if setup.eps_sequence is not None:
        raise ConfigError("augmentation.eps_sequence",
                          "the run command needs a single eps")
    eps = setup.eps if setup.eps is not None else 1.0
    res_ok = _resolution_ok(setup, eps)
    if not res_ok:
        _say(quiet, f"warning: dx = {setup.grid.dx:.4g} exceeds eps/8 = "
                    f"{eps / 8:.4g}; small-scale terms are under-resolved")
    state, diagnostics, code, error = _single_run(setup, eps, quiet=quiet)
    shock = None
    if setup.initial_type == "riemann" and code == EXIT_OK:
        try:
            shock = diag_mod.classify_shock(
                setup.grid.centers(), diagnostics.snapshots, setup.system)
        except diag_mod.NoJumpFound as exc:
            diagnostics.notes.append(f"no shock detected: {exc}")
    _write_run_artifacts(out_dir, setup, state, diagnostics)
    summary = _summarize(setup, state, diagnostics, res_ok, shock, error)
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    _say(quiet, f"finished at t = {summary['t_final']:.6g}, "
                f"entropy {summary['initial_entropy']:.6g} -> "
                f"{summary['final_entropy']:.6g}")
    if error:
        _say(quiet, f"run aborted: {error}")
    return code


def _sweep_grid(setup, eps):
    """Per-eps grid respecting the resolution requirement dx <= eps/8."""
    g = setup.grid
    length = g.x_hi - g.x_lo
    needed = int(math.ceil(length / (eps / solver_mod.RESOLUTION_FACTOR)))
    return Grid1D(g.x_lo, g.x_hi, max(g.n_cells, needed), g.boundary)


def cmd_sweep(setup, out_dir, quiet=False, seed=0):
    if setup.eps_sequence is None or len(setup.eps_sequence) < 3:
        raise ConfigError("augmentation.eps_sequence",
                          "sweeps need an eps_sequence with >= 3 entries")
    eps_seq = list(setup.eps_sequence)
    grids = {eps: _sweep_grid(setup, eps) for eps in eps_seq}

    def one(eps):
        return _single_run(setup, eps, grid=grids[eps])

    with ThreadPoolExecutor(max_workers=min(setup.sweep["workers"],
                                            len(eps_seq))) as pool:
        results = list(pool.map(one, eps_seq))

    family = []
    shocks = []
    errors = {}
    worst = EXIT_OK
    for eps, (state, diagnostics, code, error) in zip(eps_seq, results):
        tag = f"eps_{eps:g}"
        run_dir = os.path.join(out_dir, tag)
        os.makedirs(run_dir, exist_ok=True)
        if diagnostics is not None:
            write_diagnostics_csv(os.path.join(run_dir, "diagnostics.csv"),
                                  diagnostics, setup.system.N)
        if code != EXIT_OK:
            worst = max(worst, code)
            errors[tag] = error or f"exit {code}"
            _say(quiet, f"{tag}: FAILED ({errors[tag]})")
            continue
        snap_t, snap_u = diagnostics.snapshots[0]
        xs = grids[eps].centers()
        write_fields_csv(os.path.join(run_dir, "fields_snapshot.csv"),
                         grids[eps], snap_u, setup.system)
        w = snap_u if setup.variant in ("scalar_factored", "scalar_general") \
            or setup.variant == "none" \
            else setup.system.entropy_gradient(snap_u)
        family.append(diag_mod.FamilyMember(eps=eps, xs=xs, w=w))
        if setup.initial_type == "riemann":
            try:
                shocks.append({"eps": eps, **diag_mod.classify_shock(
                    xs, diagnostics.snapshots, setup.system).to_dict()})
            except diag_mod.NoJumpFound as exc:
                shocks.append({"eps": eps, "error": str(exc)})
        _say(quiet, f"{tag}: ok (snapshot at t = {snap_t:.6g})")

    payload = {"eps_sequence": eps_seq, "errors": errors, "shocks": shocks}
    if len(family) >= 3:
        theta = ExprFunc(setup.sweep["theta"], ("x",))
        spec_factory = setup.spec_for
        measure = diag_mod.measure_estimate(spec_factory, family, theta,
                                            setup.solver.stencil_order)
        gaps = diag_mod.flux_gap_decay(spec_factory, family, theta,
                                       setup.solver.stencil_order)
        payload["measure"] = measure.to_dict()
        payload["flux_gap_decay"] = gaps.to_dict()
        _say(quiet, f"measure margin: {measure.min_margin:.3e}; "
                    f"flux-gap exponent: {gaps.flux_exponent:.3f}")
    _write_json(os.path.join(out_dir, "sweep.json"), payload)
    return worst


def cmd_identity(setup, out_dir, quiet=False, seed=0):
    if setup.variant == "none":
        raise ConfigError("augmentation.variant",
                          "the identity command needs an augmentation block")
    spec = setup.spec_for(setup.eps_list()[0])
    domain = tuple(setup.identity["domain"])
    fields = diag_mod.stock_fields(setup.system.N, domain)
    labels = [f"stock_{k}" for k in range(len(fields))]
    for k, exprs in enumerate(setup.identity["fields"]):
        fields.append(diag_mod.ManufacturedField(exprs, domain))
        labels.append(f"user_{k}")
    order_floor = setup.solver.stencil_order - IDENTITY_ORDER_MARGIN
    rows = []
    worst = None
    all_pass = True
    for label, fld in zip(labels, fields):
        res = diag_mod.identity_residual(
            spec, fld, n=setup.identity["n"],
            stencil_order=setup.solver.stencil_order, system=setup.system)
        trivially_exact = res.fd_residual_fine <= 1e-13
        ok = res.analytic_residual <= IDENTITY_ANALYTIC_TOL and \
            (trivially_exact or res.order >= order_floor)
        all_pass &= ok
        rows.append({"field": label,
                     "components": [str(c.expr) for c in fld.components],
                     **res.to_dict(), "passed": bool(ok)})
        if worst is None or res.analytic_residual > worst[0]:
            worst = (res.analytic_residual, label, res.worst_x)
        _say(quiet, f"{label}: analytic residual {res.analytic_residual:.3e}, "
                    f"order {res.order:.2f} [{'pass' if ok else 'FAIL'}]")
    _write_json(os.path.join(out_dir, "identity.json"),
                {"fields": rows, "analytic_tolerance": IDENTITY_ANALYTIC_TOL,
                 "order_floor": order_floor, "all_passed": bool(all_pass)})
    if not all_pass:
        _say(quiet, f"worst residual {worst[0]:.6e} on field {worst[1]} "
                    f"near x = {worst[2]:.6g}")
        return EXIT_IDENTITY
    return EXIT_OK


_COMMANDS = {"check": cmd_check, "run": cmd_run, "sweep": cmd_sweep,
             "identity": cmd_identity}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="auglab",
        description="Numerical laboratory for diffusive-dispersive "
                    "augmented conservation laws.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
            ("check", "certify the entropy-production sign conditions"),
            ("run", "solve one configured problem"),
            ("sweep", "run an eps-family and study the zero-eps limit"),
            ("identity", "verify the entropy balance on manufactured fields")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML run config")
        p.add_argument("--out", default=None,
                       help="output directory (default from config)")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized sampling")
        p.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        setup = load_config(args.config)
        out_dir = args.out if args.out is not None else setup.output_dir
        os.makedirs(out_dir, exist_ok=True)
        return _COMMANDS[args.command](setup, out_dir, quiet=args.quiet,
                                       seed=args.seed)
    except ConfigError as exc:
        print(f"config error in {exc.field}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
