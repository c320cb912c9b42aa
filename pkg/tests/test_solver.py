import numpy as np
import pytest

from auglab.augmentation import (LinearConstant, NonlinearMatrix,
                                 ScalarFactored, ScalarGeneral,
                                 VariantMismatch)
from auglab.diagnostics import NoJumpFound, classify_shock
from auglab.solver import (Grid1D, SolverConfig, StateBlowup, riemann_run,
                           run, spatial_rhs, stable_dt)
from auglab.systems import builtin_model, polynomial_system

CUBIC = builtin_model("scalar_cubic")
BURGERS = builtin_model("scalar_burgers")
ELASTIC = builtin_model("elasticity_p_system")
ADVECTION = polynomial_system([0.0, 1.0], [0.0, 0.0, 0.5], name="advection")


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, 8)
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, 32, "reflecting")
    g = Grid1D(0.0, 1.0, 64)
    assert g.dx == pytest.approx(1.0 / 64)
    assert g.centers()[0] == pytest.approx(g.dx / 2)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(t_end=1.0, cfl=1.5)
    with pytest.raises(ValueError):
        SolverConfig(t_end=1.0, rk_order=2)
    with pytest.raises(ValueError):
        SolverConfig(t_end=1.0, stencil_order=3)


@pytest.mark.parametrize("system,spec", [
    (CUBIC, None),
    (CUBIC, LinearConstant([[1.0]], [[0.5]], 0.1)),
    (CUBIC, ScalarFactored.from_expressions("1", "u", "u", 0.1)),
    (CUBIC, ScalarGeneral.from_expressions("u*v", "v", 0.1)),
    (ELASTIC, LinearConstant(np.eye(2), np.eye(2), 0.1)),
    (ELASTIC, NonlinearMatrix.from_expressions(
        [["1", "0"], ["0", "1"]], ["v1 + 0.1*v2^2", "v2"], np.eye(2), 0.1)),
])
def test_constant_state_gives_zero_rhs(system, spec):
    grid = Grid1D(0.0, 1.0, 64, "periodic")
    u = np.tile(np.array([0.4, -0.3][: system.N]), (64, 1))
    rhs = spatial_rhs(system, spec, grid, u)
    assert np.max(np.abs(rhs)) < 1e-13


def test_advection_rhs_second_order():
    errs = []
    for n in (64, 128):
        g = Grid1D(0.0, 1.0, n, "periodic")
        x = g.centers()
        rhs = spatial_rhs(ADVECTION, None, g, np.sin(2 * np.pi * x)[:, None])
        errs.append(np.max(np.abs(rhs[:, 0] + 2 * np.pi * np.cos(2 * np.pi * x))))
    assert np.log2(errs[0] / errs[1]) > 1.8


def test_heat_limit_rhs():
    # f = 0, B = 1, K = 0: rhs ~ eps * u_xx
    zero_flux = polynomial_system([0.0], [0.0, 0.0, 0.5], name="static")
    eps = 0.3
    errs = []
    for n in (64, 128):
        g = Grid1D(0.0, 2.0 * np.pi, n, "periodic")
        x = g.centers()
        rhs = spatial_rhs(zero_flux, LinearConstant([[1.0]], [[0.0]], eps), g,
                          np.sin(x)[:, None])
        errs.append(np.max(np.abs(rhs[:, 0] + eps * np.sin(x))))
    assert np.log2(errs[0] / errs[1]) > 1.8


def test_stable_dt_advective():
    g = Grid1D(0.0, 1.0, 100, "periodic")
    u = np.linspace(-1.0, 1.0, 100)[:, None]
    assert stable_dt(BURGERS, None, g, u, cfl=0.5) == pytest.approx(0.005)


def test_stable_dt_dispersive():
    g = Grid1D(0.0, 10.0, 100, "periodic")  # dx = 0.1
    u = np.zeros((100, 1))
    spec = LinearConstant([[0.0]], [[1.0]], eps=0.1)
    assert stable_dt(BURGERS, spec, g, u, cfl=1.0) == pytest.approx(0.025)


def test_stable_dt_no_dynamics_is_infinite():
    zero_flux = polynomial_system([0.0], [0.0, 0.0, 0.5], name="static")
    g = Grid1D(0.0, 1.0, 64, "periodic")
    assert stable_dt(zero_flux, None, g, np.zeros((64, 1)), cfl=0.9) == np.inf


def test_zero_initial_data_stays_zero():
    g = Grid1D(0.0, 1.0, 64, "periodic")
    cfg = SolverConfig(t_end=0.1, record_every=5)
    spec = LinearConstant([[1.0]], [[1.0]], 0.05)
    state, diag = run(BURGERS, spec, g, cfg, lambda x: np.zeros((x.size, 1)))
    assert np.all(state.u == 0.0)
    arr = diag.arrays()
    for key in ("mass", "entropy", "dissipation", "flux_gap"):
        assert np.all(arr[key] == 0.0)


def test_periodic_conservation_and_entropy_decay():
    g = Grid1D(0.0, 1.0, 256, "periodic")
    cfg = SolverConfig(t_end=0.3, record_every=20)
    spec = LinearConstant([[1.0]], [[0.0]], 0.05)
    state, diag = run(BURGERS, spec, g, cfg,
                      lambda x: np.sin(2 * np.pi * x)[:, None])
    arr = diag.arrays()
    drift = np.max(np.abs(arr["mass"] - arr["mass"][0]))
    assert drift <= 1e-12 * (1.0 + abs(float(arr["mass"][0, 0])))
    slack = 1e-8 * (1.0 + abs(arr["entropy"][0]))
    assert np.all(np.diff(arr["entropy"]) <= slack)
    assert np.all(arr["dissipation"] <= 1e-12)


def test_elasticity_run_conserves_and_dissipates():
    g = Grid1D(0.0, 2.0 * np.pi, 128, "periodic")
    cfg = SolverConfig(t_end=0.3, record_every=10)
    spec = LinearConstant(np.eye(2), 0.5 * np.eye(2), 0.1)

    def initial(x):
        return np.stack([0.4 * np.sin(x), 0.3 * np.cos(x)], axis=-1)

    state, diag = run(ELASTIC, spec, g, cfg, initial)
    arr = diag.arrays()
    assert np.max(np.abs(arr["mass"] - arr["mass"][0])) < 1e-12
    assert np.all(np.diff(arr["entropy"]) <= 1e-8 * (1 + arr["entropy"][0]))


def test_dissipation_scales_linearly_in_eps():
    # recorded dissipation for fixed smooth data halves with eps (to ~10%)
    g = Grid1D(0.0, 1.0, 256, "periodic")
    cfg = SolverConfig(t_end=0.02, record_every=10**9)

    def dissipation_at(eps):
        spec = LinearConstant([[1.0]], [[0.0]], eps)
        _, diag = run(BURGERS, spec, g, cfg,
                      lambda x: 0.5 * np.sin(2 * np.pi * x)[:, None])
        return diag.arrays()["dissipation"][-1]

    ratio = dissipation_at(0.02) / dissipation_at(0.04)
    assert ratio == pytest.approx(0.5, rel=0.1)


def test_snapshots_are_taken_at_requested_times():
    g = Grid1D(0.0, 1.0, 64, "periodic")
    cfg = SolverConfig(t_end=0.2, record_every=50,
                       snapshot_times=(0.05, 0.1))
    state, diag = run(BURGERS, None, g, cfg,
                      lambda x: 0.3 * np.sin(2 * np.pi * x)[:, None])
    times = [t for t, _ in diag.snapshots]
    assert times == pytest.approx([0.05, 0.1, 0.2])


def test_blowup_raises_with_partial_diagnostics():
    g = Grid1D(0.0, 1.0, 128, "periodic")
    cfg = SolverConfig(t_end=1.0, record_every=1)
    spec = LinearConstant([[-1.0]], [[0.0]], 0.05)  # backward heat
    with pytest.raises(StateBlowup) as info:
        run(BURGERS, spec, g, cfg, lambda x: np.sin(2 * np.pi * x)[:, None])
    assert info.value.diagnostics is not None
    assert len(info.value.diagnostics.t) >= 1


def test_entropy_grows_under_negative_diffusion():
    g = Grid1D(0.0, 1.0, 128, "periodic")
    cfg = SolverConfig(t_end=0.002, record_every=1)
    spec = LinearConstant([[-1.0]], [[0.0]], 0.05)
    _, diag = run(BURGERS, spec, g, cfg,
                  lambda x: np.sin(2 * np.pi * x)[:, None])
    ent = diag.arrays()["entropy"]
    assert ent[-1] > ent[0]


def test_scalar_variant_requires_quadratic_entropy():
    quartic = polynomial_system([0, 0, 0, 1.0], [0, 0, 0.5, 0, 0.25])
    g = Grid1D(0.0, 1.0, 64, "periodic")
    spec = ScalarGeneral.from_expressions("v", "0", 0.1)
    with pytest.raises(VariantMismatch):
        spatial_rhs(quartic, spec, g, np.zeros((64, 1)))


def test_riemann_needs_outflow():
    g = Grid1D(0.0, 1.0, 64, "periodic")
    cfg = SolverConfig(t_end=0.1)
    with pytest.raises(ValueError):
        riemann_run(CUBIC, None, g, cfg, [1.0], [0.0])


def test_riemann_equal_states_stays_constant():
    g = Grid1D(0.0, 1.0, 64, "outflow")
    cfg = SolverConfig(t_end=0.1, record_every=10)
    spec = LinearConstant([[1.0]], [[0.0]], 0.05)
    state, diag = riemann_run(CUBIC, spec, g, cfg, [0.5], [0.5])
    assert np.max(np.abs(state.u - 0.5)) < 1e-12
    assert not diag.boundary_contaminated
    with pytest.raises(NoJumpFound):
        classify_shock(g.centers(), diag.snapshots, CUBIC)


def test_classical_shock_speed_and_classification():
    # cubic data (1, 0) under pure diffusion: single classical shock,
    # speed [f]/[u] = 1
    eps = 0.01
    g = Grid1D(-0.5, 1.5, int(2.0 / (eps / 8)), "outflow")
    cfg = SolverConfig(t_end=0.5, record_every=10**9)
    spec = LinearConstant([[1.0]], [[0.0]], eps)
    state, diag = riemann_run(CUBIC, spec, g, cfg, [1.0], [0.0])
    assert not diag.boundary_contaminated
    rep = classify_shock(g.centers(), diag.snapshots, CUBIC)
    assert rep.classification == "Classical"
    assert rep.rh_speed == pytest.approx(1.0, rel=1e-3)
    assert rep.measured_speed == pytest.approx(rep.rh_speed, rel=0.02)
    assert rep.entropy_jump <= 0.0


def test_nonclassical_traveling_wave():
    # exact undercompressive profile of the cubic model with balanced
    # linear diffusion/dispersion (ratio xi): u = a - b*tanh(3ab (x-st)/eps)
    # with a = 1/(3 sqrt(2 xi)), u_r = 2a - 1, s = 3a^2 + b^2
    xi, eps = 2.0, 0.05
    a = 1.0 / (3.0 * np.sqrt(2.0 * xi))
    b = 1.0 - a
    lam = 3.0 * a * b
    s_exact = 3.0 * a**2 + b**2
    g = Grid1D(-0.7, 1.3, 320, "outflow")
    cfg = SolverConfig(t_end=0.2, record_every=10**9, snapshot_times=(0.1,))
    spec = LinearConstant([[1.0]], [[xi]], eps)
    state, diag = run(CUBIC, spec, g, cfg,
                      lambda x: (a - b * np.tanh(lam * (x - 0.1) / eps))[:, None])
    rep = classify_shock(g.centers(), diag.snapshots, CUBIC)
    assert rep.classification == "Nonclassical"
    assert rep.measured_speed == pytest.approx(s_exact, rel=0.02)
    assert rep.rh_speed == pytest.approx(s_exact, rel=0.01)
    assert rep.entropy_jump <= 1e-8
    assert rep.rh_residual <= 0.02 * abs(
        CUBIC.flux(np.array([rep.right_state[0]]))[0]
        - CUBIC.flux(np.array([rep.left_state[0]]))[0])
    assert rep.oleinik_slack < -0.01


def test_runs_are_deterministic():
    g = Grid1D(0.0, 1.0, 128, "periodic")
    cfg = SolverConfig(t_end=0.1, record_every=7)
    spec = LinearConstant([[1.0]], [[2.0]], 0.1)

    def once():
        state, diag = run(BURGERS, spec, g, cfg,
                          lambda x: 0.4 * np.sin(2 * np.pi * x)[:, None])
        return state.u.copy(), diag.arrays()

    u1, a1 = once()
    u2, a2 = once()
    assert np.array_equal(u1, u2)
    for key in a1:
        assert np.array_equal(a1[key], a2[key])


def test_fourth_order_stencil_advection():
    def l2_error(n):
        g = Grid1D(0.0, 1.0, n, "periodic")
        cfg = SolverConfig(t_end=0.5, cfl=0.4, record_every=10**9,
                           stencil_order=4)
        state, _ = run(ADVECTION, None, g, cfg,
                       lambda x: np.sin(2 * np.pi * x)[:, None])
        exact = np.sin(2 * np.pi * (g.centers() - state.t))
        return np.sqrt(g.dx * np.sum((state.u[:, 0] - exact) ** 2))

    e1, e2 = l2_error(48), l2_error(96)
    assert np.log2(e1 / e2) > 3.8
