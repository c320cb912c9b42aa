import numpy as np
import pytest

from auglab.systems import (EntropyMap, HyperbolicSystem, NoConvergence,
                            UnknownModel, builtin_model,
                            compatibility_residual, hessian_min_eigenvalue,
                            polynomial_system)

MODELS = ["scalar_cubic", "scalar_burgers", "elasticity_p_system"]


def test_unknown_model():
    with pytest.raises(UnknownModel):
        builtin_model("kdv")


def test_cubic_values():
    s = builtin_model("scalar_cubic")
    u = np.array([1.0])
    assert s.flux(u) == pytest.approx([1.0])
    assert s.entropy(u) == pytest.approx(0.5)
    assert s.entropy_flux(u) == pytest.approx(0.75)  # F' = u f', F(0)=0


def test_burgers_values():
    s = builtin_model("scalar_burgers")
    u = np.array([1.0])
    assert s.flux(u) == pytest.approx([0.5])
    assert s.entropy_flux(u) == pytest.approx(1.0 / 3.0)


def test_elasticity_values():
    s = builtin_model("elasticity_p_system")
    u = np.array([1.0, 1.0])
    assert np.allclose(s.flux(u), [-1.0, -2.0])
    assert s.entropy(u) == pytest.approx(1.25)  # s^2/2 + w^2/2 + w^4/4
    assert s.entropy_flux(u) == pytest.approx(-2.0)


@pytest.mark.parametrize("name", MODELS)
def test_normalization_at_origin(name):
    s = builtin_model(name)
    zero = np.zeros(s.N)
    assert np.all(s.flux(zero) == 0.0)
    assert s.entropy(zero) == 0.0
    assert s.entropy_flux(zero) == 0.0
    assert np.all(s.entropy_gradient(zero) == 0.0)


@pytest.mark.parametrize("name", MODELS)
def test_entropy_pair_compatibility(name):
    s = builtin_model(name)
    states = s.sample_states(100, np.random.default_rng(7))
    assert compatibility_residual(s, states) < 1e-7


@pytest.mark.parametrize("name", MODELS)
def test_hessian_positive_definite(name):
    s = builtin_model(name)
    states = s.sample_states(100, np.random.default_rng(11))
    assert hessian_min_eigenvalue(s, states) > 0.0


@pytest.mark.parametrize("name", MODELS)
def test_entropy_map_roundtrip(name):
    s = builtin_model(name)
    emap = EntropyMap(s)
    u = s.sample_states(100, np.random.default_rng(3))
    back = emap.from_entropy(emap.to_entropy(u))
    scale = 1.0 + np.linalg.norm(u, axis=-1)
    assert np.max(np.linalg.norm(back - u, axis=-1) / scale) < 1e-12


def test_quadratic_entropy_map_is_identity():
    emap = EntropyMap(builtin_model("scalar_cubic"))
    assert emap.to_entropy(np.array([3.0])) == pytest.approx([3.0])
    assert emap.from_entropy(np.array([2.5])) == pytest.approx([2.5])
    assert emap.to_entropy(np.array([-1.5])) == pytest.approx([-1.5])


def _cosh_entropy_system():
    # scalar test model with a genuinely nonlinear entropy map
    def flux(u):
        return u**2 / 2.0

    def flux_jacobian(u):
        return u[..., None]

    return HyperbolicSystem(
        name="cosh", N=1,
        flux=flux, flux_jacobian=flux_jacobian,
        entropy=lambda u: np.cosh(u[..., 0]) - 1.0,
        entropy_gradient=lambda u: np.sinh(u),
        entropy_hessian=lambda u: np.cosh(u)[..., None],
        entropy_flux=lambda u: np.zeros(u.shape[:-1]),
        domain_box=np.array([[-3.0, 3.0]]),
    )


def test_from_entropy_cosh_oracle():
    # independent oracle: bisection on the monotone map sinh
    lo, hi = 0.0, 3.0
    target = np.sinh(1.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.sinh(mid) < target:
            lo = mid
        else:
            hi = mid
    assert abs(0.5 * (lo + hi) - 1.0) < 1e-14
    assert target == pytest.approx(1.1752011936438014, abs=1e-15)

    emap = EntropyMap(_cosh_entropy_system())
    u = emap.from_entropy(np.array([1.1752011936438014]))
    assert abs(u[0] - 1.0) < 1e-12


def test_from_entropy_no_convergence():
    emap = EntropyMap(_cosh_entropy_system(), newton_max_iter=2)
    with pytest.raises(NoConvergence):
        emap.from_entropy(np.array([np.sinh(5.0)]))


def test_starred_quantities_cubic():
    emap = EntropyMap(builtin_model("scalar_cubic"))
    fs, Us, Fs = emap.starred_quantities(np.array([2.0]))
    assert fs == pytest.approx([8.0])
    assert Us == pytest.approx(2.0)
    assert Fs == pytest.approx(12.0)


def test_starred_quantities_burgers():
    emap = EntropyMap(builtin_model("scalar_burgers"))
    fs, Us, Fs = emap.starred_quantities(np.array([1.0]))
    assert fs == pytest.approx([0.5])
    assert Us == pytest.approx(0.5)
    assert Fs == pytest.approx(1.0 / 3.0)


def test_starred_quantities_origin():
    for name in MODELS:
        emap = EntropyMap(builtin_model(name))
        fs, Us, Fs = emap.starred_quantities(np.zeros(emap.system.N))
        assert np.all(fs == 0.0) and Us == 0.0 and Fs == 0.0


def test_polynomial_system_entropy_flux_is_exact():
    # f = u + u^3, U = u^2/2 + u^4/12 (convex on [-3, 3])
    s = polynomial_system([0, 1, 0, 1], [0, 0, 0.5, 0, 1.0 / 12.0])
    states = s.sample_states(50, np.random.default_rng(5))
    assert compatibility_residual(s, states) < 1e-7


def test_polynomial_system_rejects_nonconvex_entropy():
    with pytest.raises(ValueError, match="convex"):
        polynomial_system([0, 1], [0, 0, -0.5])


def test_polynomial_system_rejects_unnormalized():
    with pytest.raises(ValueError, match="f\\(0\\)"):
        polynomial_system([1.0, 1.0], [0, 0, 0.5])
    with pytest.raises(ValueError, match="U\\(0\\)"):
        polynomial_system([0, 1.0], [0.5, 0, 0.5])
