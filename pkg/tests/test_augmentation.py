import numpy as np
import pytest
from scipy.integrate import dblquad

from auglab.augmentation import (LinearConstant, NonlinearMatrix, PointJet,
                                 ScalarFactored, ScalarGeneral,
                                 VariantMismatch, dissipation,
                                 entropy_flux_corrections, eval_S, sbar2,
                                 sbar2_of)


def random_jet(rng, N=1, scale=1.0):
    return PointJet.of(*(scale * rng.normal(size=(3, N))))


# ---------------------------------------------------------------------------
# eval_S


def test_linear_constant_scalar_value():
    spec = LinearConstant([[1.0]], [[1.0]], eps=0.1)
    jet = PointJet.scalar(0.3, 0.1, -0.2)
    assert eval_S(spec, jet) == pytest.approx([-0.1])


@pytest.mark.parametrize("make", [
    lambda: LinearConstant([[1.0, 0.2], [0.0, 2.0]], [[1.0, 0.3], [0.3, 1.0]], 0.1),
    lambda: NonlinearMatrix.from_expressions(
        [["1 + v1^2", "v1*v2"], ["0", "2"]], ["v1 + v2^2", "v2"],
        [[1.0, 0.2], [0.2, 1.0]], 0.1),
    lambda: ScalarFactored.from_expressions("1 + u^2", "u", "u", 0.1),
    lambda: ScalarGeneral.from_expressions("u*v + v^3", "u + v^2", 0.1),
])
def test_vanishes_on_constants(make):
    spec = make()
    rng = np.random.default_rng(42)
    for _ in range(100):
        v = rng.uniform(-2, 2, size=spec.N)
        jet = PointJet.of(v, np.zeros(spec.N), np.zeros(spec.N))
        assert np.max(np.abs(eval_S(spec, jet))) == 0.0
        fd, fp = entropy_flux_corrections(spec, jet)
        assert fd == pytest.approx(0.0) and fp == pytest.approx(0.0)
        assert dissipation(spec, jet) == pytest.approx(0.0)


def test_nonlinear_reduces_to_linear_when_h_is_identity():
    K = np.array([[1.0, 0.4], [0.4, 2.0]])
    B = np.array([[1.0, 0.5], [0.2, 1.5]])
    lin = LinearConstant(B, K, eps=0.2)
    nl = NonlinearMatrix.from_expressions(
        [["1", "0.5"], ["0.2", "1.5"]], ["v1", "v2"], K, eps=0.2)
    rng = np.random.default_rng(0)
    for _ in range(100):
        jet = random_jet(rng, N=2)
        assert np.allclose(eval_S(nl, jet), eval_S(lin, jet), atol=1e-14)
        assert np.allclose(dissipation(nl, jet), dissipation(lin, jet),
                           atol=1e-14)
        a = entropy_flux_corrections(nl, jet)
        b = entropy_flux_corrections(lin, jet)
        assert np.allclose(a, b, atol=1e-14)


def test_variant_mismatch_on_wrong_jet_size():
    spec = LinearConstant([[1.0]], [[1.0]], eps=0.1)
    jet = PointJet.of([0.1, 0.2], [0.0, 0.0], [0.0, 0.0])
    with pytest.raises(VariantMismatch):
        eval_S(spec, jet)


# ---------------------------------------------------------------------------
# dissipation


def test_linear_dissipation_value_and_dispersion_independence():
    # v_x = 2 at eps = 0.01: D = -eps * v_x^2, K must not contribute
    jet = PointJet.scalar(0.5, 0.01 * 2.0, 0.37)
    for K in (0.0, 7.0, -40.0):
        spec = LinearConstant([[1.0]], [[K]], eps=0.01)
        assert dissipation(spec, jet) == pytest.approx(-0.04)


def test_antisymmetric_diffusion_dissipates_nothing():
    spec = LinearConstant([[0.0, 1.0], [-1.0, 0.0]],
                          np.zeros((2, 2)), eps=0.3)
    rng = np.random.default_rng(1)
    for _ in range(50):
        assert dissipation(spec, random_jet(rng, N=2)) == pytest.approx(0.0)


def test_scalar_general_dissipation_u_independent():
    # S1 = v, S2 = v: d1 Sbar2 = 0, so D = -eps u_x^2
    spec = ScalarGeneral.from_expressions("v", "v", eps=0.2)
    u_x = 1.5
    jet = PointJet.scalar(0.7, 0.2 * u_x, 0.9)
    assert dissipation(spec, jet) == pytest.approx(-0.2 * u_x**2)


def test_dissipation_nonpositive_for_psd_diffusion():
    rng = np.random.default_rng(9)
    A = rng.normal(size=(2, 2))
    spec = LinearConstant(A.T @ A, rng.normal(size=(2, 2)), eps=0.15)
    jets = PointJet.of(rng.normal(size=(10000, 2)),
                       rng.normal(size=(10000, 2)),
                       rng.normal(size=(10000, 2)))
    assert np.max(dissipation(spec, jets)) <= 1e-12


def test_monomial_class_dissipation_sign():
    # S1 = b1(u) v^(2p+1), S2 = b2(u) v^(2q+1) with b1 >= 0, b2' <= 0
    spec = ScalarGeneral.from_expressions("(1 + u^2)*v^3", "(2 - u)*v", 0.1)
    rng = np.random.default_rng(5)
    u = rng.uniform(-2, 2, size=10000)
    du = rng.uniform(-1, 1, size=10000)
    jets = PointJet.scalar(u, du, rng.normal(size=10000))
    assert np.max(dissipation(spec, jets)) <= 1e-12


# ---------------------------------------------------------------------------
# entropy-flux corrections


def test_linear_fdiff_value():
    spec = LinearConstant([[1.0]], [[1.0]], eps=0.1)
    jet = PointJet.scalar(2.0, 0.1 * 3.0, 0.0)
    fdiff, _ = entropy_flux_corrections(spec, jet)
    assert fdiff == pytest.approx(-0.6)


def test_linear_fdisp_hand_expansion():
    # (eps^2/2)(3 v_x^2 K - (v^2 K)_xx) = (eps^2 K / 2)(v_x^2 - 2 v v_xx)
    spec = LinearConstant([[0.0]], [[1.0]], eps=1.0)
    jet = PointJet.scalar(1.0, 1.0, 1.0)
    _, fdisp = entropy_flux_corrections(spec, jet)
    assert fdisp == pytest.approx(-0.5)


# ---------------------------------------------------------------------------
# factored / general scalar equivalence


def test_factored_equals_its_general_reduction():
    sf = ScalarFactored.from_expressions("1 + u^2", "2*u^2 + 1", "u^2 + 0.5",
                                         eps=0.05)
    sg = sf.reduction
    rng = np.random.default_rng(3)
    for _ in range(100):
        jet = random_jet(rng)
        assert np.allclose(eval_S(sf, jet), eval_S(sg, jet), atol=1e-12)
        assert np.allclose(dissipation(sf, jet), dissipation(sg, jet),
                           atol=1e-12)
        assert np.allclose(entropy_flux_corrections(sf, jet),
                           entropy_flux_corrections(sg, jet), atol=1e-12)


def test_factored_proportional_pair_dissipates_like_pure_diffusion():
    # k1 = c k2 cancels all dispersive dissipation: D = -eps B(u) u_x^2
    sf = ScalarFactored.from_expressions("1 + u^2", "2*u^2", "u^2", eps=0.05)
    jet = PointJet.scalar(0.5, 0.1, 0.0)
    expected = -(1 + 0.25) * (0.1 / 0.05) ** 2 * 0.05
    assert dissipation(sf, jet) == pytest.approx(expected)


# ---------------------------------------------------------------------------
# the averaged dispersion coefficient


def test_sbar2_constant_integrand():
    spec = ScalarGeneral.from_expressions("v", "3.7", eps=0.1)
    assert sbar2(spec, 0.4, -1.2) == pytest.approx(1.85, abs=1e-14)


def test_sbar2_linear_in_u():
    spec = ScalarGeneral.from_expressions("v", "u", eps=0.1)
    assert sbar2(spec, 0.8, 0.5) == pytest.approx(0.4, abs=1e-13)
    assert spec.d1_sbar2(0.8, 0.5) == pytest.approx(0.5, abs=1e-12)


def test_sbar2_quadratic_frozen_value():
    # S2 = v^2 at (u, v) = (0, 1): exact value 1/4 (hand integration)
    spec = ScalarGeneral.from_expressions("v", "v^2", eps=0.1)
    assert sbar2(spec, 0.0, 1.0) == pytest.approx(0.25, abs=1e-13)


def test_sbar2_matches_adaptive_quadrature():
    rng = np.random.default_rng(17)
    cases = [
        lambda u, v: np.exp(u * v),
        lambda u, v: np.sin(u + v),
        lambda u, v: 1.0 / (2.0 + u**2 + v**2),
    ]
    for S2 in cases:
        for _ in range(5):
            u0, v0 = rng.uniform(-2, 2, size=2)
            got = sbar2_of(S2, u0, v0, quad_n=24)
            want, err = dblquad(
                lambda s, m: S2(u0, v0 * (1 + m * (s - 1))) * (1 - s),
                0.0, 1.0, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
            assert abs(got - want) < 1e-10


def test_d1_sbar2_fd_fallback_matches_analytic():
    analytic = ScalarGeneral.from_expressions("v", "u^2*v + exp(u)", eps=0.1)
    plain = ScalarGeneral(S1=lambda u, v: v,
                          S2=lambda u, v: u**2 * v + np.exp(u), eps=0.1)
    rng = np.random.default_rng(23)
    for _ in range(20):
        u0, v0 = rng.uniform(-1.5, 1.5, size=2)
        assert plain.d1_sbar2(u0, v0) == pytest.approx(
            analytic.d1_sbar2(u0, v0), abs=1e-9)


def test_sbar2_requires_scalar_general():
    with pytest.raises(VariantMismatch):
        sbar2(LinearConstant([[1.0]], [[1.0]], 0.1), 0.0, 1.0)


def test_sbar2_rejects_tiny_rule():
    spec = ScalarGeneral.from_expressions("v", "v", eps=0.1)
    with pytest.raises(ValueError):
        spec.sbar2(0.0, 1.0, quad_n=1)


# ---------------------------------------------------------------------------
# K(v) and L(v)


def test_K_and_L_identity_map():
    H = np.array([[2.0, 0.5], [0.5, 1.0]])
    nm = NonlinearMatrix.from_expressions(
        [["0", "0"], ["0", "0"]], ["v1", "v2"], H, eps=0.1)
    v = np.array([0.3, -0.2])
    assert np.allclose(nm.K_of_v(v), H)
    assert np.allclose(nm.L_of_v(v), 1.5 * H)


def test_K_and_L_quadratic_scalar_map():
    nm = NonlinearMatrix.from_expressions([["0"]], ["v^2"], [[1.0]], eps=0.1)
    v = np.array([2.0])
    assert nm.K_of_v(v)[0, 0] == pytest.approx(16.0)   # (2v)^2
    assert nm.L_of_v(v)[0, 0] == pytest.approx(32.0)   # 6v^2 + 4v at v=2


def test_K_symmetric_for_symmetric_H():
    rng = np.random.default_rng(8)
    H = rng.normal(size=(2, 2))
    H = H + H.T
    nm = NonlinearMatrix.from_expressions(
        [["0", "0"], ["0", "0"]],
        ["v1 + 0.3*v2^2", "v2 - 0.1*v1^3"], H, eps=0.1)
    for _ in range(20):
        K = nm.K_of_v(rng.normal(size=2))
        assert np.max(np.abs(K - K.T)) < 1e-14
