import numpy as np
import pytest

from auglab import kernels
from auglab.backend import USE_NUMBA


def _order_study(fn, exact, ns, **kw):
    errs = []
    for n in ns:
        x = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        dx = x[1] - x[0]
        errs.append(np.max(np.abs(fn(np.sin(x), dx, **kw) - exact(x))))
    return [np.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]


@pytest.mark.parametrize("deriv,exact", [
    (1, np.cos), (2, lambda x: -np.sin(x)), (3, lambda x: -np.cos(x))])
@pytest.mark.parametrize("order", [2, 4])
def test_periodic_stencil_orders(deriv, exact, order):
    rates = _order_study(kernels.diff_numpy, exact, [64, 128, 256],
                         deriv=deriv, order=order, periodic=True)
    assert min(rates) > order - 0.3


@pytest.mark.parametrize("deriv", [1, 2, 3])
@pytest.mark.parametrize("order", [2, 4])
def test_clamped_interior_accuracy(deriv, order):
    n = 256
    x = np.linspace(0.0, 1.0, n)
    dx = x[1] - x[0]
    a = np.tanh(4 * (x - 0.5))
    out = kernels.diff_numpy(a, dx, deriv, order, periodic=False)
    exact = {1: lambda: 4 / np.cosh(4 * (x - 0.5))**2}.get(deriv)
    if exact is not None:
        interior = slice(4, -4)
        assert np.max(np.abs(out[interior] - exact()[interior])) < 1e-2


def test_llf_divergence_telescopes_periodic():
    rng = np.random.default_rng(0)
    u = rng.normal(size=128)
    f = u**3
    alpha = 3 * u**2
    for order in (2, 4):
        div = kernels.llf_divergence_numpy(f, u, alpha, 0.01, True, order)
        assert abs(np.sum(div)) < 1e-11


def test_llf_divergence_zero_on_constants():
    u = np.full(64, 0.7)
    f = np.full(64, 0.2)
    alpha = np.ones(64)
    for periodic in (True, False):
        for order in (2, 4):
            div = kernels.llf_divergence_numpy(f, u, alpha, 0.1, periodic, order)
            assert np.max(np.abs(div)) < 1e-15


def test_rhs_scalar_linear_matches_composition():
    x = np.linspace(0, 1, 200, endpoint=False)
    u = 0.4 * np.sin(2 * np.pi * x) + 0.1
    fpoly = np.array([0.0, 0.0, 0.0, 1.0])
    dfpoly = np.array([0.0, 0.0, 3.0])
    vpoly = np.array([0.0, 1.0])
    got = kernels.rhs_scalar_linear_numpy(u, x[1] - x[0], 0.05, 1.0, 0.5,
                                          fpoly, dfpoly, vpoly, True, 2)
    f = u**3
    alpha = np.abs(3 * u**2)
    want = -kernels.llf_divergence_numpy(f, u, alpha, x[1] - x[0], True, 2)
    sv = 0.05 * kernels.diff_numpy(u, x[1] - x[0], 1, 2, True) \
        + 0.5 * 0.05**2 * kernels.diff_numpy(u, x[1] - x[0], 2, 2, True)
    want += kernels.diff_numpy(sv, x[1] - x[0], 1, 2, True)
    assert np.max(np.abs(got - want)) < 1e-14


@pytest.mark.skipif(not USE_NUMBA, reason="numba backend disabled")
class TestNumbaAgreement:
    def test_diff(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=200)
        for deriv in (1, 2, 3):
            for order in (2, 4):
                for periodic in (True, False):
                    got = kernels.diff_numba(a, 0.02, deriv, order, periodic)
                    want = kernels.diff_numpy(a, 0.02, deriv, order, periodic)
                    assert np.array_equal(got, want)

    def test_llf(self):
        rng = np.random.default_rng(2)
        u = rng.normal(size=150)
        f = 0.5 * u**2
        alpha = np.abs(u)
        for periodic in (True, False):
            for order in (2, 4):
                got = kernels.llf_divergence_numba(f, u, alpha, 0.01,
                                                   periodic, order)
                want = kernels.llf_divergence_numpy(f, u, alpha, 0.01,
                                                    periodic, order)
                assert np.max(np.abs(got - want)) < 1e-13

    def test_fused_rhs(self):
        rng = np.random.default_rng(3)
        u = rng.normal(size=120) * 0.5
        fpoly = np.array([0.0, 0.0, 0.0, 1.0])
        dfpoly = np.array([0.0, 0.0, 3.0])
        vpoly = np.array([0.0, 1.0])
        for order in (2, 4):
            got = kernels.rhs_scalar_linear_numba(
                u, 0.005, 0.04, 1.0, 2.0, fpoly, dfpoly, vpoly, True, order)
            want = kernels.rhs_scalar_linear_numpy(
                u, 0.005, 0.04, 1.0, 2.0, fpoly, dfpoly, vpoly, True, order)
            assert np.max(np.abs(got - want)) < 1e-12
