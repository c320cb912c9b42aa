"""Hyperbolic systems with convex entropy pairs and the entropy-variable map.

State arrays put the component index on the last axis: a field of states is
``(n, N)``, a single state is ``(N,)``.  All model callables broadcast over
leading axes; scalar products like the entropy drop the last axis.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

P = np.polynomial.polynomial

QUADRATIC_ENTROPY_POLY = np.array([0.0, 0.0, 0.5])


class UnknownModel(ValueError):
    pass


class NoConvergence(RuntimeError):
    """Newton inversion of the entropy gradient failed to converge."""


@dataclass(frozen=True)
class HyperbolicSystem:
    """A 1-D system of conservation laws with a convex entropy pair.

    ``flux`` maps ``(..., N) -> (..., N)``, ``flux_jacobian`` to
    ``(..., N, N)``, ``entropy``/``entropy_flux`` to ``(...)``,
    ``entropy_gradient`` to ``(..., N)`` and ``entropy_hessian`` to
    ``(..., N, N)``.  ``domain_box`` is an ``(N, 2)`` array of per-component
    bounds used by all sampling-based checks.  ``flux_poly``/``entropy_poly``
    carry low-to-high polynomial coefficients for scalar models and enable
    the fused solver kernels.
    """

    name: str
    N: int
    flux: Callable
    flux_jacobian: Callable
    entropy: Callable
    entropy_gradient: Callable
    entropy_hessian: Callable
    entropy_flux: Callable
    domain_box: np.ndarray
    flux_poly: Optional[np.ndarray] = None
    entropy_poly: Optional[np.ndarray] = None

    @property
    def has_quadratic_entropy(self) -> bool:
        return self.entropy_poly is not None and \
            self.entropy_poly.shape == (3,) and \
            np.array_equal(self.entropy_poly, QUADRATIC_ENTROPY_POLY)

    def sample_states(self, n, rng):
        lo, hi = self.domain_box[:, 0], self.domain_box[:, 1]
        return lo + (hi - lo) * rng.random((n, self.N))


@dataclass(frozen=True)
class EntropyMap:
    """The change of variables v = grad U(u) and its Newton-based inverse."""

    system: HyperbolicSystem
    newton_tol: float = 1e-13
    newton_max_iter: int = 50

    def to_entropy(self, u):
        return self.system.entropy_gradient(np.asarray(u, dtype=float))

    def from_entropy(self, v):
        """Invert grad U by damped Newton iteration (Hessian is SPD)."""
        v = np.asarray(v, dtype=float)
        u = v.copy()  # exact for quadratic entropies, a sane start otherwise
        scale = 1.0 + np.linalg.norm(np.atleast_2d(v), axis=-1).reshape(v.shape[:-1])
        sys_ = self.system
        for _ in range(self.newton_max_iter):
            r = sys_.entropy_gradient(u) - v
            rnorm = np.linalg.norm(np.atleast_2d(r), axis=-1).reshape(v.shape[:-1])
            if np.all(rnorm <= self.newton_tol * scale):
                return u
            delta = np.linalg.solve(sys_.entropy_hessian(u), r[..., None])[..., 0]
            step = np.ones_like(rnorm)
            for _ in range(40):
                u_try = u - step[..., None] * delta
                r_try = sys_.entropy_gradient(u_try) - v
                rnorm_try = np.linalg.norm(
                    np.atleast_2d(r_try), axis=-1).reshape(v.shape[:-1])
                worse = (rnorm_try > rnorm) & (rnorm > self.newton_tol * scale)
                if not np.any(worse):
                    break
                step = np.where(worse, 0.5 * step, step)
            u = u - step[..., None] * delta
        r = sys_.entropy_gradient(u) - v
        rnorm = np.linalg.norm(np.atleast_2d(r), axis=-1).reshape(v.shape[:-1])
        if np.all(rnorm <= self.newton_tol * scale):
            return u
        raise NoConvergence(
            f"entropy-gradient inversion stalled (max residual {rnorm.max():.3e})"
        )

    def starred_quantities(self, v):
        """f*(v), U*(v), F*(v): flux, entropy and entropy flux at u*(v)."""
        u = self.from_entropy(v)
        sys_ = self.system
        return sys_.flux(u), sys_.entropy(u), sys_.entropy_flux(u)


def _default_box(N):
    return np.array([[-3.0, 3.0]] * N)


def _scalar_system(name, fpoly, upoly, domain_box=None):
    fpoly = np.asarray(fpoly, dtype=float)
    upoly = np.asarray(upoly, dtype=float)
    dfpoly = P.polyder(fpoly)
    dupoly = P.polyder(upoly)
    ddupoly = P.polyder(dupoly)
    # entropy flux from F' = U' f', F(0) = 0 (exact polynomial integration)
    Fpoly = P.polyint(P.polymul(dupoly, dfpoly))

    def flux(u):
        return P.polyval(u[..., 0], fpoly)[..., None]

    def flux_jacobian(u):
        return P.polyval(u[..., 0], dfpoly)[..., None, None]

    def entropy(u):
        return P.polyval(u[..., 0], upoly)

    def entropy_gradient(u):
        return P.polyval(u[..., 0], dupoly)[..., None]

    def entropy_hessian(u):
        return P.polyval(u[..., 0], ddupoly)[..., None, None]

    def entropy_flux(u):
        return P.polyval(u[..., 0], Fpoly)

    return HyperbolicSystem(
        name=name, N=1, flux=flux, flux_jacobian=flux_jacobian,
        entropy=entropy, entropy_gradient=entropy_gradient,
        entropy_hessian=entropy_hessian, entropy_flux=entropy_flux,
        domain_box=_default_box(1) if domain_box is None else np.asarray(domain_box, float),
        flux_poly=fpoly, entropy_poly=upoly,
    )


def _elasticity_system():
    # state (w, s), stress sigma(w) = w + w^3, energy W(w) = w^2/2 + w^4/4
    def sigma(w):
        return w + w**3

    def flux(u):
        w, s = u[..., 0], u[..., 1]
        return np.stack([-s, -sigma(w)], axis=-1)

    def flux_jacobian(u):
        w = u[..., 0]
        z = np.zeros_like(w)
        row0 = np.stack([z, -np.ones_like(w)], axis=-1)
        row1 = np.stack([-(1.0 + 3.0 * w**2), z], axis=-1)
        return np.stack([row0, row1], axis=-2)

    def entropy(u):
        w, s = u[..., 0], u[..., 1]
        return 0.5 * s**2 + 0.5 * w**2 + 0.25 * w**4

    def entropy_gradient(u):
        w, s = u[..., 0], u[..., 1]
        return np.stack([sigma(w), s], axis=-1)

    def entropy_hessian(u):
        w = u[..., 0]
        z = np.zeros_like(w)
        one = np.ones_like(w)
        row0 = np.stack([1.0 + 3.0 * w**2, z], axis=-1)
        row1 = np.stack([z, one], axis=-1)
        return np.stack([row0, row1], axis=-2)

    def entropy_flux(u):
        w, s = u[..., 0], u[..., 1]
        return -s * sigma(w)

    return HyperbolicSystem(
        name="elasticity_p_system", N=2, flux=flux, flux_jacobian=flux_jacobian,
        entropy=entropy, entropy_gradient=entropy_gradient,
        entropy_hessian=entropy_hessian, entropy_flux=entropy_flux,
        domain_box=_default_box(2),
    )


_BUILTINS = {
    "scalar_cubic": lambda: _scalar_system(
        "scalar_cubic", [0.0, 0.0, 0.0, 1.0], QUADRATIC_ENTROPY_POLY),
    "scalar_burgers": lambda: _scalar_system(
        "scalar_burgers", [0.0, 0.0, 0.5], QUADRATIC_ENTROPY_POLY),
    "elasticity_p_system": _elasticity_system,
}


def builtin_model(name) -> HyperbolicSystem:
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise UnknownModel(
            f"unknown model {name!r}; available: {sorted(_BUILTINS)}"
        ) from None
    return factory()


def polynomial_system(flux_poly, entropy_poly, domain_box=None,
                      name="polynomial", n_convexity_samples=200) -> HyperbolicSystem:
    """Scalar model from polynomial coefficient tables (low to high degree).

    Requires f(0) = 0 and U(0) = 0 and a strictly convex entropy on the
    domain box; the entropy flux is synthesized exactly from F' = U' f'.
    """
    flux_poly = np.asarray(flux_poly, dtype=float)
    entropy_poly = np.asarray(entropy_poly, dtype=float)
    if flux_poly.size and flux_poly[0] != 0.0:
        raise ValueError("flux polynomial must satisfy f(0) = 0")
    if entropy_poly.size and entropy_poly[0] != 0.0:
        raise ValueError("entropy polynomial must satisfy U(0) = 0")
    system = _scalar_system(name, flux_poly, entropy_poly, domain_box)
    lo, hi = system.domain_box[0]
    samples = np.linspace(lo, hi, n_convexity_samples)
    hess = P.polyval(samples, P.polyder(entropy_poly, 2))
    if np.min(hess) <= 0.0:
        raise ValueError(
            f"entropy polynomial is not convex on [{lo}, {hi}]: "
            f"U''({samples[np.argmin(hess)]:.4g}) = {np.min(hess):.4g}"
        )
    return system


def _fd_gradient(fn, u, scale=1e-4):
    """4th-order central difference gradient of fn: (..., N) -> (...)."""
    u = np.asarray(u, dtype=float)
    N = u.shape[-1]
    out = np.empty(u.shape)
    for j in range(N):
        h = scale * (1.0 + np.abs(u[..., j]))
        e = np.zeros(N)
        e[j] = 1.0
        up2 = u + 2 * h[..., None] * e
        up1 = u + h[..., None] * e
        um1 = u - h[..., None] * e
        um2 = u - 2 * h[..., None] * e
        out[..., j] = (-fn(up2) + 8 * fn(up1) - 8 * fn(um1) + fn(um2)) / (12 * h)
    return out


def compatibility_residual(system, states, scale=1e-4):
    """Max-norm residual of grad F = grad U^T Df, both sides by 4th-order FD.

    Checks the defining entropy-pair compatibility at the given states.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    gradU = system.entropy_gradient(states)
    dF = _fd_gradient(system.entropy_flux, states, scale)
    residual = 0.0
    for j in range(system.N):
        # Df[:, a, j] = d f_a / d u_j via FD of each flux component
        rhs = np.zeros_like(dF[..., j])
        for a in range(system.N):
            Df_aj = _fd_gradient(lambda u, aa=a: system.flux(u)[..., aa],
                                 states, scale)[..., j]
            rhs += gradU[..., a] * Df_aj
        residual = max(residual, float(np.max(np.abs(dF[..., j] - rhs))))
    return residual


def hessian_min_eigenvalue(system, states):
    states = np.atleast_2d(np.asarray(states, dtype=float))
    return float(np.min(np.linalg.eigvalsh(system.entropy_hessian(states))))
