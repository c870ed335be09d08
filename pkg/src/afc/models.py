"""Hyperbolic systems, entropy pairs and admissible sets.

States are arrays of shape ``(n, m)``; fluxes have shape ``(n, m, d)``.
Entropy fluxes and potentials have shape ``(n, d)``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

__all__ = [
    "InadmissibleStateError",
    "FluxModel",
    "ScalarModel",
    "LinearAdvection",
    "KPP1D",
    "KPP2D",
    "ShallowWater1D",
    "Euler1D",
]


class InadmissibleStateError(ValueError):
    """Raised when a state leaves the admissible set of its model."""


def _as_states(u, m):
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u.reshape(-1, m) if m > 1 else u[:, None]
    return u


class FluxModel(ABC):
    """Hyperbolic system ``u_t + div f(u) = 0`` with a convex entropy pair."""

    m: int
    d: int
    component_names: tuple[str, ...]
    # indices of the momentum components, reflected at walls
    momentum: tuple[int, ...] = ()

    @abstractmethod
    def flux(self, u: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def max_wave_speed(self, ui: np.ndarray, uj: np.ndarray, n: np.ndarray) -> np.ndarray:
        """Upper bound for the spectral radius of f'(u).n between ui and uj."""

    @abstractmethod
    def entropy(self, u: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def entropy_flux(self, u: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def entropy_variables(self, u: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def entropy_hessian(self, u: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def admissible(self, u: np.ndarray) -> np.ndarray:
        """Exact per-state membership test for the admissible set."""

    def entropy_potential(self, u: np.ndarray) -> np.ndarray:
        u = _as_states(u, self.m)
        v = self.entropy_variables(u)
        return np.einsum("nk,nkd->nd", v, self.flux(u)) - self.entropy_flux(u)

    def entropy_hessian_apply(self, u_ref, a, b) -> np.ndarray:
        """Hessian-induced product a^T eta''(u_ref) b, one value per state."""
        hess = self.entropy_hessian(u_ref)
        a = _as_states(a, self.m)
        b = _as_states(b, self.m)
        return np.einsum("nk,nkl,nl->n", a, hess, b)

    def fd_metric(self, u: np.ndarray) -> np.ndarray:
        """Matrix of the scalar product used by the fully discrete fix.

        Systems approximate the unknown intermediate state by ``u_i``.
        """
        return self.entropy_hessian(u)

    def flux_jacobian(self, u: np.ndarray, n: np.ndarray) -> np.ndarray:
        """Directional Jacobian f'(u).n, shape (k, m, m)."""
        raise NotImplementedError

    def check_admissible(self, u: np.ndarray, where: str = "state") -> None:
        ok = self.admissible(u)
        if not np.all(ok):
            bad = np.flatnonzero(~np.asarray(ok))
            raise InadmissibleStateError(
                f"{type(self).__name__}: inadmissible {where} at index {bad[0]} "
                f"({bad.size} total): {np.asarray(u)[bad[0]]}")


class ScalarModel(FluxModel):
    """Scalar conservation law with the square entropy u^2/2.

    ``bounds`` is the invariant interval used as the admissible set.
    """

    m = 1
    component_names = ("u",)
    bounds: tuple[float, float] = (-math.inf, math.inf)
    # slack for rounding at the interval ends; the entropy is defined everywhere
    bound_tolerance: float = 1e-12

    def entropy(self, u):
        u = _as_states(u, 1)
        return 0.5 * u[:, 0] ** 2

    def entropy_variables(self, u):
        return _as_states(u, 1).copy()

    def entropy_hessian(self, u):
        u = _as_states(u, 1)
        return np.ones((u.shape[0], 1, 1))

    def hessian_bound(self) -> float:
        # eta'' = 1 everywhere for the square entropy
        return 1.0

    def fd_metric(self, u):
        u = _as_states(u, 1)
        return np.full((u.shape[0], 1, 1), self.hessian_bound())

    def admissible(self, u):
        u = _as_states(u, 1)[:, 0]
        lo, hi = self.bounds
        tol = self.bound_tolerance * max(1.0, abs(lo) if math.isfinite(lo) else 1.0,
                                         abs(hi) if math.isfinite(hi) else 1.0)
        return np.isfinite(u) & (u >= lo - tol) & (u <= hi + tol)


class LinearAdvection(ScalarModel):
    def __init__(self, velocity=1.0):
        self.velocity = np.atleast_1d(np.asarray(velocity, dtype=float))
        self.d = self.velocity.size

    def flux(self, u):
        u = _as_states(u, 1)
        return u[:, :, None] * self.velocity[None, None, :]

    def max_wave_speed(self, ui, uj, n):
        return np.abs(np.asarray(n, dtype=float) @ self.velocity)

    def entropy_flux(self, u):
        u = _as_states(u, 1)
        return 0.5 * u[:, :1] ** 2 * self.velocity[None, :]

    def flux_jacobian(self, u, n):
        u = _as_states(u, 1)
        return np.broadcast_to((np.asarray(n) @ self.velocity)[..., None, None],
                               (u.shape[0], 1, 1)).copy()


class KPP1D(ScalarModel):
    """Piecewise quadratic nonconvex flux with invariant interval [0, 1]."""

    d = 1

    def __init__(self, bounds=(0.0, 1.0)):
        self.bounds = tuple(bounds)

    @staticmethod
    def _f(u):
        return np.where(u <= 0.5, 0.25 * u * (1.0 - u), 0.5 * u * (u - 1.0) + 3.0 / 16.0)

    @staticmethod
    def derivative(u):
        u = np.asarray(u, dtype=float)
        return np.where(u <= 0.5, 0.25 - 0.5 * u, u - 0.5)

    def flux(self, u):
        u = _as_states(u, 1)
        return self._f(u)[:, :, None]

    def max_wave_speed(self, ui, uj, n):
        # |f'| is piecewise linear with its minimum at 1/2, so the maximum
        # over [min, max] is attained at an end point
        a = _as_states(ui, 1)[:, 0]
        b = _as_states(uj, 1)[:, 0]
        return np.maximum(np.abs(self.derivative(a)), np.abs(self.derivative(b)))

    def entropy_flux(self, u):
        u = _as_states(u, 1)[:, 0]
        q = np.where(u <= 0.5, u**2 / 8.0 - u**3 / 6.0,
                     u**3 / 3.0 - u**2 / 4.0 + 1.0 / 32.0)
        return q[:, None]

    def flux_jacobian(self, u, n):
        u = _as_states(u, 1)
        return (self.derivative(u[:, 0]) * np.asarray(n)[..., 0])[:, None, None]


class KPP2D(ScalarModel):
    """f(u) = (sin u, cos u); the wave speed is bounded by 1."""

    d = 2

    def __init__(self, bounds=(math.pi / 4.0, 3.5 * math.pi)):
        self.bounds = tuple(bounds)

    def flux(self, u):
        u = _as_states(u, 1)
        return np.stack([np.sin(u), np.cos(u)], axis=2)

    def max_wave_speed(self, ui, uj, n):
        return np.ones(np.asarray(n).shape[0])

    def entropy_flux(self, u):
        u = _as_states(u, 1)[:, 0]
        return np.stack([u * np.sin(u) + np.cos(u), u * np.cos(u) - np.sin(u)], axis=1)

    def entropy_potential(self, u):
        u = _as_states(u, 1)[:, 0]
        return np.stack([-np.cos(u), np.sin(u)], axis=1)

    def flux_jacobian(self, u, n):
        u = _as_states(u, 1)[:, 0]
        n = np.asarray(n, dtype=float)
        return (np.cos(u) * n[:, 0] - np.sin(u) * n[:, 1])[:, None, None]


class ShallowWater1D(FluxModel):
    """Shallow water equations over a flat bottom, u = (h, hv)."""

    m = 2
    d = 1
    component_names = ("h", "hv")
    momentum = (1,)

    def __init__(self, g=1.0):
        self.g = float(g)

    def admissible(self, u):
        u = _as_states(u, 2)
        return np.isfinite(u).all(axis=1) & (u[:, 0] > 0.0)

    def _split(self, u):
        u = _as_states(u, 2)
        self.check_admissible(u)
        h, hv = u[:, 0], u[:, 1]
        return h, hv / h

    def flux(self, u):
        h, v = self._split(u)
        return np.stack([h * v, h * v * v + 0.5 * self.g * h * h], axis=1)[:, :, None]

    def max_wave_speed(self, ui, uj, n):
        hi, vi = self._split(ui)
        hj, vj = self._split(uj)
        # two-point bound over the end states
        return np.maximum(np.abs(vi) + np.sqrt(self.g * hi), np.abs(vj) + np.sqrt(self.g * hj))

    def entropy(self, u):
        h, v = self._split(u)
        return 0.5 * (h * v * v + self.g * h * h)

    def entropy_flux(self, u):
        h, v = self._split(u)
        return (0.5 * h * v**3 + self.g * h * h * v)[:, None]

    def entropy_potential(self, u):
        h, v = self._split(u)
        return (0.5 * self.g * h * h * v)[:, None]

    def entropy_variables(self, u):
        h, v = self._split(u)
        return np.stack([self.g * h - 0.5 * v * v, v], axis=1)

    def entropy_hessian(self, u):
        h, v = self._split(u)
        hess = np.empty((h.size, 2, 2))
        hess[:, 0, 0] = self.g + v * v / h
        hess[:, 0, 1] = hess[:, 1, 0] = -v / h
        hess[:, 1, 1] = 1.0 / h
        return hess

    def flux_jacobian(self, u, n):
        h, v = self._split(u)
        n = np.asarray(n, dtype=float)[:, 0]
        jac = np.empty((h.size, 2, 2))
        jac[:, 0, 0] = 0.0
        jac[:, 0, 1] = 1.0
        jac[:, 1, 0] = self.g * h - v * v
        jac[:, 1, 1] = 2.0 * v
        return jac * n[:, None, None]


class Euler1D(FluxModel):
    """Euler equations of a polytropic ideal gas, u = (rho, rho v, rho E).

    The entropy is eta = rho s / (1 - gamma) with s = log(p rho^-gamma).
    """

    m = 3
    d = 1
    component_names = ("rho", "rho_v", "rho_E")
    momentum = (1,)

    def __init__(self, gamma=1.4):
        self.gamma = float(gamma)

    def pressure(self, u):
        u = _as_states(u, 3)
        return (self.gamma - 1.0) * (u[:, 2] - 0.5 * u[:, 1] ** 2 / u[:, 0])

    def admissible(self, u):
        u = _as_states(u, 3)
        with np.errstate(divide="ignore", invalid="ignore"):
            p = self.pressure(u)
        return np.isfinite(u).all(axis=1) & (u[:, 0] > 0.0) & (p > 0.0)

    def primitive(self, u):
        """(rho, v, p) of admissible conserved states."""
        u = _as_states(u, 3)
        self.check_admissible(u)
        rho = u[:, 0]
        return rho, u[:, 1] / rho, self.pressure(u)

    def conserved(self, rho, v, p):
        rho, v, p = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (rho, v, p)))
        return np.stack([rho, rho * v, p / (self.gamma - 1.0) + 0.5 * rho * v * v], axis=-1)

    def sound_speed(self, u):
        rho, _, p = self.primitive(u)
        return np.sqrt(self.gamma * p / rho)

    def flux(self, u):
        u = _as_states(u, 3)
        rho, v, p = self.primitive(u)
        return np.stack([rho * v, rho * v * v + p, (u[:, 2] + p) * v], axis=1)[:, :, None]

    def max_wave_speed(self, ui, uj, n):
        ri, vi, pi = self.primitive(ui)
        rj, vj, pj = self.primitive(uj)
        g = self.gamma
        return np.maximum(np.abs(vi) + np.sqrt(g * pi / ri), np.abs(vj) + np.sqrt(g * pj / rj))

    def specific_entropy(self, u):
        rho, _, p = self.primitive(u)
        return np.log(p) - self.gamma * np.log(rho)

    def entropy(self, u):
        u = _as_states(u, 3)
        return u[:, 0] * self.specific_entropy(u) / (1.0 - self.gamma)

    def entropy_flux(self, u):
        u = _as_states(u, 3)
        return (u[:, 1] * self.specific_entropy(u) / (1.0 - self.gamma))[:, None]

    def entropy_potential(self, u):
        return _as_states(u, 3)[:, 1:2].copy()

    def entropy_variables(self, u):
        rho, v, p = self.primitive(u)
        s = np.log(p) - self.gamma * np.log(rho)
        g = self.gamma
        return np.stack([(g - s) / (g - 1.0) - 0.5 * rho * v * v / p, rho * v / p, -rho / p],
                        axis=1)

    def entropy_hessian(self, u):
        # eta'' = (dv/dw) (du/dw)^-1 with primitive variables w = (rho, v, p)
        rho, v, p = self.primitive(u)
        g = self.gamma
        n = rho.size
        dvdw = np.empty((n, 3, 3))
        dvdw[:, 0, 0] = g / ((g - 1.0) * rho) - 0.5 * v * v / p
        dvdw[:, 0, 1] = -rho * v / p
        dvdw[:, 0, 2] = -1.0 / ((g - 1.0) * p) + 0.5 * rho * v * v / p**2
        dvdw[:, 1, 0] = v / p
        dvdw[:, 1, 1] = rho / p
        dvdw[:, 1, 2] = -rho * v / p**2
        dvdw[:, 2, 0] = -1.0 / p
        dvdw[:, 2, 1] = 0.0
        dvdw[:, 2, 2] = rho / p**2
        dudw = np.zeros((n, 3, 3))
        dudw[:, 0, 0] = 1.0
        dudw[:, 1, 0] = v
        dudw[:, 1, 1] = rho
        dudw[:, 2, 0] = 0.5 * v * v
        dudw[:, 2, 1] = rho * v
        dudw[:, 2, 2] = 1.0 / (g - 1.0)
        hess = np.linalg.solve(np.swapaxes(dudw, 1, 2), np.swapaxes(dvdw, 1, 2))
        hess = np.swapaxes(hess, 1, 2)
        return 0.5 * (hess + np.swapaxes(hess, 1, 2))

    def flux_jacobian(self, u, n):
        u = _as_states(u, 3)
        rho, v, p = self.primitive(u)
        g = self.gamma
        H = (u[:, 2] + p) / rho
        jac = np.zeros((rho.size, 3, 3))
        jac[:, 0, 1] = 1.0
        jac[:, 1, 0] = 0.5 * (g - 3.0) * v * v
        jac[:, 1, 1] = (3.0 - g) * v
        jac[:, 1, 2] = g - 1.0
        jac[:, 2, 0] = v * (0.5 * (g - 1.0) * v * v - H)
        jac[:, 2, 1] = H - (g - 1.0) * v * v
        jac[:, 2, 2] = g * v
        return jac * np.asarray(n, dtype=float)[:, 0][:, None, None]
