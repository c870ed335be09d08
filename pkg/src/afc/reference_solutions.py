"""Exact and surrogate reference solutions used for error measurement."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "ReferenceSolution",
    "kpp_rp1",
    "kpp_rp2",
    "solve_cm",
    "dam_break",
    "VacuumError",
    "euler_star_state",
    "euler_riemann",
    "left_rarefaction_span",
    "fine_grid_reference",
]

SQRT6 = math.sqrt(6.0)
SQRT3 = math.sqrt(3.0)


@dataclass
class ReferenceSolution:
    """``evaluate(x, t)`` returns conserved states of shape (len(x), m)."""

    evaluate: Callable[[np.ndarray, float], np.ndarray]
    provenance: str

    def __call__(self, x, t):
        return self.evaluate(x, t)


def _check_t(t):
    if not t > 0.0:
        raise ValueError("reference solutions need t > 0")


def kpp_rp1(x, t):
    """Entropy solution of the 1D KPP problem with u0 = 0 left, 1 right of x = 1/4."""
    _check_t(t)
    x = np.asarray(x, dtype=float)
    left = (1.0 + (SQRT6 - 2.0) * t) / 4.0
    right = (1.0 + 2.0 * t) / 4.0
    return np.where(x < left, 0.0, np.where(x < right, 0.5 + (x - 0.25) / t, 1.0))


def kpp_rp2(x, t):
    """Entropy solution with u0 = 1 left, 0 right of x = 1/4: shock into a fan down to 0."""
    _check_t(t)
    x = np.asarray(x, dtype=float)
    left = (1.0 + (SQRT3 - 1.0) * t) / 4.0
    # the fan reaches u = 0 where f'(0) = 1/4, i.e. at x = (1 + t)/4
    right = (1.0 + t) / 4.0
    return np.where(x < left, 1.0, np.where(x < right, 0.5 - 2.0 * (x - 0.25) / t, 0.0))


def _cm_residual(c, h_l, h_r, g):
    a = math.sqrt(g * h_l)
    return -8.0 * g * h_r * c * c * (a - c) ** 2 + (c * c - g * h_r) ** 2 * (c * c + g * h_r)


def solve_cm(h_l=1.0, h_r=0.1, g=1.0, tol=1e-12) -> float:
    """Middle-state celerity of the wet dam break, by bisection on the polynomial residual."""
    lo, hi = math.sqrt(g * h_r), math.sqrt(g * h_l)
    f_lo, f_hi = _cm_residual(lo, h_l, h_r, g), _cm_residual(hi, h_l, h_r, g)
    if not (h_l > h_r > 0.0) or f_lo * f_hi > 0.0:
        raise ValueError("dam-break bisection bracket does not contain a root")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        f_mid = _cm_residual(mid, h_l, h_r, g)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def dam_break(x, t, h_l=1.0, h_r=0.1, g=1.0, x0=0.0, cm=None):
    """Stoker solution (h, hv) of the wet dam break with the dam at ``x0``."""
    _check_t(t)
    if cm is None:
        cm = solve_cm(h_l, h_r, g)
    xi = (np.asarray(x, dtype=float) - x0) / t
    a = math.sqrt(g * h_l)
    x_a = -a
    x_b = 2.0 * a - 3.0 * cm
    x_c = 2.0 * cm * cm * (a - cm) / (cm * cm - g * h_r)
    h = np.empty_like(xi)
    v = np.zeros_like(xi)
    r1 = xi <= x_a
    r2 = (xi > x_a) & (xi <= x_b)
    r3 = (xi > x_b) & (xi <= x_c)
    r4 = xi > x_c
    h[r1] = h_l
    h[r2] = 4.0 / (9.0 * g) * (a - 0.5 * xi[r2]) ** 2
    v[r2] = 2.0 / 3.0 * (xi[r2] + a)
    h[r3] = cm * cm / g
    v[r3] = 2.0 * (a - cm)
    h[r4] = h_r
    return np.stack([h, h * v], axis=1)


# ---------------------------------------------------------------- Euler


class VacuumError(ValueError):
    pass


def _pressure_function(p, rho, pk, gamma):
    c = math.sqrt(gamma * pk / rho)
    if p > pk:
        A = 2.0 / ((gamma + 1.0) * rho)
        B = (gamma - 1.0) / (gamma + 1.0) * pk
        return (p - pk) * math.sqrt(A / (p + B))
    return 2.0 * c / (gamma - 1.0) * ((p / pk) ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)


def euler_star_state(left, right, gamma=1.4, rtol=1e-12):
    """Star pressure and velocity of the Riemann problem with primitive data (rho, v, p)."""
    rl, vl, pl = map(float, left)
    rr, vr, pr = map(float, right)
    if min(rl, rr, pl, pr) <= 0.0:
        raise ValueError("Riemann data must have positive density and pressure")
    cl, cr = math.sqrt(gamma * pl / rl), math.sqrt(gamma * pr / rr)
    if 2.0 * (cl + cr) / (gamma - 1.0) <= vr - vl:
        raise VacuumError("initial data generate vacuum")

    def phi(p):
        return _pressure_function(p, rl, pl, gamma) + _pressure_function(p, rr, pr, gamma) + vr - vl

    lo = 1e-14 * min(pl, pr)
    hi = max(pl, pr)
    while phi(hi) < 0.0:
        hi *= 2.0
    if phi(lo) > 0.0:
        raise VacuumError("star pressure below the resolvable range")
    p_star = brentq(phi, lo, hi, xtol=1e-300, rtol=rtol, maxiter=500)
    v_star = 0.5 * (vl + vr) + 0.5 * (_pressure_function(p_star, rr, pr, gamma)
                                      - _pressure_function(p_star, rl, pl, gamma))
    return p_star, v_star


def _sample(xi, left, right, p_star, v_star, gamma):
    """Primitive state at similarity coordinate ``xi`` (scalar)."""
    g = gamma
    if xi <= v_star:
        rho, v, p, sign = left[0], left[1], left[2], 1.0
    else:
        rho, v, p, sign = right[0], right[1], right[2], -1.0
    # mirror the right side onto the left-wave formulas
    xs, vs, vstar = sign * xi, sign * v, sign * v_star
    c = math.sqrt(g * p / rho)
    if p_star > p:
        ratio = p_star / p
        s = vs - c * math.sqrt((g + 1.0) / (2.0 * g) * ratio + (g - 1.0) / (2.0 * g))
        if xs <= s:
            return rho, v, p
        rho_s = rho * (ratio + (g - 1.0) / (g + 1.0)) / ((g - 1.0) / (g + 1.0) * ratio + 1.0)
        return rho_s, v_star, p_star
    c_star = c * (p_star / p) ** ((g - 1.0) / (2.0 * g))
    head, tail = vs - c, vstar - c_star
    if xs <= head:
        return rho, v, p
    if xs >= tail:
        return rho * (p_star / p) ** (1.0 / g), v_star, p_star
    cf = 2.0 / (g + 1.0) * (c + 0.5 * (g - 1.0) * (vs - xs))
    vf = 2.0 / (g + 1.0) * (c + 0.5 * (g - 1.0) * vs + xs)
    rho_f = rho * (cf / c) ** (2.0 / (g - 1.0))
    return rho_f, sign * vf, p * (cf / c) ** (2.0 * g / (g - 1.0))


def euler_riemann(left, right, gamma=1.4, xi=0.0):
    """Exact Riemann solution in conserved variables at similarity coordinates ``xi = x/t``.

    ``left`` and ``right`` are primitive (rho, v, p) triples.
    """
    left = tuple(map(float, left))
    right = tuple(map(float, right))
    p_star, v_star = euler_star_state(left, right, gamma)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty((xi.size, 3))
    for k, s in enumerate(xi):
        rho, v, p = _sample(s, left, right, p_star, v_star, gamma)
        out[k] = (rho, rho * v, p / (gamma - 1.0) + 0.5 * rho * v * v)
    return out


def left_rarefaction_span(left, right, gamma=1.4):
    """Head and tail speeds of the left-running rarefaction, or None if the left wave is a shock."""
    rl, vl, pl = map(float, left)
    p_star, v_star = euler_star_state(left, right, gamma)
    if p_star > pl:
        return None
    cl = math.sqrt(gamma * pl / rl)
    c_star = cl * (p_star / pl) ** ((gamma - 1.0) / (2.0 * gamma))
    return vl - cl, v_star - c_star


def fine_grid_reference(coords: np.ndarray, values: np.ndarray, provenance="fine-grid") -> ReferenceSolution:
    """Piecewise-linear interpolant of a stored fine-grid solution (1D).

    The time argument is ignored: the reference is a snapshot.
    """
    x = np.asarray(coords, dtype=float).reshape(-1)
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    order = np.argsort(x)
    x, vals = x[order], vals[order]

    def evaluate(xq, t=None):
        xq = np.asarray(xq, dtype=float).reshape(-1)
        return np.stack([np.interp(xq, x, vals[:, k]) for k in range(vals.shape[1])], axis=1)

    return ReferenceSolution(evaluate, provenance)
