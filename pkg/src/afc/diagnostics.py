"""Error norms, convergence rates, entropy audits and run monitoring."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Callable, Sequence

import numpy as np

from .lax_friedrichs import dot_c
from .limiters import NodalEntropyData, entropy_bound_ec
from .mesh import MeshTopology
from .models import FluxModel

__all__ = [
    "DiagnosticsRecord",
    "gauss_points",
    "fe_evaluate",
    "l1_error",
    "l2_error",
    "cauchy_difference",
    "eoc",
    "eoc_table",
    "tadmor_residuals",
    "tadmor_audit",
    "es4_residuals",
    "es4_audit",
    "entropy_fluxes",
    "entropy_flux_audit",
    "total_variation",
    "rarefaction_glitch",
    "record_step",
]

# 3-point Gauss-Legendre rule on [0, 1]
_GP = 0.5 + 0.5 * np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_GW = np.array([5.0, 8.0, 5.0]) / 18.0


def gauss_points(mesh: MeshTopology):
    """Quadrature points (nq, d) and weights (nq,) covering every element."""
    h = mesh.spacing
    lows = [a + h[k] * np.arange(n) for k, ((a, _), n) in enumerate(zip(mesh.extent, mesh.shape))]
    if mesh.dim == 1:
        pts = (lows[0][:, None] + h[0] * _GP[None, :]).reshape(-1, 1)
        w = np.tile(_GW * h[0], mesh.shape[0])
        return pts, w
    x = (lows[0][:, None] + h[0] * _GP).reshape(-1)
    y = (lows[1][:, None] + h[1] * _GP).reshape(-1)
    wx = np.tile(_GW * h[0], mesh.shape[0])
    wy = np.tile(_GW * h[1], mesh.shape[1])
    X, Y = np.meshgrid(x, y, indexing="xy")
    W = np.outer(wy, wx)
    return np.stack([X.ravel(), Y.ravel()], axis=1), W.ravel()


def _cell_coords(mesh, pts, axis):
    a, _ = mesh.extent[axis]
    n = mesh.shape[axis]
    h = mesh.spacing[axis]
    s = (pts[:, axis] - a) / h
    cell = np.clip(np.floor(s).astype(int), 0, n - 1)
    return cell, s - cell


def fe_evaluate(mesh: MeshTopology, u: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Evaluate the P1/Q1 interpolant of nodal values ``u`` at points ``pts`` (nq, d)."""
    u = np.asarray(u, dtype=float)
    squeeze = u.ndim == 1
    if squeeze:
        u = u[:, None]
    pts = np.asarray(pts, dtype=float).reshape(-1, mesh.dim)
    cx, tx = _cell_coords(mesh, pts, 0)
    if mesh.dim == 1:
        nodes = mesh.elements[cx]
        out = (1.0 - tx)[:, None] * u[nodes[:, 0]] + tx[:, None] * u[nodes[:, 1]]
    else:
        cy, ty = _cell_coords(mesh, pts, 1)
        nodes = mesh.elements[cy * mesh.shape[0] + cx]
        w = np.stack([(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty], axis=1)
        out = np.einsum("qk,qkm->qm", w, u[nodes])
    return out[:, 0] if squeeze else out


def _reference_values(reference, pts, dim, t):
    arg = pts[:, 0] if dim == 1 else pts
    vals = reference(arg, t) if t is not None else reference(arg)
    vals = np.asarray(vals, dtype=float)
    return vals[:, None] if vals.ndim == 1 else vals


def _lp_error(mesh, u, reference, t, p):
    pts, w = gauss_points(mesh)
    uh = fe_evaluate(mesh, np.asarray(u, dtype=float).reshape(mesh.num_nodes, -1), pts)
    ref = _reference_values(reference, pts, mesh.dim, t)
    diff = np.abs(uh - ref)
    if p == 1:
        return float(np.sum(w[:, None] * diff))
    return float(np.sqrt(np.sum(w[:, None] * diff**2)))


def l1_error(u_h, reference: Callable, mesh: MeshTopology, t: float | None = None) -> float:
    """L1 norm of u_h - reference with 3 Gauss points per direction, summed over components."""
    return _lp_error(mesh, u_h, reference, t, 1)


def l2_error(u_h, reference: Callable, mesh: MeshTopology, t: float | None = None) -> float:
    """L2 norm of u_h - reference over all components."""
    return _lp_error(mesh, u_h, reference, t, 2)


def cauchy_difference(coarse: MeshTopology, u_coarse, fine: MeshTopology, u_fine, p: int = 1) -> float:
    """Lp distance between solutions on nested meshes, integrated on the finer one."""
    return _lp_error(fine, u_fine, lambda x: fe_evaluate(coarse, u_coarse, np.reshape(x, (-1, coarse.dim))), None, p)


def eoc(*errors: float) -> float:
    """log2 of the ratio of the last two errors, ordered from coarse to fine.

    A vanishing finest error returns ``math.inf``.
    """
    if len(errors) < 2:
        raise ValueError("need at least two errors")
    e_c, e_f = float(errors[-2]), float(errors[-1])
    if e_f == 0.0:
        return math.inf
    if e_c <= 0.0 or e_f < 0.0:
        raise ValueError("errors must be positive")
    return math.log2(e_c / e_f)


def eoc_table(errors: Sequence[float]) -> list[float]:
    """EOC per level (NaN at the coarsest) for errors on meshes refined by 2."""
    return [math.nan] + [eoc(errors[k - 1], errors[k]) for k in range(1, len(errors))]


# ---------------------------------------------------------------- entropy audits


def tadmor_residuals(mesh: MeshTopology, nodal: NodalEntropyData, d, flux) -> np.ndarray:
    """Per-edge residual of the entropy inequality for the limited flux (<= 0 means satisfied)."""
    i, j = mesh.i, mesh.j
    q_ec = entropy_bound_ec(nodal.u[i], nodal.u[j], nodal.v[i], nodal.v[j], nodal.flux[i],
                            nodal.flux[j], nodal.psi[i], nodal.psi[j], mesh.c_ij, d)
    return 0.5 * np.einsum("km,km->k", nodal.v[i] - nodal.v[j], flux) - q_ec


def tadmor_audit(mesh, nodal, d, flux) -> float:
    return float(np.max(tadmor_residuals(mesh, nodal, d, flux), initial=-np.inf))


def es4_residuals(mesh: MeshTopology, model: FluxModel, u, udot_low, flux, q, dt):
    """Per-node residual and scale of the sufficient fully discrete entropy condition.

    ``flux`` is the final edge flux (correction factors included); the budget
    is clipped at zero, matching the limiter.
    """
    i, j = mesh.i, mesh.j
    v = model.entropy_variables(u)
    metric = model.fd_metric(u)
    m = mesh.lumped_mass
    dud = udot_low[i] - udot_low[j]
    half = 0.5 * np.einsum("km,km->k", v[i] - v[j], flux)
    a_i = half + 0.5 * dt * np.einsum("ka,kab,kb->k", dud, metric[i], flux)
    a_j = half + 0.5 * dt * np.einsum("ka,kab,kb->k", dud, metric[j], flux)
    s_i = np.sqrt(np.maximum(np.einsum("ka,kab,kb->k", flux, metric[i], flux), 0.0))
    s_j = np.sqrt(np.maximum(np.einsum("ka,kab,kb->k", flux, metric[j], flux), 0.0))
    quad = 0.5 * dt / m * mesh.scatter(s_i, s_j) ** 2
    lhs = mesh.scatter(a_i, a_j) + quad
    kin = 0.5 * dt * m * np.einsum("na,nab,nb->n", udot_low, metric, udot_low)
    budget = mesh.scatter(q, q) - kin
    scale = mesh.scatter(np.abs(a_i), np.abs(a_j)) + quad + mesh.scatter(np.abs(q), np.abs(q)) + kin
    return lhs - np.maximum(budget, 0.0), scale


def es4_audit(mesh, model, u, udot_low, flux, q, dt) -> float:
    """Largest residual relative to the local scale (plus one)."""
    res, scale = es4_residuals(mesh, model, u, udot_low, flux, q, dt)
    return float(np.max(res / (1.0 + scale)))


def entropy_fluxes(mesh: MeshTopology, nodal: NodalEntropyData, d, flux):
    """Edge entropy fluxes G_ij and G_ji."""
    i, j = mesh.i, mesh.j
    ui, uj, vi, vj = nodal.u[i], nodal.u[j], nodal.v[i], nodal.v[j]
    df = nodal.flux[j] - nodal.flux[i]
    diss = d[:, None] * (uj - ui)
    vs, vd = 0.5 * (vi + vj), 0.5 * (vi - vj)
    g_ij = np.einsum("km,km->k", vs, diss + flux) - np.einsum("km,km->k", vd, dot_c(df, mesh.c_ij))
    g_ji = np.einsum("km,km->k", vs, -diss - flux) + np.einsum("km,km->k", vd, dot_c(-df, mesh.c_ji))
    return g_ij, g_ji


def entropy_flux_audit(mesh: MeshTopology, nodal: NodalEntropyData, d, flux, rate):
    """Per-node residual m_i v_i.rate_i - sum_j [G_ij - (q_j - q_i).c_ij] and the summed budget.

    The residual is nonpositive when every edge satisfies the entropy
    inequality; the second return value vanishes on periodic meshes.
    """
    i, j = mesh.i, mesh.j
    g_ij, g_ji = entropy_fluxes(mesh, nodal, d, flux)
    dq = nodal.q[j] - nodal.q[i]
    budget = mesh.scatter(g_ij - np.einsum("kd,kd->k", dq, mesh.c_ij),
                          g_ji + np.einsum("kd,kd->k", dq, mesh.c_ji))
    prod = mesh.lumped_mass * np.einsum("nm,nm->n", nodal.v, rate)
    return prod - budget, float(np.sum(budget))


def total_variation(mesh: MeshTopology, u, squared: bool = False) -> float:
    """Sum over elements of the oscillation max - min of a scalar field.

    ``squared=True`` sums squared oscillations instead.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim > 1:
        u = u[:, 0]
    vals = u[mesh.elements]
    osc = vals.max(axis=1) - vals.min(axis=1)
    return float(np.sum(osc**2 if squared else osc))


def rarefaction_glitch(x, rho, rho_exact, span, margin: float = 1.0) -> float:
    """Largest spurious density drop between neighbouring nodes inside a rarefaction fan.

    A resolved fan already falls by roughly one gradient step per cell, so
    each adjacent drop is measured relative to the drop of the exact profile
    over the same pair.  Only pairs lying at least ``margin`` cells inside
    ``span = (head, tail)`` are considered; an entropy-violating stationary
    jump shows up as a large positive excess.
    """
    x = np.asarray(x, dtype=float)
    order = np.argsort(x)
    x, rho, rho_exact = x[order], np.asarray(rho, float)[order], np.asarray(rho_exact, float)[order]
    h = float(np.min(np.diff(x)))
    lo, hi = span[0] + margin * h, span[1] - margin * h
    inside = (x[:-1] >= lo) & (x[1:] <= hi)
    if not np.any(inside):
        return 0.0
    excess = (rho[:-1] - rho[1:]) - (rho_exact[:-1] - rho_exact[1:])
    return float(max(0.0, np.max(excess[inside])))


@dataclass
class DiagnosticsRecord:
    t: float
    totals: np.ndarray
    total_entropy: float
    min: float
    max: float
    max_tadmor_residual: float
    max_es4_residual: float
    tv: float

    def row(self) -> list[float]:
        return [self.t, *np.asarray(self.totals).tolist(), self.total_entropy, self.min, self.max,
                self.max_tadmor_residual, self.max_es4_residual, self.tv]

    @staticmethod
    def header(component_names: Sequence[str]) -> list[str]:
        names = [f.name for f in fields(DiagnosticsRecord)]
        totals = [f"total_mass_{c}" for c in component_names]
        return [names[0], *totals, *names[2:]]


def record_step(mesh: MeshTopology, model: FluxModel, t: float, u: np.ndarray, stages=(),
                dt: float = 0.0, audit: bool = True) -> DiagnosticsRecord:
    """Snapshot totals and the worst audit residuals over the given stages."""
    totals = mesh.lumped_mass @ u
    entropy = float(mesh.lumped_mass @ model.entropy(u))
    tad = es4 = 0.0
    if audit and stages:
        tad = es4 = -math.inf
        for st in stages:
            flux = st.limited.flux
            nodal, d = st.nodal, st.viscosity.d
            tad = max(tad, tadmor_audit(mesh, nodal, d, flux))
            q = st.q_bound
            if q is None:
                i, j = mesh.i, mesh.j
                q = entropy_bound_ec(nodal.u[i], nodal.u[j], nodal.v[i], nodal.v[j], nodal.flux[i],
                                     nodal.flux[j], nodal.psi[i], nodal.psi[j], mesh.c_ij, d)
            es4 = max(es4, es4_audit(mesh, model, st.u, st.udot_low, flux, q, dt))
    return DiagnosticsRecord(t=t, totals=totals, total_entropy=entropy, min=float(u[:, 0].min()),
                             max=float(u[:, 0].max()), max_tadmor_residual=tad,
                             max_es4_residual=es4, tv=total_variation(mesh, u[:, 0]))
