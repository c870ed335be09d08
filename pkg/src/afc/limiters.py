"""Convex (MCL) limiting of target fluxes and limiter-based entropy fixes.

All per-edge arrays follow the mesh edge order; the flux stored for edge
``(i, j)`` is ``f_ij`` and node ``j`` receives ``f_ji = -f_ij``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lax_friedrichs import BarStates, dot_c
from .mesh import MeshTopology
from .models import FluxModel

__all__ = [
    "ENTROPY_FIXES",
    "LimiterConfig",
    "LimitedFluxes",
    "NodalEntropyData",
    "local_bounds",
    "mcl_limit",
    "entropy_bound_ec",
    "entropy_bound_ed",
    "edge_entropy_bounds",
    "sd_fix",
    "fde_fix",
    "fde_terms",
    "berthon_states",
    "berthon_viscosity",
    "stage_term",
    "fdi_final_flux",
]

ENTROPY_FIXES = ("none", "sd", "fde", "fdi", "berthon")
BISECTION_STEPS = 40
_TINY = 1e-300


@dataclass
class LimiterConfig:
    bp_enabled: bool = True
    entropy_fix: str = "none"
    bound_kind: str = "ec"
    delta: float = 1e-2
    fdi_tolerance: float = 1e-8
    fdi_max_iterations: int = 100

    def __post_init__(self):
        self.entropy_fix = self.entropy_fix.lower()
        self.bound_kind = self.bound_kind.lower()
        if self.entropy_fix not in ENTROPY_FIXES:
            raise ValueError(f"entropy_fix must be one of {ENTROPY_FIXES}, got {self.entropy_fix!r}")
        if self.bound_kind not in ("ec", "ed"):
            raise ValueError(f"bound_kind must be 'ec' or 'ed', got {self.bound_kind!r}")
        if not self.delta > 0.0:
            raise ValueError("delta must be positive")
        if not self.fdi_tolerance > 0.0 or self.fdi_max_iterations < 1:
            raise ValueError("FDI tolerance and iteration cap must be positive")

    @property
    def sd_active(self) -> bool:
        # the fully discrete fixes and the viscosity variant all act on SD-prelimited fluxes
        return self.entropy_fix != "none"


@dataclass
class LimitedFluxes:
    fstar: np.ndarray
    alpha: np.ndarray
    flux: np.ndarray
    alpha_sd: np.ndarray | None = None
    alpha_fd: np.ndarray | None = None
    d_fd: np.ndarray | None = None


@dataclass
class NodalEntropyData:
    """Nodal quantities shared by all entropy bounds and audits."""

    u: np.ndarray
    flux: np.ndarray
    v: np.ndarray
    psi: np.ndarray
    eta: np.ndarray
    q: np.ndarray

    @classmethod
    def from_state(cls, model: FluxModel, u: np.ndarray, flux: np.ndarray | None = None):
        if flux is None:
            flux = model.flux(u)
        q = model.entropy_flux(u)
        v = model.entropy_variables(u)
        psi = np.einsum("nk,nkd->nd", v, flux) - q
        return cls(u=u, flux=flux, v=v, psi=psi, eta=model.entropy(u), q=q)


# ---------------------------------------------------------------- MCL


def local_bounds(mesh: MeshTopology, u: np.ndarray, bars: BarStates,
                 ghost_nodes: np.ndarray | None = None, ghost_bars: np.ndarray | None = None):
    """Per-node, per-component bounds over stencil states and bar states."""
    umax = np.maximum(mesh.neighbour_max(u), mesh.node_max(bars.ij, bars.ji))
    umin = np.minimum(mesh.neighbour_min(u), mesh.node_min(bars.ij, bars.ji))
    if ghost_nodes is not None and len(ghost_nodes):
        np.maximum.at(umax, ghost_nodes, ghost_bars)
        np.minimum.at(umin, ghost_nodes, ghost_bars)
    return umin, umax


def _clip(f, d2, bij, bji, min_i, max_i, min_j, max_j):
    """Componentwise MCL clip keeping ubar_ij + f/2d and ubar_ji - f/2d in bounds."""
    up = np.minimum(f, np.minimum(d2 * (max_i - bij), d2 * (bji - min_j)))
    down = np.maximum(f, np.maximum(d2 * (min_i - bij), d2 * (bji - max_j)))
    out = np.where(f > 0.0, up, np.where(f < 0.0, down, 0.0))
    # bounds contain the bar states, so the clip never flips the sign
    return np.where(f > 0.0, np.maximum(out, 0.0), np.minimum(out, 0.0))


def _admissibility_scaling(model, f, d2, bij, bji):
    """Largest theta in [0,1] (bisection) keeping both limited bar states admissible."""
    theta = np.ones(f.shape[0])
    inv = 1.0 / d2
    ok = model.admissible(bij + f * inv) & model.admissible(bji - f * inv)
    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        return theta
    fb, ib, bi, bj = f[bad], inv[bad], bij[bad], bji[bad]
    lo = np.zeros(bad.size)
    hi = np.ones(bad.size)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        g = fb * (mid[:, None] * ib)
        good = model.admissible(bi + g) & model.admissible(bj - g)
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
    theta[bad] = lo
    return theta


def mcl_limit(mesh: MeshTopology, u: np.ndarray, d: np.ndarray, bars: BarStates,
              target: np.ndarray, model: FluxModel, bounds=None) -> np.ndarray:
    """Limit target fluxes so that the flux-corrected bar states obey local bounds.

    ``bounds`` is an optional ``(umin, umax)`` pair of nodal arrays; by default
    the bounds come from the stencil states and bar states of ``u``.
    """
    if bounds is None:
        bounds = local_bounds(mesh, u, bars)
    umin, umax = bounds
    i, j = mesh.i, mesh.j
    active = d > 0.0
    d2 = np.where(active, 2.0 * d, 1.0)[:, None]
    fstar = _clip(target, d2, bars.ij, bars.ji, umin[i], umax[i], umin[j], umax[j])
    fstar[~active] = 0.0
    if model.m > 1:
        theta = _admissibility_scaling(model, fstar, d2, bars.ij, bars.ji)
        fstar *= theta[:, None]
    return fstar


# ---------------------------------------------------------------- entropy bounds


def entropy_bound_ec(ui, uj, vi, vj, fi, fj, psii, psij, cij, dij) -> np.ndarray:
    """Entropy-conservative bound on the rate of entropy production of an edge flux."""
    dij = np.asarray(dij, dtype=float)
    lo = dij[:, None] * (uj - ui) - dot_c(fj + fi, cij)
    return np.einsum("kd,kd->k", psij - psii, cij) - 0.5 * np.einsum("km,km->k", vi - vj, lo)


def entropy_bound_ed(q_ec, vi, vj, fi, fj, fmid, cij) -> np.ndarray:
    """Entropy-dissipative bound: Q^EC reduced where the flux is locally nonlinear."""
    corr = 0.5 * np.einsum("km,km->k", vi - vj, dot_c(fj + fi - 2.0 * fmid, cij))
    return np.maximum(0.0, q_ec + np.minimum(0.0, corr))


def edge_entropy_bounds(mesh: MeshTopology, nodal: NodalEntropyData, d: np.ndarray,
                        model: FluxModel, kind: str = "ec") -> np.ndarray:
    i, j = mesh.i, mesh.j
    ui, uj = nodal.u[i], nodal.u[j]
    vi, vj, fi, fj = nodal.v[i], nodal.v[j], nodal.flux[i], nodal.flux[j]
    q = entropy_bound_ec(ui, uj, vi, vj, fi, fj, nodal.psi[i], nodal.psi[j], mesh.c_ij, d)
    if kind == "ed":
        fmid = model.flux(0.5 * (ui + uj))
        q = entropy_bound_ed(q, vi, vj, fi, fj, fmid, mesh.c_ij)
    return q


# ---------------------------------------------------------------- fixes


def sd_fix(fstar, q_ij, q_ji, vi, vj, delta: float = 1e-2) -> np.ndarray:
    """Correction factors enforcing the per-edge entropy inequality with delta regularization."""
    fstar = np.atleast_2d(np.asarray(fstar, dtype=float))
    prod = np.einsum("km,km->k", np.atleast_2d(vi) - np.atleast_2d(vj), fstar)
    qmin = np.minimum(np.asarray(q_ij, dtype=float), np.asarray(q_ji, dtype=float))
    reg = delta * np.linalg.norm(fstar, axis=1)
    trigger = prod > 2.0 * qmin
    den = prod + reg
    safe = np.where(den > _TINY, den, 1.0)
    alpha = np.where(trigger, np.where(den > _TINY, (2.0 * qmin + reg) / safe, 0.0), 1.0)
    return np.clip(alpha, 0.0, 1.0)


def fde_terms(mesh: MeshTopology, u, udot_low, fstar, q, dt, model: FluxModel, v=None):
    """Nodal production bound P_i and admissible budget Q_i of the fully discrete fix.

    Returns ``(P, Q, a_i, a_j, s_i, s_j)`` where ``a`` and ``s`` are the
    per-edge linear and norm terms seen from each end node.
    """
    i, j = mesh.i, mesh.j
    if v is None:
        v = model.entropy_variables(u)
    metric = model.fd_metric(u)
    mi, mj = metric[i], metric[j]
    dud = udot_low[i] - udot_low[j]
    half = 0.5 * np.einsum("km,km->k", v[i] - v[j], fstar)
    a_i = half + 0.5 * dt * np.einsum("ka,kab,kb->k", dud, mi, fstar)
    a_j = half + 0.5 * dt * np.einsum("ka,kab,kb->k", dud, mj, fstar)
    s_i = np.sqrt(np.maximum(np.einsum("ka,kab,kb->k", fstar, mi, fstar), 0.0))
    s_j = np.sqrt(np.maximum(np.einsum("ka,kab,kb->k", fstar, mj, fstar), 0.0))
    m = mesh.lumped_mass
    norm_sum = mesh.scatter(s_i, s_j)
    P = mesh.scatter(np.maximum(a_i, 0.0), np.maximum(a_j, 0.0)) + 0.5 * dt / m * norm_sum**2
    kin = np.einsum("na,nab,nb->n", udot_low, metric, udot_low)
    Q = mesh.scatter(q, q) - 0.5 * dt * m * kin
    return P, Q, a_i, a_j, s_i, s_j


def fde_fix(mesh: MeshTopology, u, udot_low, fstar, q, dt, model: FluxModel, v=None) -> np.ndarray:
    """Correction factors for the fully discrete explicit entropy fix.

    ``fstar`` must already satisfy the per-edge entropy inequality.
    """
    P, Q, *_ = fde_terms(mesh, u, udot_low, fstar, q, dt, model, v)
    R = np.where(P > _TINY, np.minimum(1.0, np.maximum(0.0, Q) / np.where(P > _TINY, P, 1.0)), 1.0)
    return np.minimum(R[mesh.i], R[mesh.j])


def berthon_states(ui, uj, fi, fj, cij, dij, alpha_f):
    """Starred states (u*_i, u*_j) of an edge; their mean is the bar state."""
    dij = np.asarray(dij, dtype=float)
    d2 = np.where(dij > 0.0, 2.0 * dij, 1.0)[:, None]
    df = dot_c(fj - fi, cij)
    dd = dij[:, None] * (uj - ui)
    return ui - (df - dd - alpha_f) / d2, uj - (df + dd + alpha_f) / d2


def berthon_viscosity(ui, uj, fi, fj, cij, dij, alpha_f, model: FluxModel) -> np.ndarray:
    """Localized entropy viscosity added on top of the flux alpha f*, capped at d_ij."""
    dij = np.asarray(dij, dtype=float)
    active = dij > 0.0
    us_i, us_j = berthon_states(ui, uj, fi, fj, cij, dij, alpha_f)
    eta_i, eta_j = model.entropy(ui), model.entropy(uj)
    D = 2.0 * model.entropy(0.5 * (ui + uj)) - eta_j - eta_i
    dq = np.einsum("kd,kd->k", model.entropy_flux(uj) - model.entropy_flux(ui), cij)
    # entropies of the starred states are only needed where they exist
    ok = model.admissible(us_i) & model.admissible(us_j) & active
    eta_s = np.zeros_like(D)
    if np.any(ok):
        eta_s[ok] = model.entropy(us_j[ok]) + model.entropy(us_i[ok])
    P = dij * (eta_s - eta_j - eta_i) + dq
    trig = ok & (P * D < 0.0)
    safe = np.where(trig, D, 1.0)
    d_fd = np.where(trig, -P / (2.0 * safe), 0.0)
    # inadmissible starred states get the full low-order viscosity
    d_fd = np.where(active & ~ok, dij, d_fd)
    return np.clip(d_fd, 0.0, dij)


def fdi_final_flux(mesh: MeshTopology, stage_terms, weights, u_iter, flux_iter, d_iter) -> np.ndarray:
    """Space-time target flux of the implicitly corrected final stage.

    ``stage_terms[s]`` holds the per-edge stage expression
    d(u_j - u_i) - (f_j + f_i).c_ij + alpha f* evaluated at stage ``s``.
    """
    i, j = mesh.i, mesh.j
    f = d_iter[:, None] * (u_iter[i] - u_iter[j]) + dot_c(flux_iter[j] + flux_iter[i], mesh.c_ij)
    for b, tau in zip(weights, stage_terms):
        f = f + b * tau
    return f


def stage_term(mesh: MeshTopology, u, flux, d, limited) -> np.ndarray:
    i, j = mesh.i, mesh.j
    return d[:, None] * (u[j] - u[i]) - dot_c(flux[j] + flux[i], mesh.c_ij) + limited
