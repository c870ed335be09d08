"""Algebraic local Lax-Friedrichs operator: viscosities, bar states, low-order rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import MeshTopology
from .models import FluxModel

__all__ = [
    "EdgeViscosity",
    "BarStates",
    "GhostEdges",
    "dot_c",
    "assemble_viscosity",
    "bar_state",
    "bar_states",
    "low_order_rhs",
    "ghost_rhs",
    "ghost_viscosity",
]


def dot_c(flux: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Project fluxes (k, m, d) onto gradient vectors (k, d)."""
    return np.einsum("kmd,kd->km", flux, c)


@dataclass
class EdgeViscosity:
    d: np.ndarray
    diag: np.ndarray


@dataclass
class BarStates:
    ij: np.ndarray
    ji: np.ndarray


@dataclass
class GhostEdges:
    """Virtual edges between boundary nodes and exterior ghost states.

    A boundary node ``i`` with outward normal ``n`` couples to its ghost
    through ``c = measure * n / 2``; the low-order flux over such an edge is
    the local Lax-Friedrichs boundary flux.
    """

    nodes: np.ndarray
    c: np.ndarray
    states: np.ndarray
    d: np.ndarray | None = None

    def __len__(self):
        return self.nodes.size


def _unit(c):
    norm = np.linalg.norm(c, axis=1)
    safe = np.where(norm > 0.0, norm, 1.0)
    return c / safe[:, None], norm


def assemble_viscosity(mesh: MeshTopology, u: np.ndarray, model: FluxModel) -> EdgeViscosity:
    """d_ij = max(lambda_ij |c_ij|, lambda_ji |c_ji|) on every edge."""
    model.check_admissible(u)
    ui, uj = u[mesh.i], u[mesh.j]
    n_ij, abs_ij = _unit(mesh.c_ij)
    n_ji, abs_ji = _unit(mesh.c_ji)
    lam_ij = model.max_wave_speed(ui, uj, n_ij)
    lam_ji = model.max_wave_speed(uj, ui, n_ji)
    d = np.maximum(lam_ij * abs_ij, lam_ji * abs_ji)
    diag = -mesh.scatter(d, d)
    return EdgeViscosity(d=d, diag=diag)


def ghost_viscosity(ghosts: GhostEdges, u: np.ndarray, model: FluxModel) -> np.ndarray:
    n, norm = _unit(ghosts.c)
    return model.max_wave_speed(u[ghosts.nodes], ghosts.states, n) * norm


def bar_state(ui, uj, cij, dij, model: FluxModel) -> np.ndarray:
    """ubar_ij = (ui + uj)/2 - (f_j - f_i).c_ij / (2 d_ij), row-wise."""
    ui = np.atleast_2d(np.asarray(ui, dtype=float))
    uj = np.atleast_2d(np.asarray(uj, dtype=float))
    cij = np.atleast_2d(np.asarray(cij, dtype=float))
    dij = np.atleast_1d(np.asarray(dij, dtype=float))
    df = dot_c(model.flux(uj) - model.flux(ui), cij)
    equal = np.all(ui == uj, axis=1)
    if np.any((dij <= 0.0) & ~equal):
        raise ValueError("bar state needs d_ij > 0 for distinct states")
    safe = np.where(dij > 0.0, dij, 1.0)
    ubar = 0.5 * (ui + uj) - df / (2.0 * safe[:, None])
    return np.where(equal[:, None], ui, ubar)


def bar_states(mesh: MeshTopology, u: np.ndarray, flux: np.ndarray, d: np.ndarray) -> BarStates:
    """Bar states in both directions of every edge; zero-viscosity edges give the mean."""
    ui, uj = u[mesh.i], u[mesh.j]
    fi, fj = flux[mesh.i], flux[mesh.j]
    inv = np.where(d > 0.0, 1.0 / (2.0 * np.where(d > 0.0, d, 1.0)), 0.0)[:, None]
    mean = 0.5 * (ui + uj)
    return BarStates(ij=mean - dot_c(fj - fi, mesh.c_ij) * inv,
                     ji=mean - dot_c(fi - fj, mesh.c_ji) * inv)


def low_order_rhs(mesh: MeshTopology, u: np.ndarray, model: FluxModel,
                  viscosity: EdgeViscosity, flux: np.ndarray | None = None,
                  ghosts: GhostEdges | None = None) -> np.ndarray:
    """Nodal time derivatives of the algebraic Lax-Friedrichs scheme."""
    if flux is None:
        flux = model.flux(u)
    d = viscosity.d[:, None]
    du = u[mesh.j] - u[mesh.i]
    df = flux[mesh.j] - flux[mesh.i]
    rhs = mesh.scatter(d * du - dot_c(df, mesh.c_ij), -d * du + dot_c(df, mesh.c_ji))
    if ghosts is not None and len(ghosts):
        rhs += ghost_rhs(ghosts, u, flux, model, mesh.num_nodes)
    return rhs / mesh.lumped_mass[:, None]


def ghost_rhs(ghosts: GhostEdges, u, flux, model, n_nodes) -> np.ndarray:
    """Lumped-mass weighted boundary contributions, accumulated per node."""
    d = ghosts.d if ghosts.d is not None else ghost_viscosity(ghosts, u, model)
    ub = u[ghosts.nodes]
    contrib = d[:, None] * (ghosts.states - ub) - dot_c(model.flux(ghosts.states) - flux[ghosts.nodes], ghosts.c)
    out = np.zeros((n_nodes, u.shape[1]))
    np.add.at(out, ghosts.nodes, contrib)
    return out
