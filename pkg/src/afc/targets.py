"""High-order target fluxes f_ij = -f_ji to be constrained by the limiters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lax_friedrichs import EdgeViscosity
from .mesh import MeshTopology
from .models import Euler1D, FluxModel, ShallowWater1D

__all__ = ["TargetFluxes", "galerkin_target", "roe_target", "roe_matrices"]


@dataclass
class TargetFluxes:
    f: np.ndarray
    kind: str


def galerkin_target(mesh: MeshTopology, u: np.ndarray, udot_low: np.ndarray,
                    viscosity: EdgeViscosity) -> TargetFluxes:
    """Stabilized Galerkin target m_ij (udotL_i - udotL_j) + d_ij (u_i - u_j)."""
    i, j = mesh.i, mesh.j
    f = (mesh.edge_mass[:, None] * (udot_low[i] - udot_low[j])
         + viscosity.d[:, None] * (u[i] - u[j]))
    return TargetFluxes(f=f, kind="galerkin")


def _swe_roe(model: ShallowWater1D, ui, uj):
    hi, hj = ui[:, 0], uj[:, 0]
    si, sj = np.sqrt(hi), np.sqrt(hj)
    v = (si * ui[:, 1] / hi + sj * uj[:, 1] / hj) / (si + sj)
    c = np.sqrt(model.g * 0.5 * (hi + hj))
    ones = np.ones_like(v)
    lam = np.stack([v - c, v + c], axis=1)
    right = np.stack([np.stack([ones, ones], axis=1),
                      np.stack([v - c, v + c], axis=1)], axis=1)
    return lam, right


def _euler_roe(model: Euler1D, ui, uj):
    g = model.gamma
    ri, rj = ui[:, 0], uj[:, 0]
    pi, pj = model.pressure(ui), model.pressure(uj)
    si, sj = np.sqrt(ri), np.sqrt(rj)
    w = si + sj
    v = (si * ui[:, 1] / ri + sj * uj[:, 1] / rj) / w
    H = (si * (ui[:, 2] + pi) / ri + sj * (uj[:, 2] + pj) / rj) / w
    c2 = (g - 1.0) * (H - 0.5 * v * v)
    if np.any(c2 <= 0.0):
        raise ValueError("degenerate Roe average (non-positive sound speed)")
    c = np.sqrt(c2)
    ones = np.ones_like(v)
    lam = np.stack([v - c, v, v + c], axis=1)
    right = np.stack([np.stack([ones, ones, ones], axis=1),
                      np.stack([v - c, v, v + c], axis=1),
                      np.stack([H - v * c, 0.5 * v * v, H + v * c], axis=1)], axis=1)
    return lam, right


def roe_matrices(model: FluxModel, ui: np.ndarray, uj: np.ndarray, n: np.ndarray):
    """Roe matrix A_hat in direction n and its absolute value R |Lambda| R^-1."""
    model.check_admissible(ui)
    model.check_admissible(uj)
    if isinstance(model, Euler1D):
        lam, right = _euler_roe(model, ui, uj)
    elif isinstance(model, ShallowWater1D):
        lam, right = _swe_roe(model, ui, uj)
    else:
        raise TypeError(f"no Roe linearization for {type(model).__name__}")
    nx = np.asarray(n, dtype=float)[:, 0]
    left = np.linalg.inv(right)
    a_hat = np.einsum("eik,ek,ekj->eij", right, lam, left) * nx[:, None, None]
    a_abs = np.einsum("eik,ek,ekj->eij", right, np.abs(lam), left)
    return a_hat, a_abs


def roe_target(mesh: MeshTopology, u: np.ndarray, viscosity: EdgeViscosity,
               model: FluxModel) -> TargetFluxes:
    """f_ij = (d_ij I - |A_hat_ij| |c_ij|)(u_i - u_j): Roe dissipation replaces d_ij."""
    if mesh.dim != 1:
        raise ValueError("Roe targets are implemented for 1D systems only")
    i, j = mesh.i, mesh.j
    ui, uj = u[i], u[j]
    norm = np.linalg.norm(mesh.c_ij, axis=1)
    n = mesh.c_ij / np.where(norm > 0.0, norm, 1.0)[:, None]
    _, a_abs = roe_matrices(model, ui, uj, n)
    du = ui - uj
    f = viscosity.d[:, None] * du - norm[:, None] * np.einsum("eij,ej->ei", a_abs, du)
    return TargetFluxes(f=f, kind="roe")
