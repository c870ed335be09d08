"""Time integration of the flux-corrected scheme.

A :class:`Pipeline` evaluates the right-hand side of one forward Euler
stage (low-order rate, target, MCL, entropy fixes).  Heun's method and the
implicitly corrected final stage are built on top of it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .lax_friedrichs import (
    EdgeViscosity,
    GhostEdges,
    assemble_viscosity,
    bar_state,
    bar_states,
    dot_c,
    ghost_rhs,
    ghost_viscosity,
    low_order_rhs,
)
from .limiters import (
    LimitedFluxes,
    LimiterConfig,
    NodalEntropyData,
    berthon_viscosity,
    edge_entropy_bounds,
    fde_fix,
    fdi_final_flux,
    local_bounds,
    mcl_limit,
    sd_fix,
    stage_term,
)
from .mesh import MeshTopology
from .models import FluxModel, InadmissibleStateError
from .targets import galerkin_target, roe_target

__all__ = [
    "TARGETS",
    "SolverAbort",
    "FDINonConvergenceError",
    "CFLViolation",
    "TimeControls",
    "StageResult",
    "StepResult",
    "Pipeline",
    "apply_boundary",
    "cfl_numbers",
    "forward_euler_stage",
    "heun_step",
    "fdi_solve",
    "step",
    "integrate",
]

log = logging.getLogger(__name__)

TARGETS = ("galerkin", "roe", "none")
HEUN_WEIGHTS = (0.5, 0.5)


class SolverAbort(RuntimeError):
    """The time loop produced a state it cannot continue from."""


class FDINonConvergenceError(SolverAbort):
    def __init__(self, iterations, residual):
        super().__init__(f"FDI fixed-point iteration did not converge in {iterations} "
                         f"iterations (relative update {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class CFLViolation(SolverAbort):
    pass


def apply_boundary(u: np.ndarray, mesh: MeshTopology, model: FluxModel,
                   inflow: Mapping[str, np.ndarray] | None = None) -> GhostEdges | None:
    """Exterior ghost states for the tagged boundary nodes of ``mesh``.

    Wall nodes mirror the state with the normal momentum negated, inflow
    nodes see the prescribed state ``inflow[side]``.  Outflow nodes use the
    interior state itself, which contributes nothing and is skipped.
    Periodic meshes need no ghosts and return ``None``.
    """
    if mesh.periodic or not mesh.boundary_nodes:
        return None
    nodes, cs, states = [], [], []
    for bn in mesh.boundary_nodes:
        if bn.kind == "outflow":
            continue
        n = np.asarray(bn.normal, dtype=float)
        if bn.kind == "wall":
            if len(model.momentum) != mesh.dim:
                raise ValueError(f"wall boundaries need a momentum vector; "
                                 f"{type(model).__name__} has none")
            g = u[bn.node].copy()
            mom = g[list(model.momentum)]
            g[list(model.momentum)] = mom - 2.0 * np.dot(mom, n) * n
        elif bn.kind == "inflow":
            if inflow is None or bn.side not in inflow:
                raise ValueError(f"no inflow state prescribed on side {bn.side!r}")
            g = np.asarray(inflow[bn.side], dtype=float).reshape(model.m)
        else:
            raise ValueError(f"unsupported boundary kind {bn.kind!r}")
        nodes.append(bn.node)
        cs.append(0.5 * bn.measure * n)
        states.append(g)
    if not nodes:
        return None
    ghosts = GhostEdges(nodes=np.array(nodes), c=np.array(cs), states=np.array(states))
    ghosts.d = ghost_viscosity(ghosts, u, model)
    return ghosts


def cfl_numbers(mesh: MeshTopology, viscosity: EdgeViscosity, dt: float,
                ghosts: GhostEdges | None = None) -> np.ndarray:
    """c_i = (dt/m_i) sum_j 2 d_ij, ghost edges included."""
    total = -2.0 * viscosity.diag
    if ghosts is not None and len(ghosts):
        total = total.copy()
        np.add.at(total, ghosts.nodes, 2.0 * ghosts.d)
    return dt * total / mesh.lumped_mass


@dataclass
class TimeControls:
    """Fixed step ``dt`` or, when ``dt`` is None, steps derived from ``cfl``."""

    t_final: float
    dt: float | None = None
    cfl: float = 0.9
    cfl_policy: str = "warn"

    def __post_init__(self):
        if not self.t_final > 0.0:
            raise ValueError("t_final must be positive")
        if self.dt is not None and not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.cfl_policy not in ("warn", "abort", "ignore"):
            raise ValueError("cfl_policy must be warn, abort or ignore")


@dataclass
class StageResult:
    """Everything one forward Euler stage computed, kept for audits and FDI."""

    u: np.ndarray
    rate: np.ndarray
    udot_low: np.ndarray
    viscosity: EdgeViscosity
    nodal: NodalEntropyData
    ghosts: GhostEdges | None
    limited: LimitedFluxes
    q_bound: np.ndarray | None = None
    prelimited: np.ndarray | None = None
    max_cfl: float = 0.0


@dataclass
class StepResult:
    u: np.ndarray
    stages: list[StageResult]
    fdi_iterations: int = 0
    fdi_residual: float = 0.0


class Pipeline:
    """One forward Euler stage operator: low order, target, MCL, entropy fix."""

    def __init__(self, mesh: MeshTopology, model: FluxModel, target: str = "galerkin",
                 limiter: LimiterConfig | None = None,
                 inflow: Mapping[str, np.ndarray] | None = None):
        if target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")
        if target == "roe" and (model.m == 1 or mesh.dim != 1):
            raise ValueError("Roe targets need a 1D system")
        self.mesh = mesh
        self.model = model
        self.target = target
        self.limiter = limiter or LimiterConfig()
        self.inflow = inflow
        self.cfl_policy = "ignore"
        self.cfl_warned = False
        self.max_cfl = 0.0

    # low-order ingredients shared with the FDI sweep
    def low_order(self, u):
        model, mesh = self.model, self.mesh
        model.check_admissible(u, "stage state")
        flux = model.flux(u)
        visc = assemble_viscosity(mesh, u, model)
        ghosts = apply_boundary(u, mesh, model, self.inflow)
        udot = low_order_rhs(mesh, u, model, visc, flux=flux, ghosts=ghosts)
        return flux, visc, ghosts, udot

    def bounds(self, u, bars, ghosts, flux):
        gnodes = gbars = None
        if ghosts is not None and len(ghosts):
            gnodes = ghosts.nodes
            gbars = bar_state(u[gnodes], ghosts.states, ghosts.c, ghosts.d, self.model)
        return local_bounds(self.mesh, u, bars, gnodes, gbars)

    def check_cfl(self, visc, dt, ghosts):
        c = cfl_numbers(self.mesh, visc, dt, ghosts)
        cmax = float(c.max())
        self.max_cfl = max(self.max_cfl, cmax)
        if cmax > 1.0 + 1e-10:
            msg = f"stage CFL number {cmax:.12g} exceeds 1 at node {int(np.argmax(c))}"
            if self.cfl_policy == "abort":
                raise CFLViolation(msg)
            if self.cfl_policy == "warn" and not self.cfl_warned:
                log.warning(msg + " (further violations not reported)")
                self.cfl_warned = True
        return cmax

    def stage(self, u: np.ndarray, dt: float) -> StageResult:
        mesh, model, cfg = self.mesh, self.model, self.limiter
        flux, visc, ghosts, udot = self.low_order(u)
        cmax = self.check_cfl(visc, dt, ghosts)
        nodal = NodalEntropyData.from_state(model, u, flux)
        n_e = mesh.num_edges

        if self.target == "none":
            zero = np.zeros((n_e, model.m))
            lim = LimitedFluxes(fstar=zero, alpha=np.zeros(n_e), flux=zero)
            return StageResult(u, udot, udot, visc, nodal, ghosts, lim, max_cfl=cmax)

        if self.target == "galerkin":
            f = galerkin_target(mesh, u, udot, visc).f
        else:
            f = roe_target(mesh, u, visc, model).f

        if cfg.bp_enabled:
            bars = bar_states(mesh, u, flux, visc.d)
            fstar = mcl_limit(mesh, u, visc.d, bars, f, model,
                              bounds=self.bounds(u, bars, ghosts, flux))
        else:
            fstar = f

        lim = LimitedFluxes(fstar=fstar, alpha=np.ones(n_e), flux=fstar)
        q_bound = prelimited = None
        if cfg.sd_active:
            q_bound = edge_entropy_bounds(mesh, nodal, visc.d, model, cfg.bound_kind)
            a_sd = sd_fix(fstar, q_bound, q_bound, nodal.v[mesh.i], nodal.v[mesh.j], cfg.delta)
            g = a_sd[:, None] * fstar
            lim.alpha_sd = a_sd
            lim.alpha = a_sd
            prelimited = g
            if cfg.entropy_fix == "fde":
                a_fd = fde_fix(mesh, u, udot, g, q_bound, dt, model, v=nodal.v)
                lim.alpha_fd = a_fd
                lim.alpha = a_sd * a_fd
                g = a_fd[:, None] * g
            elif cfg.entropy_fix == "berthon":
                i, j = mesh.i, mesh.j
                d_fd = berthon_viscosity(u[i], u[j], flux[i], flux[j], mesh.c_ij, visc.d, g, model)
                lim.d_fd = d_fd
                g = g + d_fd[:, None] * (u[j] - u[i])
            lim.flux = g

        rate = udot + mesh.scatter(lim.flux, -lim.flux) / mesh.lumped_mass[:, None]
        return StageResult(u, rate, udot, visc, nodal, ghosts, lim,
                           q_bound=q_bound, prelimited=prelimited, max_cfl=cmax)


def _checked(model, u, what):
    try:
        model.check_admissible(u, what)
    except InadmissibleStateError as exc:
        raise SolverAbort(str(exc)) from exc
    return u


def forward_euler_stage(pipeline: Pipeline, u: np.ndarray, dt: float):
    """u + dt * rate(u); returns the new state and the stage record."""
    st = pipeline.stage(u, dt)
    return _checked(pipeline.model, u + dt * st.rate, "forward Euler result"), st


def heun_step(pipeline: Pipeline, u: np.ndarray, dt: float) -> StepResult:
    """SSP-RK2: two Euler stages, then the average with the initial state."""
    u1, s1 = forward_euler_stage(pipeline, u, dt)
    u2, s2 = forward_euler_stage(pipeline, u1, dt)
    return StepResult(u=0.5 * (u + u2), stages=[s1, s2])


def _boundary_remainder(mesh, model, u, flux, ghosts):
    """sigma_i = ghost contribution - 2 f_i.c_ii, zero away from boundaries."""
    sigma = -2.0 * dot_c(flux, mesh.c_diag)
    if ghosts is not None and len(ghosts):
        sigma = sigma + ghost_rhs(ghosts, u, flux, model, mesh.num_nodes)
    return sigma


def fdi_solve(pipeline: Pipeline, u_n: np.ndarray, step: StepResult, dt: float):
    """Iteratively corrected final stage started from the Heun result.

    Stage terms use the limited stage fluxes; the final flux is MCL-limited
    against bounds from the distance-2 stencil of ``u_n`` joined with the bar
    states of the current iterate, then entropy-corrected at the iterate.
    """
    mesh, model, cfg = pipeline.mesh, pipeline.model, pipeline.limiter
    weights = HEUN_WEIGHTS
    taus = []
    sigma_stages = np.zeros_like(u_n)
    for b, st in zip(weights, step.stages):
        taus.append(stage_term(mesh, st.u, st.nodal.flux, st.viscosity.d, st.limited.flux))
        if not mesh.periodic:
            sigma_stages += b * _boundary_remainder(mesh, model, st.u, st.nodal.flux, st.ghosts)

    wide_max = mesh.neighbour_max(mesh.neighbour_max(u_n))
    wide_min = mesh.neighbour_min(mesh.neighbour_min(u_n))
    m = mesh.lumped_mass[:, None]
    i, j = mesh.i, mesh.j

    u_k = step.u
    residual = math.inf
    for it in range(1, cfg.fdi_max_iterations + 1):
        flux, visc, ghosts, udot = pipeline.low_order(u_k)
        f = fdi_final_flux(mesh, taus, weights, u_k, flux, visc.d)
        if cfg.bp_enabled:
            bars = bar_states(mesh, u_k, flux, visc.d)
            bmin, bmax = pipeline.bounds(u_k, bars, ghosts, flux)
            f = mcl_limit(mesh, u_k, visc.d, bars, f, model,
                          bounds=(np.minimum(bmin, wide_min), np.maximum(bmax, wide_max)))
        nodal = NodalEntropyData.from_state(model, u_k, flux)
        q = edge_entropy_bounds(mesh, nodal, visc.d, model, cfg.bound_kind)
        alpha = sd_fix(f, q, q, nodal.v[i], nodal.v[j], cfg.delta)
        g = alpha[:, None] * f
        rhs = udot + mesh.scatter(g, -g) / m
        if not mesh.periodic:
            rhs = rhs + (sigma_stages - _boundary_remainder(mesh, model, u_k, flux, ghosts)) / m
        u_new = _checked(model, u_n + dt * rhs, "FDI iterate")
        scale = max(float(np.max(np.abs(u_new))), 1e-300)
        residual = float(np.max(np.abs(u_new - u_k))) / scale
        u_k = u_new
        if residual <= cfg.fdi_tolerance:
            return StepResult(u=u_k, stages=step.stages, fdi_iterations=it, fdi_residual=residual)
    raise FDINonConvergenceError(cfg.fdi_max_iterations, residual)


def step(pipeline: Pipeline, u: np.ndarray, dt: float) -> StepResult:
    res = heun_step(pipeline, u, dt)
    if pipeline.limiter.entropy_fix == "fdi":
        res = fdi_solve(pipeline, u, res, dt)
    return res


def _cfl_step(pipeline, u, nu):
    _, visc, ghosts, _ = pipeline.low_order(u)
    c1 = cfl_numbers(pipeline.mesh, visc, 1.0, ghosts)
    return nu / float(c1.max())


def integrate(pipeline: Pipeline, u0: np.ndarray, controls: TimeControls,
              callback: Callable[[float, StepResult], None] | None = None) -> np.ndarray:
    """Advance ``u0`` to ``controls.t_final``; ``callback(t, step)`` runs after every step.

    With a fixed ``dt`` the number of steps is ``round(t_final/dt)`` when that
    lands on ``t_final``, otherwise the last step is shortened.
    """
    pipeline.cfl_policy = controls.cfl_policy
    u = np.array(u0, dtype=float)
    t = 0.0
    t_end = controls.t_final
    n_fixed = None
    if controls.dt is not None:
        n = round(t_end / controls.dt)
        if n > 0 and math.isclose(n * controls.dt, t_end, rel_tol=1e-12):
            n_fixed = n
    k = 0
    while True:
        if n_fixed is not None:
            if k == n_fixed:
                break
            dt = controls.dt
        else:
            if t >= t_end * (1.0 - 1e-14):
                break
            dt = controls.dt if controls.dt is not None else _cfl_step(pipeline, u, controls.cfl)
            dt = min(dt, t_end - t)
        res = step(pipeline, u, dt)
        u = res.u
        k += 1
        t = k * dt if n_fixed is not None else t + dt
        if callback is not None:
            callback(t, res)
    return u
