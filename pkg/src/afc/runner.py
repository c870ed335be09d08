"""Run orchestration shared by the CLI, the demos and the acceptance tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .benchmarks import get_case
from .config import RunConfig
from .diagnostics import DiagnosticsRecord, cauchy_difference, eoc, l1_error, record_step
from .integrator import Pipeline, StepResult, TimeControls, integrate
from .limiters import LimiterConfig
from .mesh import MeshTopology

__all__ = ["RunResult", "build_pipeline", "run", "convergence", "ConvergenceRow"]


@dataclass
class RunResult:
    config: RunConfig
    mesh: MeshTopology
    u: np.ndarray
    records: list[DiagnosticsRecord] = field(default_factory=list)
    fdi_iterations: list[int] = field(default_factory=list)
    error_l1: float | None = None


def build_pipeline(cfg: RunConfig, mesh: MeshTopology | None = None):
    case = get_case(cfg.problem)
    mesh = mesh or case.mesh(cfg.cells)
    model = case.model(cfg.bp)
    limiter = LimiterConfig(bp_enabled=cfg.bp, entropy_fix=cfg.entropy_fix, bound_kind=cfg.bound,
                            delta=cfg.delta, fdi_tolerance=cfg.fdi_tolerance,
                            fdi_max_iterations=cfg.fdi_max_iterations)
    return Pipeline(mesh, model, cfg.target, limiter, inflow=case.inflow or None), case


def run(cfg: RunConfig, audit: bool = True, stage_hook=None) -> RunResult:
    """Integrate one configuration; diagnostics every ``audit_stride`` steps and at the end.

    ``stage_hook(t, step_result)`` sees every step, e.g. for property checks.
    """
    pipeline, case = build_pipeline(cfg)
    mesh, model = pipeline.mesh, pipeline.model
    u0 = case.initial_state(mesh)
    records = [record_step(mesh, model, 0.0, u0, audit=False)]
    iters = []
    counter = {"k": 0}

    def callback(t, res: StepResult):
        counter["k"] += 1
        if res.fdi_iterations:
            iters.append(res.fdi_iterations)
        if stage_hook is not None:
            stage_hook(t, res)
        final = math.isclose(t, cfg.t_final, rel_tol=1e-12)
        if audit and (counter["k"] % cfg.audit_stride == 0 or final):
            records.append(record_step(mesh, model, t, res.u, res.stages, cfg.dt))

    controls = TimeControls(t_final=cfg.t_final, dt=cfg.dt, cfl_policy=cfg.cfl_policy)
    u = integrate(pipeline, u0, controls, callback)
    err = None
    if case.reference is not None:
        err = l1_error(u, case.reference, mesh, cfg.t_final)
    return RunResult(cfg, mesh, u, records, iters, err)


@dataclass
class ConvergenceRow:
    cells: int
    dt: float
    e1: float
    eoc: float


def _level_config(cfg: RunConfig, k: int) -> RunConfig:
    cells = cfg.cells * 2**k
    power = 1 if cfg.dt_scaling == "linear" else 2
    dt = cfg.dt / 2 ** (k * power)
    return RunConfig(**{**cfg.__dict__, "cells": cells, "dt": dt})


def convergence(cfg: RunConfig, levels: int, progress=None) -> list[ConvergenceRow]:
    """Refine ``levels`` times by 2 starting from ``cfg.cells``.

    With a closed-form reference, e1 is the L1 error at each level.  Without
    one, e1 at level k is the L1 distance between the solutions of levels
    k-1 and k (Cauchy form) and the coarsest row carries NaN.
    """
    if levels < 3:
        raise ValueError("a convergence study needs at least 3 levels")
    case = get_case(cfg.problem)
    results = []
    for k in range(levels):
        lvl = _level_config(cfg, k)
        res = run(lvl, audit=False)
        results.append(res)
        if progress is not None:
            progress(lvl, res)
    errors = []
    for k, res in enumerate(results):
        if case.reference is not None:
            errors.append(res.error_l1)
        elif k == 0:
            errors.append(math.nan)
        else:
            prev = results[k - 1]
            errors.append(cauchy_difference(prev.mesh, prev.u, res.mesh, res.u))
    rows = []
    for k, res in enumerate(results):
        rate = math.nan
        if k > 0 and not (math.isnan(errors[k - 1]) or math.isnan(errors[k])):
            rate = eoc(errors[k - 1], errors[k])
        rows.append(ConvergenceRow(res.config.cells, res.config.dt, errors[k], rate))
    return rows
