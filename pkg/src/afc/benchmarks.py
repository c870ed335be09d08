"""Registry of benchmark problems with their default discretization settings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .mesh import MeshTopology, build_line_mesh, build_quad_mesh
from .models import Euler1D, FluxModel, KPP1D, KPP2D, ShallowWater1D
from .reference_solutions import dam_break, euler_riemann, kpp_rp1, kpp_rp2

__all__ = ["BenchmarkCase", "BENCHMARKS", "get_case", "euler_primitive_to_conserved"]

GAMMA = 1.4


def euler_primitive_to_conserved(rho, v, p, gamma=GAMMA):
    rho, v, p = (np.asarray(a, dtype=float) for a in (rho, v, p))
    return np.stack(np.broadcast_arrays(rho, rho * v, p / (gamma - 1.0) + 0.5 * rho * v * v), axis=-1)


@dataclass
class BenchmarkCase:
    """Problem definition: model, mesh, initial data, boundaries and defaults.

    ``dt`` belongs to the default ``cells``; other resolutions keep dt/h
    fixed.  ``reference(x, t)`` is None when no closed-form solution exists.
    """

    name: str
    description: str
    dim: int
    domain: tuple
    boundary: str
    cells: int
    dt: float
    t_final: float
    model_factory: Callable[[bool], FluxModel]
    initial: Callable[[np.ndarray], np.ndarray]
    reference: Callable | None = None
    inflow: dict = field(default_factory=dict)
    reconstructed: bool = False
    target: str = "galerkin"

    def model(self, bp_enabled: bool = True) -> FluxModel:
        return self.model_factory(bp_enabled)

    def mesh(self, cells: int | None = None) -> MeshTopology:
        n = self.cells if cells is None else int(cells)
        if self.dim == 1:
            return build_line_mesh(n, self.domain[0], self.boundary)
        return build_quad_mesh(n, n, self.domain, self.boundary)

    def spacing(self, cells: int | None = None) -> float:
        n = self.cells if cells is None else int(cells)
        a, b = self.domain[0]
        return (b - a) / n

    def initial_state(self, mesh: MeshTopology) -> np.ndarray:
        u = np.asarray(self.initial(mesh.coords), dtype=float)
        return u[:, None] if u.ndim == 1 else u


def _scalar(model_cls):
    def make(bp_enabled):
        # without limiting, overshoots are expected and must not abort the run
        return model_cls() if bp_enabled else model_cls(bounds=(-math.inf, math.inf))
    return make


def _step(x, x0, left, right):
    left, right = np.asarray(left, dtype=float), np.asarray(right, dtype=float)
    return np.where((x < x0)[:, None], left, right)


def _riemann_reference(left_prim, right_prim, x0):
    def ref(x, t):
        return euler_riemann(left_prim, right_prim, GAMMA, (np.asarray(x) - x0) / t)
    return ref


def _euler_case(name, description, left, right, x0, domain, boundary, cells, dt, t_final,
                reconstructed=False, inflow_left=False):
    uL = euler_primitive_to_conserved(*left)
    uR = euler_primitive_to_conserved(*right)
    return BenchmarkCase(
        name=name, description=description, dim=1, domain=(domain,), boundary=boundary,
        cells=cells, dt=dt, t_final=t_final, model_factory=lambda bp: Euler1D(GAMMA),
        initial=lambda c: _step(c[:, 0], x0, uL, uR),
        reference=_riemann_reference(left, right, x0),
        inflow={"left": uL} if inflow_left else {}, reconstructed=reconstructed)


def _kpp2d_disc(c):
    r = np.hypot(c[:, 0], c[:, 1])
    return np.where(r <= 1.0, 3.5 * math.pi, 0.25 * math.pi)


def _kpp2d_smooth(c):
    r = np.hypot(c[:, 0], c[:, 1])
    bump = 0.25 * math.pi * (1.0 + (1.0 + np.cos(math.pi * r)) / 20.0)
    return np.where(r <= 1.0, bump, 0.25 * math.pi)


def _shu_osher(c):
    x = c[:, 0]
    left = euler_primitive_to_conserved(3.857143, 2.629369, 10.33333)
    right = euler_primitive_to_conserved(1.0 + 0.2 * np.sin(5.0 * x), 0.0 * x, 1.0 + 0.0 * x)
    return np.where((x < -4.0)[:, None], left, right)


BENCHMARKS: dict[str, BenchmarkCase] = {}


def _register(case: BenchmarkCase):
    BENCHMARKS[case.name] = case


_register(BenchmarkCase(
    name="kpp1d-rp1", description="1D KPP Riemann problem, u0 = 0 left / 1 right of x = 1/4",
    dim=1, domain=((0.0, 1.0),), boundary="outflow", cells=128, dt=5e-3, t_final=1.0,
    model_factory=_scalar(KPP1D), initial=lambda c: np.where(c[:, 0] < 0.25, 0.0, 1.0),
    reference=kpp_rp1))
_register(BenchmarkCase(
    name="kpp1d-rp2", description="1D KPP Riemann problem, u0 = 1 left / 0 right of x = 1/4",
    dim=1, domain=((0.0, 1.0),), boundary="outflow", cells=128, dt=5e-3, t_final=2.0,
    model_factory=_scalar(KPP1D), initial=lambda c: np.where(c[:, 0] < 0.25, 1.0, 0.0),
    reference=kpp_rp2))
_register(BenchmarkCase(
    name="kpp2d", description="2D KPP rotating wave, discontinuous data",
    dim=2, domain=((-2.0, 2.0), (-2.5, 1.5)), boundary="periodic", cells=128, dt=1e-3,
    t_final=1.0, model_factory=_scalar(KPP2D), initial=_kpp2d_disc))
_register(BenchmarkCase(
    name="kpp2d-smooth", description="2D KPP with smooth cosine bump (convergence study)",
    dim=2, domain=((-2.0, 2.0), (-2.5, 1.5)), boundary="periodic", cells=64,
    dt=0.256 / 64, t_final=1.0, model_factory=_scalar(KPP2D), initial=_kpp2d_smooth))
_register(BenchmarkCase(
    name="dambreak", description="Wet dam break h = 1 | 0.1 with reflecting walls",
    dim=1, domain=((-1.0, 1.0),), boundary="wall", cells=128, dt=0.25 * 2.0 / 128,
    t_final=0.3, model_factory=lambda bp: ShallowWater1D(1.0),
    initial=lambda c: _step(c[:, 0], 0.0, (1.0, 0.0), (0.1, 0.0)),
    reference=lambda x, t: dam_break(x, t, 1.0, 0.1, 1.0)))
_register(_euler_case("sod", "Sod shock tube", (1.0, 0.0, 1.0), (0.125, 0.0, 0.1), 0.5,
                      (0.0, 1.0), "wall", 128, 1e-3, 0.231))
_register(_euler_case("modsod", "Modified Sod shock tube with a sonic point in the rarefaction",
                      (1.0, 0.75, 1.0), (0.125, 0.0, 0.1), 0.3, (0.0, 1.0), "inflow-outflow",
                      128, 1e-3, 0.2, inflow_left=True))
_register(_euler_case("einfeldt", "Shock tube with sound speeds c_L = 1 and c_R = 4",
                      (1.0, 0.0, 1.0 / GAMMA), (1.0, 0.0, 16.0 / GAMMA), 0.5, (0.0, 1.0),
                      "outflow", 200, 4e-4, 0.1, reconstructed=True))
_register(_euler_case("moschetta1", "Strong rarefaction with a sonic point, test 1",
                      (1.0, 0.0, 1.0), (0.01, 0.0, 0.01), 0.5, (0.0, 1.0), "outflow",
                      200, 4e-4, 0.2, reconstructed=True))
_register(_euler_case("moschetta2", "Blast-wave shock tube, test 2",
                      (1.0, 0.0, 1000.0), (1.0, 0.0, 0.01), 0.5, (0.0, 1.0), "outflow",
                      200, 5e-6, 0.012, reconstructed=True))
_register(BenchmarkCase(
    name="shuosher", description="Shu-Osher sine-shock interaction",
    dim=1, domain=((-5.0, 5.0),), boundary="inflow-outflow", cells=500, dt=2e-3, t_final=1.8,
    model_factory=lambda bp: Euler1D(GAMMA), initial=_shu_osher,
    inflow={"left": euler_primitive_to_conserved(3.857143, 2.629369, 10.33333)},
    reconstructed=True))


def get_case(name: str) -> BenchmarkCase:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(BENCHMARKS)}") from None
