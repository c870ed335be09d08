"""Algebraic flux correction for hyperbolic conservation laws with limiter-based entropy fixes.

Edge-based P1/Q1 finite elements, a Lax-Friedrichs low-order scheme, monolithic
convex limiting of Galerkin or Roe targets and semi-discrete or fully discrete
entropy corrections, integrated with Heun's method.
"""

from .mesh import MeshTopology, build_line_mesh, build_quad_mesh
from .models import (Euler1D, FluxModel, InadmissibleStateError, KPP1D, KPP2D, LinearAdvection,
                     ScalarModel, ShallowWater1D)
from .limiters import ENTROPY_FIXES, LimiterConfig
from .integrator import (CFLViolation, FDINonConvergenceError, Pipeline, SolverAbort, TimeControls,
                         integrate, step)
from .benchmarks import BENCHMARKS, get_case
from .config import ConfigError, RunConfig, load_config, parse_config
from .runner import convergence, run

__version__ = "0.1.0"
