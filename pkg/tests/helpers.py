"""Shared sampling helpers for the test suite."""

import math

import numpy as np

from afc.limiters import NodalEntropyData, entropy_bound_ec, fde_fix
from afc.models import KPP1D, KPP2D, LinearAdvection, ShallowWater1D


def random_states(model, rng, n):
    if isinstance(model, KPP1D):
        return rng.uniform(0, 1, (n, 1))
    if isinstance(model, KPP2D):
        return rng.uniform(math.pi / 4, 3.5 * math.pi, (n, 1))
    if isinstance(model, LinearAdvection):
        return rng.normal(size=(n, 1))
    if isinstance(model, ShallowWater1D):
        h = rng.uniform(0.05, 2.0, n)
        return np.stack([h, h * rng.uniform(-2, 2, n)], axis=1)
    rho = rng.uniform(0.05, 3.0, n)
    v = rng.uniform(-2, 2, n)
    p = rng.uniform(0.05, 5.0, n)
    return model.conserved(rho, v, p)


def single_edge_mesh(c=0.5, m_i=1.0, m_j=1.0, m_ij=0.0):
    """Two nodes joined by one edge with c_ji = -c_ij; no boundary terms."""
    from afc.mesh import MeshTopology
    c = np.atleast_1d(np.asarray(c, dtype=float))
    dim = c.size
    return MeshTopology(
        dim=dim, coords=np.zeros((2, dim)), lumped_mass=np.array([m_i, m_j], dtype=float),
        mass_diag=np.array([m_i, m_j], dtype=float) - m_ij, c_diag=np.zeros((2, dim)),
        edges=np.array([[0, 1]]), edge_mass=np.array([m_ij], dtype=float),
        c_ij=c[None, :].copy(), c_ji=-c[None, :].copy(), periodic=True,
        shape=(1,) * dim, extent=((0.0, 1.0),) * dim)


def es3_oracle(a_i, a_j, b_i, b_j, Q_i, Q_j):
    """Largest alpha in [0, 1] with alpha a + alpha^2 b <= Q at both nodes (bisection)."""
    def ok(x):
        return x * a_i + x * x * b_i <= Q_i and x * a_j + x * x * b_j <= Q_j
    if not ok(0.0):
        return 0.0
    if ok(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def fde_vs_oracle(rng):
    """FDE correction factor and the ES3 bisection optimum on a random two-node KPP edge."""
    model = KPP1D()
    c = rng.choice([-0.5, 0.5]) * rng.uniform(0.2, 2.0)
    m_i, m_j = rng.uniform(0.05, 1.0, 2)
    mesh = single_edge_mesh(c, m_i, m_j)
    u = rng.uniform(0, 1, (2, 1))
    udot = rng.normal(size=(2, 1)) * 0.1
    f = rng.normal(size=(1, 1))
    nodal = NodalEntropyData.from_state(model, u)
    d = model.max_wave_speed(u[:1], u[1:], np.sign([[c]])) * abs(c)
    q = entropy_bound_ec(u[:1], u[1:], nodal.v[:1], nodal.v[1:], nodal.flux[:1], nodal.flux[1:],
                         nodal.psi[:1], nodal.psi[1:], np.array([[c]]), d)
    # CFL-admissible steps keep most instances feasible
    dt = rng.uniform(0.0, 1.0) * min(m_i, m_j) / (2.0 * max(d[0], 1e-12))
    alpha = fde_fix(mesh, u, udot, f, q, dt, model)[0]
    # ES3 for a single edge: the sum of fluxes is the flux itself
    eta2 = model.hessian_bound()
    half = 0.5 * (nodal.v[0, 0] - nodal.v[1, 0]) * f[0, 0]
    lin = half + 0.5 * dt * eta2 * (udot[0, 0] - udot[1, 0]) * f[0, 0]
    quad_i, quad_j = 0.5 * dt / m_i * eta2 * f[0, 0] ** 2, 0.5 * dt / m_j * eta2 * f[0, 0] ** 2
    Q_i = q[0] - 0.5 * dt * m_i * eta2 * udot[0, 0] ** 2
    Q_j = q[0] - 0.5 * dt * m_j * eta2 * udot[1, 0] ** 2
    return alpha, es3_oracle(lin, lin, quad_i, quad_j, Q_i, Q_j)
