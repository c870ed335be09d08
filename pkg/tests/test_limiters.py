import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import fde_vs_oracle, random_states, single_edge_mesh
from afc.diagnostics import es4_residuals, tadmor_residuals
from afc.lax_friedrichs import assemble_viscosity, bar_state, bar_states, low_order_rhs
from afc.limiters import (LimiterConfig, NodalEntropyData, berthon_states, berthon_viscosity,
                          edge_entropy_bounds, entropy_bound_ec, entropy_bound_ed, fde_fix,
                          fde_terms, fdi_final_flux, local_bounds, mcl_limit, sd_fix, stage_term)
from afc.mesh import build_line_mesh, build_quad_mesh
from afc.models import Euler1D, KPP1D, KPP2D, LinearAdvection, ShallowWater1D
from afc.targets import galerkin_target

SETUPS = {
    "kpp1d": (KPP1D(), lambda: build_line_mesh(16, (0, 1), "periodic")),
    "kpp2d": (KPP2D(), lambda: build_quad_mesh(5, 6, ((-2, 2), (-2.5, 1.5)))),
    "swe": (ShallowWater1D(1.0), lambda: build_line_mesh(16, (-1, 1), "periodic")),
    "euler": (Euler1D(1.4), lambda: build_line_mesh(16, (0, 1), "periodic")),
}


def _state(name, seed):
    model, make = SETUPS[name]
    mesh = make()
    u = random_states(model, np.random.default_rng(seed), mesh.num_nodes)
    visc = assemble_viscosity(mesh, u, model)
    flux = model.flux(u)
    udot = low_order_rhs(mesh, u, model, visc, flux=flux)
    return model, mesh, u, visc, flux, udot


# ---------------------------------------------------------------- MCL


def test_mcl_passes_admissible_targets_and_zero():
    model, mesh, u, visc, flux, udot = _state("kpp1d", 0)
    bars = bar_states(mesh, u, flux, visc.d)
    zero = np.zeros((mesh.num_edges, 1))
    np.testing.assert_array_equal(mcl_limit(mesh, u, visc.d, bars, zero, model), 0.0)
    # with loose bounds every flux survives unchanged
    f = np.random.default_rng(1).normal(size=(mesh.num_edges, 1)) * 1e-3
    wide = (np.full((mesh.num_nodes, 1), -10.0), np.full((mesh.num_nodes, 1), 10.0))
    np.testing.assert_array_equal(mcl_limit(mesh, u, visc.d, bars, f, model, bounds=wide), f)


def test_mcl_scalar_clip_brute_force():
    rng = np.random.default_rng(2)
    mesh = single_edge_mesh(0.5)
    model = LinearAdvection(1.0)
    for _ in range(300):
        d = rng.uniform(0.1, 2.0)
        bij, bji = rng.uniform(0, 1, 2)
        lo_i, lo_j = np.array([bij, bji]) - rng.uniform(0, 0.5, 2)
        hi_i, hi_j = np.array([bij, bji]) + rng.uniform(0, 0.5, 2)
        f = rng.normal() * 2.0
        bars = type("B", (), {})()
        bars.ij, bars.ji = np.array([[bij]]), np.array([[bji]])
        bounds = (np.array([[lo_i], [lo_j]]), np.array([[hi_i], [hi_j]]))
        fstar = mcl_limit(mesh, np.zeros((2, 1)), np.array([d]), bars, np.array([[f]]), model,
                          bounds=bounds)[0, 0]
        g = np.linspace(0.0, f, 20001)
        ok = ((bij + g / (2 * d) <= hi_i + 1e-14) & (bij + g / (2 * d) >= lo_i - 1e-14)
              & (bji - g / (2 * d) <= hi_j + 1e-14) & (bji - g / (2 * d) >= lo_j - 1e-14))
        # feasible set is an interval starting at 0
        best = g[max(np.argmin(ok) - 1, 0)] if not ok.all() else f
        assert abs(fstar - best) <= abs(f) / 20000 + 1e-14
        assert fstar * f >= 0.0 and abs(fstar) <= abs(f)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(sorted(SETUPS)), st.integers(0, 2**31 - 1), st.floats(0.1, 10.0))
def test_mcl_limited_bar_states_in_bounds(name, seed, scale):
    model, mesh, u, visc, flux, udot = _state(name, seed)
    bars = bar_states(mesh, u, flux, visc.d)
    f = galerkin_target(mesh, u, udot, visc).f * scale
    fstar = mcl_limit(mesh, u, visc.d, bars, f, model)
    umin, umax = local_bounds(mesh, u, bars)
    d2 = 2.0 * visc.d[:, None]
    lij, lji = bars.ij + fstar / d2, bars.ji - fstar / d2
    tol = 1e-12 * (1.0 + np.abs(u).max())
    i, j = mesh.i, mesh.j
    assert np.all(lij <= umax[i] + tol) and np.all(lij >= umin[i] - tol)
    assert np.all(lji <= umax[j] + tol) and np.all(lji >= umin[j] - tol)
    assert np.all(model.admissible(lij)) and np.all(model.admissible(lji))
    assert np.all(fstar * f >= 0.0) and np.all(np.abs(fstar) <= np.abs(f) + 1e-15)


# ---------------------------------------------------------------- entropy bounds


def _kpp1d_edges(n, seed):
    model = KPP1D()
    rng = np.random.default_rng(seed)
    ui, uj = rng.uniform(0, 1, (n, 1)), rng.uniform(0, 1, (n, 1))
    c = rng.choice([-0.5, 0.5], size=(n, 1))
    d = model.max_wave_speed(ui, uj, np.sign(c)) * np.abs(c[:, 0])
    return model, ui, uj, c, d


def _bound_args(model, ui, uj, c, d):
    ni, nj = NodalEntropyData.from_state(model, ui), NodalEntropyData.from_state(model, uj)
    return ni, nj, (ui, uj, ni.v, nj.v, ni.flux, nj.flux, ni.psi, nj.psi, c, d)


def test_ec_bound_nonnegative_and_guermond_popov():
    model, ui, uj, c, d = _kpp1d_edges(10_000, 3)
    ni, nj, args = _bound_args(model, ui, uj, c, d)
    q = entropy_bound_ec(*args)
    assert q.min() >= -1e-14
    same = entropy_bound_ec(ui, ui, ni.v, ni.v, ni.flux, ni.flux, ni.psi, ni.psi, c, d)
    np.testing.assert_array_equal(same, 0.0)
    # 2 d (eta(ubar) - (eta_i + eta_j)/2) <= -(q_j - q_i).c
    ub = bar_state(ui, uj, c, d, model)
    lhs = 2 * d * (model.entropy(ub) - 0.5 * (ni.eta + nj.eta))
    rhs = -np.einsum("kd,kd->k", nj.q - ni.q, c)
    assert np.all(lhs <= rhs + 1e-14)


def test_ed_bound_properties():
    model, ui, uj, c, d = _kpp1d_edges(10_000, 4)
    ni, nj, args = _bound_args(model, ui, uj, c, d)
    q_ec = entropy_bound_ec(*args)
    q_ed = entropy_bound_ed(q_ec, ni.v, nj.v, ni.flux, nj.flux, model.flux(0.5 * (ui + uj)), c)
    assert np.all(q_ed <= q_ec + 1e-15) and np.all(q_ed >= 0.0)
    # linear flux: f_i + f_j = 2 f(mid), no correction
    lin = LinearAdvection(0.7)
    li, lj = NodalEntropyData.from_state(lin, ui), NodalEntropyData.from_state(lin, uj)
    q = entropy_bound_ec(ui, uj, li.v, lj.v, li.flux, lj.flux, li.psi, lj.psi, c, d + 0.7 * 0.5)
    q_lin = entropy_bound_ed(q, li.v, lj.v, li.flux, lj.flux, lin.flux(0.5 * (ui + uj)), c)
    np.testing.assert_allclose(q_lin, np.maximum(0.0, q), atol=1e-15)
    same = entropy_bound_ed(np.zeros(5), ni.v[:5], ni.v[:5], ni.flux[:5], ni.flux[:5], ni.flux[:5], c[:5])
    np.testing.assert_array_equal(same, 0.0)


@pytest.mark.parametrize("name", sorted(SETUPS))
def test_bounds_nonnegative_with_gms_viscosity(name):
    model, mesh, u, visc, flux, udot = _state(name, 5)
    nodal = NodalEntropyData.from_state(model, u, flux)
    q_ec = edge_entropy_bounds(mesh, nodal, visc.d, model, "ec")
    q_ed = edge_entropy_bounds(mesh, nodal, visc.d, model, "ed")
    assert q_ec.min() >= -1e-12 * max(1.0, np.abs(q_ec).max())
    assert np.all(q_ed <= np.maximum(q_ec, 0.0) + 1e-14)


# ---------------------------------------------------------------- SD fix


def test_sd_fix_examples():
    one = np.array([[1.0]])
    assert sd_fix(np.zeros((1, 1)), [0.0], [0.0], one, one)[0] == 1.0
    # (v_i - v_j) f* <= 0: no production, no correction
    assert sd_fix(np.array([[-2.0]]), [0.0], [0.0], np.array([[1.0]]), np.array([[0.0]]))[0] == 1.0
    a = sd_fix(np.array([[1.0]]), [0.2], [0.3], np.array([[1.0]]), np.array([[0.0]]), delta=0.01)[0]
    assert a == pytest.approx(0.41 / 1.01)
    assert a == pytest.approx(0.40594, abs=1e-5)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(SETUPS)), st.integers(0, 2**31 - 1), st.sampled_from(["ec", "ed"]),
       st.floats(1e-4, 0.5))
def test_sd_fix_enforces_tadmor(name, seed, kind, delta):
    model, mesh, u, visc, flux, udot = _state(name, seed)
    bars = bar_states(mesh, u, flux, visc.d)
    fstar = mcl_limit(mesh, u, visc.d, bars, galerkin_target(mesh, u, udot, visc).f, model)
    nodal = NodalEntropyData.from_state(model, u, flux)
    q = edge_entropy_bounds(mesh, nodal, visc.d, model, kind)
    alpha = sd_fix(fstar, q, q, nodal.v[mesh.i], nodal.v[mesh.j], delta)
    assert np.all((alpha >= 0) & (alpha <= 1))
    g = alpha[:, None] * fstar
    res = tadmor_residuals(mesh, nodal, visc.d, g)
    slack = delta * np.linalg.norm(fstar, axis=1) + 1e-12
    assert np.all(res <= slack)
    # tighter bounds never give larger correction factors
    tight = sd_fix(fstar, 0.5 * q, 0.5 * q, nodal.v[mesh.i], nodal.v[mesh.j], delta)
    assert np.all(tight <= alpha + 1e-15)


# ---------------------------------------------------------------- FDE fix


def test_fde_zero_flux_gives_one():
    model, mesh, u, visc, flux, udot = _state("kpp1d", 6)
    q = np.ones(mesh.num_edges)
    alpha = fde_fix(mesh, u, udot, np.zeros((mesh.num_edges, 1)), q, 1e-3, model)
    np.testing.assert_array_equal(alpha, 1.0)


def _sd_prelimited(name, seed, kind="ed"):
    model, mesh, u, visc, flux, udot = _state(name, seed)
    bars = bar_states(mesh, u, flux, visc.d)
    fstar = mcl_limit(mesh, u, visc.d, bars, galerkin_target(mesh, u, udot, visc).f, model)
    nodal = NodalEntropyData.from_state(model, u, flux)
    q = edge_entropy_bounds(mesh, nodal, visc.d, model, kind)
    g = sd_fix(fstar, q, q, nodal.v[mesh.i], nodal.v[mesh.j])[:, None] * fstar
    return model, mesh, u, visc, udot, g, q


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(sorted(SETUPS)), st.integers(0, 2**31 - 1), st.floats(0.01, 1.0))
def test_fde_enforces_es4(name, seed, cfl):
    model, mesh, u, visc, udot, g, q = _sd_prelimited(name, seed)
    dt = cfl * float(np.min(mesh.lumped_mass / (-2.0 * visc.diag)))
    alpha = fde_fix(mesh, u, udot, g, q, dt, model)
    assert np.all((alpha >= 0) & (alpha <= 1))
    res, scale = es4_residuals(mesh, model, u, udot, alpha[:, None] * g, q, dt)
    assert np.all(res <= 1e-10 * (1.0 + scale))


def test_fde_small_dt_keeps_sd_fluxes():
    # as dt -> 0 the condition is the summed entropy inequality, already met
    model, mesh, u, visc, udot, g, q = _sd_prelimited("kpp1d", 7, kind="ec")
    P, Q, *_ = fde_terms(mesh, u, udot, g, q, 0.0, model)
    assert np.all(Q >= 0.0)
    alpha = fde_fix(mesh, u, udot, g, q, 1e-14, model)
    res, scale = es4_residuals(mesh, model, u, udot, alpha[:, None] * g, q, 1e-14)
    assert np.all(res <= 1e-10 * (1.0 + scale))


def test_fde_never_exceeds_es3_oracle():
    rng = np.random.default_rng(8)
    for _ in range(300):
        alpha, oracle = fde_vs_oracle(rng)
        assert alpha <= oracle + 1e-12


# ---------------------------------------------------------------- Berthon


def test_berthon_star_states_average_to_bar_state():
    rng = np.random.default_rng(9)
    for model in (KPP1D(), ShallowWater1D(1.0), Euler1D(1.4)):
        ui, uj = random_states(model, rng, 200), random_states(model, rng, 200)
        c = rng.choice([-0.5, 0.5], size=(200, 1))
        d = model.max_wave_speed(ui, uj, np.sign(c)) * 0.5
        af = rng.normal(size=ui.shape)
        si, sj = berthon_states(ui, uj, model.flux(ui), model.flux(uj), c, d, af)
        np.testing.assert_allclose(si + sj, 2 * bar_state(ui, uj, c, d, model), atol=1e-12)


def test_berthon_viscosity_branches():
    model = KPP1D()
    u = np.array([[0.3]])
    f = model.flux(u)
    c, d = np.array([[0.5]]), np.array([0.25])
    assert berthon_viscosity(u, u, f, f, c, d, np.array([[0.1]]), model)[0] == 0.0
    rng = np.random.default_rng(10)
    ui, uj = rng.uniform(0, 1, (2000, 1)), rng.uniform(0, 1, (2000, 1))
    c = rng.choice([-0.5, 0.5], size=(2000, 1))
    d = model.max_wave_speed(ui, uj, np.sign(c)) * 0.5
    af = rng.normal(size=(2000, 1)) * 0.05
    fi, fj = model.flux(ui), model.flux(uj)
    dfd = berthon_viscosity(ui, uj, fi, fj, c, d, af, model)
    assert np.all((dfd >= 0) & (dfd <= d))
    # independent evaluation of the production P and the entropy defect D
    si, sj = berthon_states(ui, uj, fi, fj, c, d, af)
    ok = model.admissible(si) & model.admissible(sj)
    D = 2 * model.entropy(0.5 * (ui + uj)) - model.entropy(ui) - model.entropy(uj)
    P = d * (model.entropy(si) + model.entropy(sj) - model.entropy(ui) - model.entropy(uj)) \
        + np.einsum("kd,kd->k", model.entropy_flux(uj) - model.entropy_flux(ui), c)
    no_production = ok & (P * D >= 0)
    np.testing.assert_array_equal(dfd[no_production], 0.0)
    trig = ok & (P * D < 0)
    np.testing.assert_allclose(dfd[trig], np.minimum(-P[trig] / (2 * D[trig]), d[trig]), rtol=1e-12)
    np.testing.assert_array_equal(dfd[~ok], d[~ok])


# ---------------------------------------------------------------- FDI final flux


def test_fdi_flux_steady_state_vanishes():
    model, mesh, u, visc, flux, udot = _state("kpp1d", 11)
    u = np.full_like(u, 0.4)
    flux = model.flux(u)
    visc = assemble_viscosity(mesh, u, model)
    zero = np.zeros((mesh.num_edges, 1))
    taus = [stage_term(mesh, u, flux, visc.d, zero) for _ in range(2)]
    f = fdi_final_flux(mesh, taus, (0.5, 0.5), u, flux, visc.d)
    np.testing.assert_allclose(f, 0.0, atol=1e-15)


def test_fdi_flux_single_stage_reduces_to_stage_flux():
    model, mesh, u, visc, flux, udot = _state("kpp2d", 12)
    g = np.random.default_rng(13).normal(size=(mesh.num_edges, 1))
    tau = stage_term(mesh, u, flux, visc.d, g)
    f = fdi_final_flux(mesh, [tau], (1.0,), u, flux, visc.d)
    np.testing.assert_allclose(f, g, atol=1e-13)


def test_fdi_flux_conservative():
    model, mesh, u, visc, flux, udot = _state("euler", 14)
    rng = np.random.default_rng(15)
    taus = [stage_term(mesh, u, flux, visc.d, rng.normal(size=(mesh.num_edges, 3))) for _ in range(2)]
    f = fdi_final_flux(mesh, taus, (0.5, 0.5), u, flux, visc.d)
    np.testing.assert_allclose(mesh.scatter(f, -f).sum(axis=0), 0.0, atol=1e-12)


def test_limiter_config_validation():
    assert LimiterConfig(entropy_fix="FDE").entropy_fix == "fde"
    assert not LimiterConfig().sd_active and LimiterConfig(entropy_fix="berthon").sd_active
    for bad in ({"entropy_fix": "magic"}, {"bound_kind": "xx"}, {"delta": 0.0},
                {"fdi_max_iterations": 0}):
        with pytest.raises(ValueError):
            LimiterConfig(**bad)
