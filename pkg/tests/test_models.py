import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_states
from afc.models import (Euler1D, InadmissibleStateError, KPP1D, KPP2D, LinearAdvection,
                        ShallowWater1D)


MODELS = [KPP1D(), KPP2D(), LinearAdvection(1.5), ShallowWater1D(1.0), Euler1D(1.4)]
IDS = ["kpp1d", "kpp2d", "advection", "swe", "euler"]


def test_flux_examples():
    assert KPP1D().flux(np.array([[0.5]]))[0, 0, 0] == pytest.approx(0.0625)
    np.testing.assert_allclose(KPP2D().flux(np.array([[0.0]]))[0, 0], [0.0, 1.0])
    np.testing.assert_allclose(Euler1D(1.4).flux(np.array([[1.0, 0.0, 2.5]]))[0, :, 0],
                               [0.0, 1.0, 0.0], atol=1e-15)


def test_wave_speed_examples():
    m = KPP2D()
    rng = np.random.default_rng(0)
    u = random_states(m, rng, 5)
    np.testing.assert_array_equal(m.max_wave_speed(u, u[::-1], np.tile([[1.0, 0.0]], (5, 1))), 1.0)
    lin = LinearAdvection(-2.0)
    assert lin.max_wave_speed(np.array([[0.3]]), np.array([[0.3]]), np.array([[1.0]]))[0] == 2.0
    swe = ShallowWater1D(1.0)
    lam = swe.max_wave_speed(np.array([[1.0, 0.0]]), np.array([[0.1, 0.0]]), np.array([[1.0]]))
    assert lam[0] == pytest.approx(1.0)


def test_kpp1d_wave_speed_covers_interval():
    m = KPP1D()
    # u_i=0, u_j=1: max |f'| over [0, 1] is 1/2
    assert m.max_wave_speed(np.array([[0.0]]), np.array([[1.0]]), np.array([[1.0]]))[0] == 0.5
    rng = np.random.default_rng(1)
    a, b = rng.uniform(0, 1, 200), rng.uniform(0, 1, 200)
    lam = m.max_wave_speed(a[:, None], b[:, None], np.ones((200, 1)))
    for lo, hi, l in zip(np.minimum(a, b), np.maximum(a, b), lam):
        grid = np.linspace(lo, hi, 201)
        assert np.max(np.abs(m.derivative(grid))) <= l + 1e-15


def test_entropy_examples():
    swe = ShallowWater1D(1.0)
    u = np.array([[1.0, 0.0]])
    assert swe.entropy(u)[0] == pytest.approx(0.5)
    assert swe.entropy_flux(u)[0, 0] == pytest.approx(0.0)
    # psi = g h^2 v / 2 vanishes at rest; at (h, hv) = (1, 1) it is 1/2
    assert swe.entropy_potential(u)[0, 0] == 0.0
    assert swe.entropy_potential(np.array([[1.0, 1.0]]))[0, 0] == pytest.approx(0.5)
    eul = Euler1D(1.4)
    assert eul.entropy_potential(np.array([[1.0, 0.75, 89 / 32]]))[0, 0] == 0.75


def test_euler_entropy_variables_match_finite_differences():
    eul = Euler1D(1.4)
    u = np.array([1.0, 0.75, 89 / 32])
    v = eul.entropy_variables(u[None])[0]
    eps = 1e-6
    fd = np.empty(3)
    for k in range(3):
        e = np.zeros(3)
        e[k] = eps
        fd[k] = (eul.entropy((u + e)[None])[0] - eul.entropy((u - e)[None])[0]) / (2 * eps)
    np.testing.assert_allclose(v, fd, rtol=1e-6)


def test_admissibility_examples():
    assert KPP1D().admissible(np.array([[0.5]]))[0]
    assert not KPP1D().admissible(np.array([[1.1]]))[0]
    assert not ShallowWater1D().admissible(np.array([[-0.1, 0.0]]))[0]
    eul = Euler1D(1.4)
    assert not eul.admissible(np.array([[1.0, 0.0, 0.0]]))[0]
    assert not eul.admissible(np.array([[-1.0, 0.0, 1.0]]))[0]
    with pytest.raises(InadmissibleStateError):
        eul.check_admissible(np.array([[1.0, 2.0, 1.0]]))


def test_scalar_bound_rounding_slack():
    m = KPP2D()
    assert m.admissible(np.array([[math.pi / 4 * (1 - 1e-15)]]))[0]
    assert not m.admissible(np.array([[math.pi / 4 * (1 - 1e-9)]]))[0]


def test_kpp1d_continuous_at_half():
    m = KPP1D()
    lo = 0.25 * 0.5 * 0.5
    hi = 0.5 * 0.5 * (0.5 - 1) + 3 / 16
    assert abs(lo - hi) <= 1e-14
    qlo = 0.5**2 / 8 - 0.5**3 / 6
    qhi = 0.5**3 / 3 - 0.5**2 / 4 + 1 / 32
    assert abs(qlo - qhi) <= 1e-14
    assert m.entropy_flux(np.array([[0.5]]))[0, 0] == pytest.approx(qlo, abs=1e-15)


def test_kpp1d_entropy_flux_integral_oracle():
    # q(u) = int_0^u s f'(s) ds, evaluated by adaptive quadrature
    from scipy.integrate import quad
    m = KPP1D()
    for u in np.linspace(0, 1, 11):
        ref = quad(lambda s: s * float(m.derivative(s)), 0.0, u, points=[0.5])[0]
        assert m.entropy_flux(np.array([[u]]))[0, 0] == pytest.approx(ref, abs=1e-13)


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_entropy_flux_compatibility(model):
    # q' = v^T f' per space direction, central differences at 100 random states
    rng = np.random.default_rng(2)
    u = random_states(model, rng, 100)
    v = model.entropy_variables(u)
    eps = 1e-6
    for axis in range(model.d):
        dq = np.zeros((100, model.m))
        vf = np.zeros((100, model.m))
        for k in range(model.m):
            e = np.zeros(model.m)
            e[k] = eps * max(1.0, float(np.max(np.abs(u[:, k]))))
            h = e[k]
            dq[:, k] = (model.entropy_flux(u + e)[:, axis] - model.entropy_flux(u - e)[:, axis]) / (2 * h)
            df = (model.flux(u + e)[:, :, axis] - model.flux(u - e)[:, :, axis]) / (2 * h)
            vf[:, k] = np.einsum("nm,nm->n", v, df)
        scale = np.maximum(1.0, np.abs(dq))
        assert np.max(np.abs(dq - vf) / scale) < 1e-6


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_entropy_variables_are_gradient(model):
    rng = np.random.default_rng(3)
    u = random_states(model, rng, 100)
    v = model.entropy_variables(u)
    eps = 1e-6
    for k in range(model.m):
        e = np.zeros(model.m)
        e[k] = eps
        fd = (model.entropy(u + e) - model.entropy(u - e)) / (2 * eps)
        np.testing.assert_allclose(v[:, k], fd, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_potential_closed_form(model):
    rng = np.random.default_rng(4)
    u = random_states(model, rng, 100)
    expected = np.einsum("nk,nkd->nd", model.entropy_variables(u), model.flux(u)) - model.entropy_flux(u)
    np.testing.assert_allclose(model.entropy_potential(u), expected, atol=1e-12 * max(1, np.abs(expected).max()))


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_entropy_convex(model):
    rng = np.random.default_rng(5)
    u = random_states(model, rng, 100)
    eig = np.linalg.eigvalsh(model.entropy_hessian(u))
    assert eig.min() >= -1e-10


@pytest.mark.parametrize("model", [ShallowWater1D(1.0), Euler1D(1.4)], ids=["swe", "euler"])
def test_hessian_matches_finite_differences(model):
    rng = np.random.default_rng(6)
    u = random_states(model, rng, 20)
    H = model.entropy_hessian(u)
    eps = 1e-6
    for k in range(model.m):
        e = np.zeros(model.m)
        e[k] = eps
        col = (model.entropy_variables(u + e) - model.entropy_variables(u - e)) / (2 * eps)
        np.testing.assert_allclose(H[:, :, k], col, rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("model", [ShallowWater1D(1.0), Euler1D(1.4)], ids=["swe", "euler"])
def test_flux_jacobian_matches_finite_differences(model):
    rng = np.random.default_rng(7)
    u = random_states(model, rng, 20)
    n = np.ones((20, 1))
    J = model.flux_jacobian(u, n)
    eps = 1e-7
    for k in range(model.m):
        e = np.zeros(model.m)
        e[k] = eps
        col = (model.flux(u + e)[:, :, 0] - model.flux(u - e)[:, :, 0]) / (2 * eps)
        np.testing.assert_allclose(J[:, :, k], col, rtol=1e-5, atol=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 5), st.floats(-3, 3), st.floats(0.01, 5))
def test_euler_primitive_round_trip(rho, v, p):
    eul = Euler1D(1.4)
    u = eul.conserved(rho, v, p)[None]
    r2, v2, p2 = eul.primitive(u)
    np.testing.assert_allclose([r2[0], v2[0], p2[0]], [rho, v, p], rtol=1e-10, atol=1e-12)
