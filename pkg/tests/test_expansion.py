import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from mcac import expansion as E
from mcac import limitflow as F


def test_lambda0_circle(sigma):
    for R in (0.1, 0.25, 0.4):
        assert E.lambda0(F.circle_state(R, M=32), sigma, 0.0) == pytest.approx(1 / (sigma * R), rel=1e-12)


def test_lambda0_forced_unit_circle(sigma):
    s = F.circle_state(1.0, M=32)
    v = 2 * sigma * 2 * math.pi
    assert E.lambda0(s, sigma, v) == pytest.approx(1 / sigma - 1, rel=1e-12)


def test_lambda0_affine(sigma):
    s = F.ellipse_state(0.3, 0.2, M=64)
    vals = [E.lambda0(s, sigma, v, area_D=2.0) for v in (-1.0, 0.0, 1.0, 2.0)]
    slope = -2.0 / (2 * sigma * F.geometry(s)[0])
    np.testing.assert_allclose(np.diff(vals), slope, rtol=1e-12)


def test_normal_velocity(sigma):
    s = F.circle_state(0.25, M=32)
    lam = E.lambda0(s, sigma, 0.0)
    np.testing.assert_allclose(E.normal_velocity(s, sigma, lam), 0.0, atol=1e-12)
    e = F.ellipse_state(0.3, 0.2, M=64)
    V = E.normal_velocity(e, sigma, E.lambda0(e, sigma, 0.0))
    assert V[0] > 0 and V[16] < 0  # tips move in, flanks move out


def test_velocity_integral_is_area_rate(sigma):
    v = 0.7
    e = F.ellipse_state(0.3, 0.2, M=64)
    r = F.integrate(e, 1e-3, 1e-4, path=lambda t: v * t, alpha=1.0)
    rate = (r.area[-1] - r.area[0]) / 1e-3
    V = E.normal_velocity(e, sigma, E.lambda0(e, sigma, v))
    flux = 2 * math.pi / e.M * np.sum(V / e.kappa)
    assert flux == pytest.approx(-rate, rel=1e-4)


def test_outer_and_inner_corrections(cubic, standing, theta1):
    up, um = E.u0_outer(1.3, cubic)
    assert up == pytest.approx(-0.65) and um == pytest.approx(-0.65)
    u0 = E.u0_inner(2.0, theta1)
    np.testing.assert_allclose(u0, -2.0 * theta1.values)


def test_a0(cubic, standing, sigma, theta1):
    A, mom = E.a0(0.0, sigma, np.zeros_like(standing.values), standing, cubic)
    assert np.all(A == 0) and mom == 0
    _, X1 = E.a0(1.0, sigma, E.u0_inner(1.0, theta1), standing, cubic)
    _, X2 = E.a0(2.0, sigma, E.u0_inner(2.0, theta1), standing, cubic)
    assert abs(X1) <= 1e-9 and X2 == pytest.approx(4 * X1, abs=1e-12)
    with pytest.raises(E.GridMismatch):
        E.a0(1.0, sigma, np.zeros(7), standing, cubic)


def test_fourier_matrix():
    M = 16
    th = F.theta_grid(M)
    D = E.fourier_diff_matrix(M)
    np.testing.assert_allclose(D @ np.sin(3 * th), 3 * np.cos(3 * th), atol=1e-12)


def _forced_circle(R0, M, dt, T):
    def W(t):
        return 0.8 * (1 - np.cos(30 * t)) / 30 + 0.3 * t

    def v(t):
        return 0.8 * np.sin(30 * t) + 0.3

    c = 0.5
    n = int(round(T / dt))
    t = dt * np.arange(n + 1)
    kap = (R0 ** 2 - (c / math.pi) * W(t)) ** -0.5
    states = [F.CurveState(kappa=np.full(M, k), anchor=np.array([0.5 + 1 / k, 0.5]), t=ti)
              for k, ti in zip(kap, t)]
    return states, v(t), W, v


def _circle_oracle(R0, W, v, sigma, T, t_eval):
    c = 0.5

    def kappa(t):
        return (R0 ** 2 - (c / math.pi) * W(t)) ** -0.5

    def rhs(t, y):
        k, vv = kappa(t), v(t)
        dk = k ** 3 * c * vv / (2 * math.pi)
        dv = 0.8 * 30 * math.cos(30 * t)
        dlam = (-0.5 * dv * k + (2 * math.pi - 0.5 * vv) * dk) / (2 * math.pi * sigma)
        return [vv * k * k / (4 * math.pi) * y[0] - dlam * k / (8 * math.pi)]

    sol = solve_ivp(rhs, (0, T), [0.0], method="DOP853", rtol=1e-12, atol=1e-14, t_eval=t_eval)
    return sol.y[0]


def test_h1_forced_circle(sigma, standing, theta1):
    states, vs, W, v = _forced_circle(0.3, 32, 5e-5, 0.1)
    res = E.solve_h1(states, vs, sigma, standing, theta1)
    ref = _circle_oracle(0.3, W, v, sigma, 0.1, res.times)
    spread = np.max(res.h1, axis=1) - np.min(res.h1, axis=1)
    assert np.max(spread) <= 1e-10
    assert np.max(np.abs(res.h1[:, 0] - ref)) <= 1e-8


def test_h1_switches(sigma, standing, theta1):
    r = F.integrate(F.ellipse_state(0.3, 0.2, M=32), 0.02, 1e-3, mode="det")
    res = E.solve_h1(r.states, np.zeros(len(r.states)), sigma, standing, theta1,
                     include_b=False, include_nonlocal=False, include_forcing=False)
    assert np.max(np.abs(res.h1)) == 0.0


def test_h1_ellipse_regression(sigma, standing, theta1):
    r = F.integrate(F.ellipse_state(0.3, 0.2, M=64), 0.1, 1e-3, mode="det")
    res = E.solve_h1(r.states, np.zeros(len(r.states)), sigma, standing, theta1)
    assert res.h1.min() == pytest.approx(-0.009989632742, abs=1e-9)
    assert res.h1.max() == 0.0
    assert res.lambda1[-1] == pytest.approx(0.0736584552, abs=1e-8)
    assert not res.any_flagged


def test_h1_guards(sigma, standing, theta1):
    s = F.circle_state(0.3, M=16)
    bad = F.CurveState(kappa=-s.kappa, anchor=s.anchor, t=1e-3)
    with pytest.raises(E.NonConvexDuringRun):
        E.solve_h1([s, bad], [0.0, 0.0], sigma, standing, theta1)
    with pytest.raises(ValueError):
        E.solve_h1([s, s], [0.0], sigma, standing, theta1, dt=1e-3)
