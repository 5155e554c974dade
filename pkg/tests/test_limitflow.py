import math

import numpy as np
import pytest
import sympy as sp

from mcac import geometry as G
from mcac import limitflow as F
from mcac.noise import NoiseConfig, mollified_bm

CUT = F.Cutoff()


def test_circle_geometry():
    s = F.circle_state(0.5, M=64)
    length, kbar, area = F.geometry(s)
    assert length == pytest.approx(math.pi, abs=1e-12)
    assert kbar == pytest.approx(2.0, abs=1e-12)
    assert area == pytest.approx(math.pi / 4, abs=1e-12)


def test_unit_circle_reconstruction():
    s = F.CurveState(kappa=np.ones(128), anchor=np.array([1.0, 0.0]))
    pts = F.reconstruct(s)
    np.testing.assert_allclose(np.hypot(pts[:, 0], pts[:, 1]), 1.0, atol=1e-12)
    np.testing.assert_allclose(pts[0], [1.0, 0.0], atol=1e-15)


@pytest.mark.parametrize("R", [0.1, 0.25, 0.4])
def test_circle_radius(R):
    pts = F.reconstruct(F.circle_state(R, M=64, center=(0.0, 0.0)))
    assert np.max(np.abs(np.hypot(pts[:, 0], pts[:, 1]) - R)) <= 1e-8


def test_ellipse_reconstruction():
    s = F.ellipse_state(0.3, 0.2, M=256, center=(0.0, 0.0))
    pts = F.reconstruct(s)
    ref = F.ellipse_point(0.3, 0.2, s.theta_grid)
    assert np.max(np.abs(pts - ref)) <= 1e-4
    assert F.geometry(s)[2] == pytest.approx(math.pi * 0.06, rel=1e-10)
    # circumcircle curvature of the vertex polygon is an independent oracle
    kc = G.circumcircle_curvature(pts)
    assert np.max(np.abs(kc - s.kappa) / s.kappa) <= 2e-3


def test_closure_and_convexity_guards():
    th = F.theta_grid(64)
    with pytest.raises(F.ClosureViolation):
        F.reconstruct(F.CurveState(kappa=1.0 / (1 + 0.5 * np.cos(th)), anchor=np.zeros(2)))
    with pytest.raises(F.NonConvex):
        F.geometry(F.CurveState(kappa=np.cos(th), anchor=np.zeros(2)))


def test_drift_on_circle():
    k = np.full(32, 2.0)
    np.testing.assert_allclose(F.drift_rhs(k, CUT, 0.0), 0.0, atol=1e-12)
    h = F.drift_rhs(k, CUT, 1.0) - F.drift_rhs(k, CUT, 0.0)
    np.testing.assert_allclose(h, 0.5 * 8 / (2 * math.pi), atol=1e-12)


def test_cutoff_properties():
    c = F.Cutoff(10.0)
    x = np.linspace(0.01, 40, 200_001)
    y = c.chi(x)
    inside = (x >= 0.1) & (x <= 10)
    assert np.array_equal(y[inside], x[inside])
    assert y.min() >= 0.75 / 10 - 1e-15 and y.max() <= 15 + 1e-12
    fd = np.gradient(y, x)
    assert np.max(np.abs(fd - c.dchi(x))[1:-1]) <= 1e-3
    assert np.all(c.dchi(x) >= 0)
    with pytest.raises(ValueError):
        F.Cutoff(0.5)


def test_cutoff_neutral_inside_band():
    s = F.ellipse_state(0.3, 0.2, M=64)
    a = F.integrate(s, 0.01, 1e-4, cutoff=F.Cutoff(), mode="det")
    b = F.integrate(s, 0.01, 1e-4, cutoff=F.Cutoff(50.0), mode="det")
    assert np.array_equal(a.final.kappa, b.final.kappa)


def test_circle_fixed_point():
    s = F.circle_state(0.25, M=32)
    r = F.integrate(s, 0.05, 1e-4, mode="det")
    assert np.max(np.abs(r.final.kappa - 4.0)) <= 1e-10


def test_stochastic_circle_closed_form():
    alpha, R0 = 0.5, 0.25
    path = mollified_bm(1e-2, 0.1, seed=2, cfg=NoiseConfig(beta_tilde=0.85, psi_variant="power"), dt=1e-5)
    r = F.integrate(F.circle_state(R0, M=16), 0.1, 1e-4, path=path, alpha=alpha)
    W = r.w
    ref = R0 ** 2 - (0.5 * alpha / math.pi) * (W - W[0])
    got = np.array([1.0 / s.kappa[0] ** 2 for s in r.states])
    assert np.max(np.abs(got - ref)) <= 1e-6
    centers = np.array([s.anchor - [1.0 / s.kappa[0], 0.0] for s in r.states])
    assert np.max(np.abs(centers - [0.5, 0.5])) <= 1e-6
    assert F.area_identity_check(r) <= 1e-4


def test_deterministic_ellipse():
    r = F.integrate(F.ellipse_state(0.3, 0.2, M=128), 0.1, 1e-4, mode="det")
    assert np.all(np.diff(r.length) <= 1e-10)
    assert F.area_identity_check(r) <= 1e-6
    c = F.reconstruct(r.final).mean(axis=0)
    assert np.max(np.abs(c - 0.5)) <= 1e-6
    assert r.kappa_max[-1] / r.kappa_min[-1] < r.kappa_max[0] / r.kappa_min[0]


def test_forced_ellipse_area():
    path = mollified_bm(1e-2, 0.05, seed=4, cfg=NoiseConfig(beta_tilde=0.5, psi_variant="power"), dt=1e-5)
    r = F.integrate(F.ellipse_state(0.3, 0.2, M=128), 0.05, 1e-4, path=path, alpha=0.5)
    assert F.area_identity_check(r) <= 1e-3


def test_step_guards():
    s = F.circle_state(0.25, M=256)
    with pytest.raises(F.StepRejected):
        F.step_stratonovich(s, None, None, 1e-2)
    s = F.circle_state(0.25, M=16, L_cut=4.5)
    with pytest.raises(F.CutoffExit):
        F.step_stratonovich(s, F.Cutoff(4.5), None, 1e-4, dw=0.1)
    r = F.integrate(s, 0.01, 1e-4, path=lambda t: 100 * t)
    assert r.stopped and r.stop_time <= 0.01


def test_ito_drift_constant_curvature():
    kap, C = sp.symbols("kappa C", positive=True)
    sigma = C * kap ** 3
    correction = sp.simplify(sp.Rational(1, 2) * sigma * sp.diff(sigma, kap))
    assert sp.simplify(correction - sp.Rational(3, 2) * C ** 2 * kap ** 5) == 0
    alpha = 0.7
    Cv = 0.5 * alpha / (2 * math.pi)
    g = F.ito_drift(np.full(16, 3.0), CUT, alpha)
    np.testing.assert_allclose(g, float(correction.subs({kap: 3.0, C: Cv})), rtol=1e-12)


def test_ito_drift_frechet():
    th = F.theta_grid(32)
    k = 2.0 + 0.4 * np.cos(2 * th) + 0.1 * np.sin(3 * th)
    cut = F.Cutoff(2.3)
    alpha = 0.8

    def h(x):
        return F.drift_rhs(x, cut, 1.0, alpha) - F.drift_rhs(x, cut, 0.0, alpha)

    step = 1e-6
    dh = (h(k + step * h(k)) - h(k - step * h(k))) / (2 * step)
    np.testing.assert_allclose(F.ito_drift(k, cut, alpha), 0.5 * dh, atol=1e-8)
    np.testing.assert_allclose(F.ito_drift(k, cut, 0.0), 0.0)


def test_ito_mode_without_noise_is_euler():
    s = F.ellipse_state(0.3, 0.2, M=32)
    a = F.step_ito(s, None, 0.0, 1e-4, alpha=0.0)
    rhs = F.drift_rhs(s.kappa, CUT, 0.0, alpha=0.0)
    np.testing.assert_allclose(a.kappa, s.kappa + 1e-4 * rhs, atol=1e-13)


def test_ensemble_matches_single_paths():
    rng = np.random.default_rng(0)
    inc = rng.normal(0, 1e-2, (3, 50))
    k0 = F.ellipse_state(0.3, 0.2, M=32).kappa
    batch = F.simulate_ensemble(k0, inc, 1e-4, alpha=0.5)
    for p in range(3):
        s = F.ellipse_state(0.3, 0.2, M=32)
        for i in range(50):
            s = F.step_stratonovich(s, None, None, 1e-4, alpha=0.5, dw=inc[p, i])
        np.testing.assert_allclose(batch[p], s.kappa, atol=1e-12)
