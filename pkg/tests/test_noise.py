import math

import numpy as np
import pytest
import sympy as sp

from mcac import noise as N

POWER = N.NoiseConfig(beta_tilde=0.375, psi_variant="power")


def _nested(L):
    return math.log(math.log(math.log(L)))


def test_psi_raw_value():
    cfg = N.NoiseConfig(psi_variant="raw")
    ref = _nested(abs(math.log(1e-8)))
    assert N.psi(1e-8, cfg) == pytest.approx(ref, rel=1e-14)
    assert N.psi(1e-8, cfg) == pytest.approx(0.06704741, abs=1e-8)


def test_psi_raw_domain():
    with pytest.raises(N.DomainError):
        N.psi(0.1, N.NoiseConfig(psi_variant="raw"))
    with pytest.raises(N.DomainError):
        N.psi(1.0, N.NoiseConfig())


def test_psi_safe_values():
    cfg = N.NoiseConfig()
    assert N.psi(1e-8, cfg) == pytest.approx(_nested(abs(math.log(1e-8)) + N.EEE), rel=1e-14)
    assert N.psi(1e-8, cfg) == pytest.approx(1.0000001172, abs=1e-10)
    assert N.psi(0.1, cfg) == pytest.approx(1.0000000147, abs=1e-10)
    eps = np.geomspace(1e-12, 0.5, 20)
    vals = [N.psi(e, cfg) for e in eps]
    assert np.all(np.diff(vals) < 0)


def test_psi_power():
    assert N.psi(1e-8, POWER) == pytest.approx(1000.0, rel=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        N.NoiseConfig(k_max=6, mollifier_order=6)
    with pytest.raises(ValueError):
        N.NoiseConfig(psi_variant="bogus")
    with pytest.raises(ValueError):
        N.NoiseConfig(beta_tilde=0.0)


def test_mollifier_mass_and_support():
    mol = N.Mollifier(6)
    s = np.linspace(0, 1, 200_001)
    assert np.trapezoid(mol(s), s) == pytest.approx(1.0, abs=1e-10)
    assert mol(np.array([-0.1, 0.0, 1.0, 1.2])).tolist() == [0.0] * 4


def test_mollifier_derivatives_against_sympy():
    mol = N.Mollifier(6)
    s = sp.symbols("s")
    eta = mol.C * sp.exp(-1 / (s * (1 - s)))
    pts = [0.2, 0.37, 0.5, 0.81]
    for k in range(5):
        expr = sp.diff(eta, s, k)
        ref = [float(expr.subs(s, p)) for p in pts]
        np.testing.assert_allclose(mol.derivative(np.array(pts), k), ref, rtol=1e-9, atol=1e-9)
    with pytest.raises(N.OrderUnavailable):
        mol.derivative(0.5, 7)


def test_path_basics():
    p = N.mollified_bm(1e-4, 0.5, seed=3, cfg=POWER, dt=1e-4)
    assert p.w[0] == 0.0
    assert p.derivs.shape == (4, p.t.size)
    assert p.h_eps >= 1
    assert p.h_eps >= np.max(np.abs(p.derivs))
    q = N.mollified_bm(1e-4, 0.5, seed=3, cfg=POWER, dt=1e-4)
    assert np.array_equal(p.w, q.w) and np.array_equal(p.derivs, q.derivs)


def test_finite_difference_consistency():
    cfg = N.NoiseConfig(beta_tilde=0.5, psi_variant="power")
    p = N.mollified_bm(1e-2, 1.0, seed=5, cfg=cfg, dt=1e-4)
    late = p.t[1:-1] > 2 / p.psi
    for k in range(2):
        lower = p.w if k == 0 else p.derivs[k - 1]
        fd = (lower[2:] - lower[:-2]) / (2 * p.dt)
        err = np.max(np.abs(fd - p.derivs[k][1:-1])[late])
        # Taylor remainder of the central difference
        assert err <= 0.5 * p.dt ** 2 * np.max(np.abs(p.derivs[k + 2]))


def test_stopping_rule():
    cfg = N.NoiseConfig(beta_tilde=0.05, psi_variant="power")
    p = N.mollified_bm(1e-2, 5.0, seed=1, cfg=cfg, dt=1e-3)
    stopped = p.consts["stopped"]
    assert np.max(np.abs(stopped)) <= p.psi
    hit = np.nonzero(np.abs(p.underlying_bm) >= p.psi)[0]
    assert hit.size
    assert np.all(stopped[hit[0]:] == stopped[hit[0]])
    assert np.max(np.abs(p.w)) <= p.psi * (1 + 1e-12)


def test_derivative_bounds_mollified():
    for seed in range(20):
        p = N.mollified_bm(1e-2, 1.0, seed, N.NoiseConfig(), dt=1e-4)
        for k in (1, 2, 3):
            assert N.ck_norm(p, k, order=1) <= p.bound(k)


def test_convergence_to_bm():
    errs = []
    for eps in (1e-2, 1e-4, 1e-8):
        e = [np.max(np.abs(N.mollified_bm(eps, 1.0, s, POWER, dt=1e-5).w
                           - N.mollified_bm(eps, 1.0, s, POWER, dt=1e-5).underlying_bm))
             for s in range(20)]
        errs.append(np.median(e))
    assert errs[0] > errs[1] > errs[2]


def test_telegraph_stationary():
    u, xi, _ = N.telegraph(200.0, seed=4, du=1e-2)
    assert set(np.unique(xi)) <= {-1.0, 1.0}
    assert abs(xi.mean()) <= 0.2
    lag = int(round(0.5 / 1e-2))
    corr = np.mean(xi[:-lag] * xi[lag:])
    assert corr == pytest.approx(math.exp(-1.0), abs=0.15)


def test_mixing_path():
    cfg = N.NoiseConfig(family="mixing", beta_tilde=0.125, psi_variant="power")
    p = N.mixing_noise(1e-8, 1.0, seed=2, cfg=cfg, dt=5e-5)
    assert p.w[0] == 0.0 and p.consts["A"] == 1.0
    for k in (1, 2):
        assert N.ck_norm(p, k, order=1) <= p.bound(k)


def test_ck_and_holder():
    p = N.mollified_bm(1e-2, 0.2, seed=0, cfg=N.NoiseConfig(), dt=1e-4)
    assert N.ck_norm(p, 0) == pytest.approx(np.max(np.abs(p.w)))
    with pytest.raises(N.OrderUnavailable):
        N.ck_norm(p, 5)
    t = np.linspace(0, 1, 1001)
    assert N.holder_norm(2 * t, 1.0, dt=t[1]) == pytest.approx(4.0)
    assert N.holder_norm(np.zeros(10), 0.5, dt=0.1) == 0.0


def test_g_eps():
    assert N.g_eps(1.0, 1).value == pytest.approx(math.exp(math.e), rel=1e-14)
    assert N.g_eps(1.1, 1).value == pytest.approx(28.60222901994192, rel=1e-12)
    big = N.g_eps(3.0, 1)
    assert big.overflow and math.isinf(big.value)
    with pytest.raises(ValueError):
        N.g_eps(0.5, 1)
