"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary. Tolerances are pinned below.
"""
import math
import time

import numpy as np
import pytest

from conftest import record
from mcac import acpde, expansion, harness, limitflow, noise, profile
from mcac.reaction import make_cubic

TOL = {
    "c1_tanh": 1e-6, "c1_seconds": 1.0,
    "c2_dual": 1e-5, "c2_value": 1e-6,
    "c3_slope": 1e-3,
    "c4_residual": 1e-6, "c4_ends": 1e-3, "c4_solvability": 1e-8,
    "c5_forced": 1e-8, "c5_unforced": 1e-10, "c5_seconds": 120.0,
    "c6_flow": 1e-10,
    "c7": 1e-4,
    "c8": 1e-3,
    "c10_cosine": 0.999,
    "c11_seconds": 1800.0,
    "c12_se": 3.0,
    "c13_oracle": 1e-8, "c13_spread": 1e-10,
}
SIGMA_EXACT = 3 / math.sqrt(2)


def _check(number, title, ok, detail):
    record(number, title, ok, detail)
    assert ok, detail


def test_c01_profile_oracle():
    b = make_cubic()
    t0 = time.perf_counter()
    p = profile.solve_standing(b)
    elapsed = time.perf_counter() - t0
    mask = np.abs(p.rho) <= 10
    err = float(np.max(np.abs(p.values - np.tanh(p.rho / math.sqrt(2)))[mask]))
    _check(1, "profile oracle", err <= TOL["c1_tanh"] and elapsed < TOL["c1_seconds"],
           f"sup err {err:.2e} (tol {TOL['c1_tanh']:g}), {elapsed:.2f} s (< {TOL['c1_seconds']:g} s)")


def test_c02_sigma_identity(standing):
    sa, sb = profile.sigma_bar(standing)
    ok = (abs(sa - sb) <= TOL["c2_dual"] and abs(sa - SIGMA_EXACT) <= TOL["c2_value"]
          and abs(sb - SIGMA_EXACT) <= TOL["c2_value"])
    _check(2, "sigma dual identity", ok,
           f"sigma_a {sa:.9f}, sigma_b {sb:.9f}, |diff| {abs(sa - sb):.1e}, exact {SIGMA_EXACT:.9f}")


def test_c03_speed_slope(cubic, sigma):
    slope = (profile.solve_traveling(cubic, 1e-3).c - profile.solve_traveling(cubic, -1e-3).c) / 2e-3
    _check(3, "travelling-wave slope", abs(slope - sigma) <= TOL["c3_slope"],
           f"c'(0) {slope:.7f} vs sigma {sigma:.7f} (tol {TOL['c3_slope']:g})")


def test_c04_theta1(standing, sigma, theta1):
    g = 1 - sigma * standing.derivative
    solv = abs(float(np.trapezoid(g * standing.derivative, standing.rho)))
    ends = max(abs(theta1.values[0] - 0.5), abs(theta1.values[-1] - 0.5))
    ok = (theta1.residual <= TOL["c4_residual"] and ends <= TOL["c4_ends"]
          and solv <= TOL["c4_solvability"])
    _check(4, "theta_1 contract", ok,
           f"residual {theta1.residual:.1e}, |theta(+-R) - 1/2| {ends:.1e}, solvability {solv:.1e}")


def test_c05_mass_ledger(cubic, standing):
    eps, N, T = 0.04, 128, 0.25
    dt = acpde.stable_dt(eps, cubic)
    n = math.ceil(T / dt)
    dt = T / n
    curve = limitflow.ellipse_state(0.3, 0.2, M=128)
    path = noise.mollified_bm(eps, T, seed=0, cfg=noise.NoiseConfig(psi_variant="power"), dt=dt)
    t0 = time.perf_counter()
    f = acpde.init_from_curve(curve, eps, N, profile=standing, alpha=0.5)
    _, forced, _ = acpde.run(f, cubic, path, T, dt)
    f = acpde.init_from_curve(curve, eps, N, profile=standing, alpha=0.0)
    _, free, _ = acpde.run(f, cubic, None, T, dt)
    elapsed = time.perf_counter() - t0
    a, b = forced.max_residual(), free.max_residual()
    ok = a <= TOL["c5_forced"] and b <= TOL["c5_unforced"] and elapsed < TOL["c5_seconds"]
    _check(5, "mass ledger", ok, f"alpha=0.5: {a:.1e} (tol 1e-8), alpha=0: {b:.1e} (tol 1e-10), {elapsed:.1f} s")


def test_c06_circle_fixed_point(cubic, standing):
    eps, N, T, R = 0.04, 128, 0.2, 0.25
    dt = acpde.stable_dt(eps, cubic)
    n = math.ceil(T / dt)
    f = acpde.init_radial((0.5, 0.5), R, eps, N, profile=standing)
    f, _, _ = acpde.run(f, cubic, None, T, T / n)
    (level,) = acpde.extract_zero_level(f)
    radius = float(np.mean(np.hypot(level[:, 0] - 0.5, level[:, 1] - 0.5)))
    drift = abs(radius - R)
    r = limitflow.integrate(limitflow.circle_state(R, M=256), T, 1e-4, mode="det")
    kdrift = float(np.max(np.abs(r.final.kappa - 1 / R)))
    ok = drift <= eps + f.dx and kdrift <= TOL["c6_flow"]
    _check(6, "circle fixed point", ok,
           f"phase-field radius drift {drift:.4f} (tol eps + dx = {eps + f.dx:.4f}), kappa drift {kdrift:.1e}")


def test_c07_stochastic_circle():
    alpha, R0 = 0.5, 0.25
    cfg = noise.NoiseConfig(beta_tilde=0.85, psi_variant="power")
    path = noise.mollified_bm(1e-2, 0.1, seed=11, cfg=cfg, dt=1e-5)
    r = limitflow.integrate(limitflow.circle_state(R0, M=256), 0.1, 1e-4, path=path, alpha=alpha)
    c = 0.5
    ref = R0 ** 2 - (c * alpha / math.pi) * r.w
    got = np.array([1 / s.kappa ** 2 for s in r.states])
    err = float(np.max(np.abs(got - ref[:, None])))
    _check(7, "stochastic circle closed form", err <= TOL["c7"] and not r.stopped,
           f"max |kappa^-2 - closed form| {err:.1e} (tol {TOL['c7']:g})")


def test_c08_area_law():
    cfg = noise.NoiseConfig(beta_tilde=0.85, psi_variant="power")
    path = noise.mollified_bm(1e-2, 0.1, seed=12, cfg=cfg, dt=1e-5)
    r = limitflow.integrate(limitflow.ellipse_state(0.3, 0.2, M=256), 0.1, 1e-4, path=path, alpha=0.5)
    err = limitflow.area_identity_check(r)
    _check(8, "area law", err <= TOL["c8"] and not r.stopped, f"max residual {err:.1e} (tol {TOL['c8']:g})")


def test_c09_noise_bounds():
    worst = 0.0
    cfg = noise.NoiseConfig()
    for seed in range(100):
        p = noise.mollified_bm(1e-2, 1.0, seed, cfg, dt=1e-4)
        for k in (1, 2, 3):
            worst = max(worst, noise.ck_norm(p, k, order=1) / p.bound(k))
    mcfg = noise.NoiseConfig(family="mixing")
    mworst = 0.0
    for seed in range(100):
        p = noise.mixing_noise(1e-2, 1.0, seed, mcfg)
        for k in (1, 2):
            mworst = max(mworst, noise.ck_norm(p, k, order=1) / p.bound(k))
    _check(9, "noise derivative bounds", worst <= 1 and mworst <= 1,
           f"max norm/bound: mollified {worst:.2e}, mixing {mworst:.2e} (must be <= 1)")


def test_c10_spectral_probe(standing):
    parts, ok = [], True
    for eps in (0.2, 0.1):
        ev = profile.principal_eigenvalue(standing, eps)
        env = math.exp(-standing.decay_rate / eps)
        ok &= abs(ev.value) <= env and ev.cosine >= TOL["c10_cosine"]
        parts.append(f"eps {eps}: |lambda| {abs(ev.value):.1e} <= {env:.1e}, cosine {ev.cosine:.6f}")
    _check(10, "spectral probe", ok, "; ".join(parts))


def test_c11_sharp_interface_convergence(tmp_path):
    cfg = harness.ExperimentConfig(out_dir=str(tmp_path))
    t0 = time.perf_counter()
    records, summary = harness.converge(cfg)
    elapsed = time.perf_counter() - t0
    med = [row["median_sup_hausdorff"] for row in summary]
    ok = (harness.strictly_decreasing(med) and len(cfg.seeds) == 8
          and [row["eps"] for row in summary] == [0.08, 0.04, 0.02] and elapsed <= TOL["c11_seconds"])
    ledger = max(row["max_ledger"] for row in summary)
    stopped = sum(row["n_stopped"] for row in summary)
    _check(11, "sharp-interface convergence", ok,
           "medians " + ", ".join(f"{m:.4f}" for m in med)
           + f"; ledger {ledger:.1e}; stopped {stopped}; {elapsed:.0f} s")


def test_c12_ito_stratonovich():
    P, T, kappa0, alpha = 1000, 0.05, 2.0, 1.0
    cut = limitflow.Cutoff(10.0)
    k0 = np.full(16, kappa0)
    dt_i = 1e-4
    rng = np.random.default_rng(20261014)
    inc = rng.normal(0.0, math.sqrt(dt_i), (P, int(round(T / dt_i))))
    ito = limitflow.simulate_ensemble(k0, inc, dt_i, cut, mode="ito", alpha=alpha)[:, 0]
    cfg = noise.NoiseConfig(beta_tilde=0.375, psi_variant="power")
    dt_s = 1e-5
    inc = np.array([np.diff(noise.mollified_bm(1e-8, T, 10_000 + s, cfg, dt=dt_s).w) for s in range(P)])
    strat = limitflow.simulate_ensemble(k0, inc, dt_s, cut, mode="strat", alpha=alpha)[:, 0]
    se = math.sqrt(ito.var(ddof=1) / P + strat.var(ddof=1) / P)
    gap = abs(ito.mean() - strat.mean())
    _check(12, "Ito/Stratonovich weak consistency", gap <= TOL["c12_se"] * se,
           f"means {ito.mean():.5f} vs {strat.mean():.5f}, gap {gap / se:.2f} SE (tol {TOL['c12_se']:g})")


def test_c13_h1_circle(sigma, standing, theta1):
    from test_expansion import _circle_oracle, _forced_circle
    states, vs, W, v = _forced_circle(0.3, 32, 2.5e-5, 0.1)
    res = expansion.solve_h1(states, vs, sigma, standing, theta1)
    ref = _circle_oracle(0.3, W, v, sigma, 0.1, res.times)
    err = float(np.max(np.abs(res.h1[:, 0] - ref)))
    spread = float(np.max(np.max(res.h1, axis=1) - np.min(res.h1, axis=1)))
    _check(13, "h_1 circle reduction", err <= TOL["c13_oracle"] and spread <= TOL["c13_spread"],
           f"oracle error {err:.1e} (tol 1e-8), theta spread {spread:.1e} (tol 1e-10)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
