"""Mild noise: smooth approximations of Brownian motion.

A stopped Brownian path mollified at width 1/psi, and a rescaled smoothed
telegraph process. The derivatives grow like powers of psi and stay under
their a priori bounds; the mollified path converges to the Brownian one.
"""
import numpy as np

from mcac import noise

cfg = noise.NoiseConfig(beta_tilde=0.375, psi_variant="power")
for eps in (1e-2, 1e-4, 1e-8):
    p = noise.mollified_bm(eps, 1.0, seed=0, cfg=cfg, dt=1e-5)
    gap = np.max(np.abs(p.w - p.underlying_bm))
    ratios = [noise.ck_norm(p, k, order=1) / p.bound(k) for k in (1, 2, 3)]
    print(f"eps = {eps:.0e}: psi = {p.psi:7.1f}, sup |w - W| = {gap:.4f}, "
          f"norm/bound = " + ", ".join(f"{r:.1e}" for r in ratios))

# The nested-log rate of the theory barely moves away from one.
for variant in ("safe", "raw"):
    c = noise.NoiseConfig(psi_variant=variant)
    print(f"psi_{variant}(1e-8) = {noise.psi(1e-8, c):.10f}")

mcfg = noise.NoiseConfig(family="mixing", beta_tilde=0.125, psi_variant="power")
w1 = np.array([noise.mixing_noise(1e-8, 1.0, s, mcfg, dt=5e-5).w[-1] for s in range(300)])
print(f"mixing noise, psi = 10: mean w(1) = {w1.mean():+.3f}, var w(1) = {w1.var():.3f} (Brownian: 1)")
