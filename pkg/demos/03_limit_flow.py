"""The stochastic volume-preserving curvature flow of a convex curve.

An ellipse is evolved in Gauss-map coordinates. Without noise it rounds up
at constant area; with noise the area follows the driving path exactly,
A(t) = A(0) - (alpha |D| / 2) w(t). A final ensemble compares the Ito
scheme against Heun driven by smooth paths.
"""
import math

import numpy as np

from mcac import limitflow as F
from mcac import noise

e = F.ellipse_state(0.3, 0.2, M=128)
det = F.integrate(e, 0.2, 1e-4, mode="det", record_every=500)
for t, L, A, lo, hi in zip(det.times, det.length, det.area, det.kappa_min, det.kappa_max):
    print(f"t = {t:.2f}: length {L:.5f}, area {A:.6f}, kappa in [{lo:.3f}, {hi:.3f}]")

path = noise.mollified_bm(1e-2, 0.1, seed=3, cfg=noise.NoiseConfig(beta_tilde=0.85, psi_variant="power"),
                          dt=1e-5)
sto = F.integrate(e, 0.1, 1e-4, path=path, alpha=0.5, record_every=100)
print(f"noisy ellipse: area law residual {F.area_identity_check(sto):.1e}")

P, T = 400, 0.05
k0 = np.full(16, 2.0)
rng = np.random.default_rng(1)
ito = F.simulate_ensemble(k0, rng.normal(0, math.sqrt(1e-4), (P, 500)), 1e-4, F.Cutoff(10.0), "ito")[:, 0]
cfg = noise.NoiseConfig(beta_tilde=0.375, psi_variant="power")
inc = np.array([np.diff(noise.mollified_bm(1e-8, T, 100 + s, cfg, dt=1e-5).w) for s in range(P)])
strat = F.simulate_ensemble(k0, inc, 1e-5, F.Cutoff(10.0), "strat")[:, 0]
se = math.sqrt(ito.var() / P + strat.var() / P)
print(f"E kappa(T): Ito {ito.mean():.5f}, smooth-noise Heun {strat.mean():.5f}, "
      f"gap {abs(ito.mean() - strat.mean()) / se:.2f} standard errors")
