"""Travelling waves of the cubic reaction and the constants they carry.

Solves the standing wave, checks it against tanh(rho/sqrt 2), computes the
inverse surface tension two ways, follows the wave speed c(a) through
a = 0 and probes the principal eigenvalue of the linearised operator.
"""
import math

import numpy as np

from mcac import profile
from mcac.reaction import make_cubic, validate

b = make_cubic()
print(validate(b))

m = profile.solve_standing(b)
err = np.max(np.abs(m.values - np.tanh(m.rho / math.sqrt(2)))[np.abs(m.rho) <= 10])
print(f"standing wave: sup |m - tanh| on [-10, 10] = {err:.2e}, tail rate {m.decay_rate:.6f}")

sa, sb = profile.sigma_bar(m)
print(f"sigma from int m'^2: {sa:.9f}   from int sqrt(2V): {sb:.9f}   exact {3 / math.sqrt(2):.9f}")

# A small offset a tilts the potential; the front starts to move.
for a in (-0.05, -0.01, 0.0, 0.01, 0.05):
    tw = profile.solve_traveling(b, a)
    print(f"a = {a:+.2f}: c = {tw.c:+.6f}, m* = ({tw.m_star_minus:.6f}, {tw.m_star_plus:.6f})")

th = profile.solve_theta1(m, sa)
print(f"theta_1: residual {th.residual:.1e}, theta(-R) = {th.values[0]:.6f}, theta(R) = {th.values[-1]:.6f}")

# The principal eigenvalue is exponentially small once the interval is wide.
for eps in (1.0, 0.2, 0.1, 0.05):
    ev = profile.principal_eigenvalue(m, eps)
    print(f"eps = {eps:<5}: lambda = {ev.value:+.3e}, cosine with m' = {ev.cosine:.6f}")
