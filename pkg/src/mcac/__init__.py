"""Numerical laboratory for the stochastic mass-conserving Allen-Cahn
equation and its sharp-interface limit, a stochastic area-preserving
curvature flow of convex plane curves.

Modules
-------
reaction   bistable nonlinearity and structural checks
profile    1-D wave profiles, correctors and spectral probe
noise      mild (smooth-in-time) approximations of Brownian motion
acpde      2-D phase-field solver with exact mass bookkeeping
limitflow  curvature flow in Gauss-map coordinates
expansion  first-order asymptotic correction objects
harness    convergence experiment, caching and reporting
"""

__version__ = "0.1.0"
