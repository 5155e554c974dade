"""Order-zero and order-one objects of the matched asymptotic expansion.

For a convex curve in Gauss-map coordinates (``ds = dtheta / kappa``,
mean curvature ``kappa``, ``b = kappa^2``) with forcing ``v``:

* ``lambda_0 = (2 pi - |D| v / 2) / (sigma |gamma|)`` and the normal velocity
  ``V = kappa - sigma lambda_0``;
* inner and outer order-zero corrections ``u_0 = -lambda_0 theta_1`` and
  ``u_0^+- = lambda_0 / f'(+-1)``;
* ``A^0 = lambda_0 sigma d_rho u_0 + f''(m) u_0^2 / 2``;
* the first-order interface correction ``h_1(t, theta)``, solving

      h_t + kappa V_theta h_theta - kappa (kappa h_theta)_theta - kappa^2 h
          + (sigma lambda_0 / |gamma|) int h dtheta = F_0,

  with ``h_1(0) = 0``, and the multiplier ``lambda_1(t)``.

``F_0`` collects the ``A^0`` moment (absent once averaged), the ``b``
moment ``int rho m'^2`` and the solvability term ``B_0 / (2 |gamma|)`` with

    B_0 = u_0^+'(|D| - |D_t|) + u_0^-' |D_t|
          + int (kappa - sigma lambda_0) [(u_0^+ - u_0^-) / kappa + int rho m'] dtheta,

the order-one part of the mass balance: time derivatives of the outer
values weighted by the two phase areas, plus the transport of the layer
carried by the normal velocity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .limitflow import CurveState, d2theta, geometry
from .profile import WaveProfile, _diff4, first_moments
from .reaction import Bistable

__all__ = [
    "ExpansionBundle",
    "H1Result",
    "GridMismatch",
    "NonConvexDuringRun",
    "StiffnessRejected",
    "lambda0",
    "normal_velocity",
    "u0_inner",
    "u0_outer",
    "a0",
    "bundle",
    "fourier_diff_matrix",
    "solve_h1",
]

VARIANCE_FLAG = 1e-6


class GridMismatch(ValueError):
    pass


class NonConvexDuringRun(RuntimeError):
    pass


class StiffnessRejected(RuntimeError):
    pass


def lambda0(state: CurveState, sigma: float, v_t: float, area_D: float = 1.0) -> float:
    """``(int kappa ds - |D| v / 2) / (sigma |gamma|)``; ``int kappa ds = 2 pi``."""
    length = geometry(state)[0]
    return (2 * np.pi - 0.5 * area_D * v_t) / (sigma * length)


def normal_velocity(state: CurveState, sigma: float, lam0: float) -> np.ndarray:
    return state.kappa - sigma * lam0


def u0_inner(lam0: float, theta1: WaveProfile) -> np.ndarray:
    return -lam0 * theta1.values


def u0_outer(lam0: float, b: Bistable) -> tuple[float, float]:
    return lam0 / float(b.f_prime(1.0)), lam0 / float(b.f_prime(-1.0))


def a0(lam0: float, sigma: float, u0: np.ndarray, m: WaveProfile, b: Bistable):
    """``A^0`` on the rho grid and its moment ``int A^0 m' drho``."""
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != m.values.shape:
        raise GridMismatch(f"u0 has shape {u0.shape}, profile grid {m.values.shape}")
    A = lam0 * sigma * _diff4(u0, m.h) + 0.5 * b.f_double_prime(m.values) * u0 * u0
    return A, float(np.trapezoid(A * m.derivative, m.rho))


@dataclass
class ExpansionBundle:
    lambda0: float
    u0: np.ndarray
    u0_plus: float
    u0_minus: float
    A0: np.ndarray
    A0_moment: float
    b_field: np.ndarray
    V: np.ndarray
    h1: Optional[np.ndarray] = None
    lambda1: Optional[np.ndarray] = None


def bundle(state: CurveState, sigma: float, v_t: float, m: WaveProfile, theta1: WaveProfile,
           area_D: float = 1.0) -> ExpansionBundle:
    b = m.reaction
    lam = lambda0(state, sigma, v_t, area_D)
    u0 = u0_inner(lam, theta1)
    up, um = u0_outer(lam, b)
    A, mom = a0(lam, sigma, u0, m, b)
    return ExpansionBundle(lambda0=lam, u0=u0, u0_plus=up, u0_minus=um, A0=A, A0_moment=mom,
                           b_field=state.kappa ** 2, V=normal_velocity(state, sigma, lam))


def fourier_diff_matrix(M: int) -> np.ndarray:
    """Dense spectral first-derivative matrix on M equispaced nodes."""
    k = np.fft.fftfreq(M, d=1.0 / M)
    if M % 2 == 0:
        k[M // 2] = 0.0
    return np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(np.eye(M), axis=0), axis=0))


@dataclass
class H1Result:
    times: np.ndarray
    h1: np.ndarray           # (nt, M)
    lambda1: np.ndarray      # S-average per time
    theta_variance: np.ndarray
    lambda0: np.ndarray
    forcing: np.ndarray      # F_0 (nt, M)
    flagged: np.ndarray      # theta variance above VARIANCE_FLAG

    @property
    def any_flagged(self) -> bool:
        return bool(np.any(self.flagged))


def solve_h1(states: Sequence[CurveState], v: Sequence[float], sigma: float, m: WaveProfile,
             theta1: WaveProfile, area_D: float = 1.0, dt: Optional[float] = None,
             include_b: bool = True, include_nonlocal: bool = True,
             include_forcing: bool = True, max_condition: float = 1e12) -> H1Result:
    """First-order correction along a sampled trajectory.

    Space is spectral (dense Fourier differentiation matrices). Time is
    the trapezoidal rule on the full linear operator, which needs the
    trajectory only at its sample times. ``dt`` defaults to the (uniform)
    spacing of ``states``.
    """
    b = m.reaction
    nt = len(states)
    times = np.array([s.t for s in states])
    if dt is None:
        dt = float(times[1] - times[0])
    if not np.allclose(np.diff(times), dt, rtol=1e-8, atol=1e-12):
        raise ValueError("trajectory must be uniformly sampled with spacing dt")
    v = np.asarray(v, dtype=float)
    if v.shape != (nt,):
        raise ValueError("one forcing value per state is required")
    M = states[0].M
    D = fourier_diff_matrix(M)
    I = np.eye(M)
    dth = 2 * np.pi / M
    M1, M2 = first_moments(m)
    # A^0 moment is quadratic in lambda_0
    _, X1 = a0(1.0, sigma, u0_inner(1.0, theta1), m, b)
    fp1, fm1 = float(b.f_prime(1.0)), float(b.f_prime(-1.0))

    kap = np.array([s.kappa for s in states])
    if np.any(kap <= 0):
        raise NonConvexDuringRun("curvature became non-positive along the trajectory")
    geo = np.array([geometry(s) for s in states])
    length, area = geo[:, 0], geo[:, 2]
    lam = (2 * np.pi - 0.5 * area_D * v) / (sigma * length)
    dlam = np.gradient(lam, dt, edge_order=2)
    up, um = lam / fp1, lam / fm1
    dup, dum = dlam / fp1, dlam / fm1

    def pieces(n):
        k = kap[n]
        V = k - sigma * lam[n]
        Vth = D @ V
        X = lam[n] ** 2 * X1
        op = -np.diag(k * Vth) @ D + np.diag(k) @ D @ np.diag(k) @ D
        if include_b:
            op = op + np.diag(k * k)
        if include_nonlocal:
            op = op - (sigma * lam[n] / length[n]) * dth * np.ones((M, M))
        F = np.zeros(M)
        if include_forcing:
            bbar = dth * np.sum(k) / length[n]
            Xbar = dth * np.sum(X / k) / length[n]
            B0 = (dup[n] * (area_D - area[n]) + dum[n] * area[n]
                  + dth * np.sum(V * ((up[n] - um[n]) / k + M1)))
            F = (-0.5 * sigma * X + 0.5 * sigma * Xbar + 0.5 * sigma * (k * k - bbar) * M2
                 + B0 / (2 * length[n])) * np.ones(M)
        return op, F, Vth

    h = np.zeros((nt, M))
    Fs = np.zeros((nt, M))
    op_prev, F_prev, _ = pieces(0)
    Fs[0] = F_prev
    for n in range(nt - 1):
        op_next, F_next, _ = pieces(n + 1)
        lhs = I - 0.5 * dt * op_next
        if np.linalg.cond(lhs) > max_condition:
            raise StiffnessRejected("implicit h_1 system is ill conditioned")
        rhs = (I + 0.5 * dt * op_prev) @ h[n] + 0.5 * dt * (F_prev + F_next)
        h[n + 1] = np.linalg.solve(lhs, rhs)
        op_prev, F_prev = op_next, F_next
        Fs[n + 1] = F_next

    # multiplier lambda_1 from the odd-order formula, averaged over arc length
    ht = np.gradient(h, dt, axis=0, edge_order=2)
    lam1 = np.zeros(nt)
    var = np.zeros(nt)
    for n in range(nt):
        k = kap[n]
        V = k - sigma * lam[n]
        hth = D @ h[n]
        trans = ht[n] + k * (D @ V) * hth
        lap = k * (D @ (k * hth))
        X = lam[n] ** 2 * X1
        integrand = (trans - lap - k * k * h[n]) / sigma + 0.5 * X + v[n] - 0.5 * k * k * M2
        wts = (1.0 / k) / np.sum(1.0 / k)
        lam1[n] = float(np.sum(wts * integrand))
        var[n] = float(np.sum(wts * (integrand - lam1[n]) ** 2))
    return H1Result(times=times, h1=h, lambda1=lam1, theta_variance=var, lambda0=lam,
                    forcing=Fs, flagged=var > VARIANCE_FLAG)
