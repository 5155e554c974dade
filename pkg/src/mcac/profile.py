"""One-dimensional problems in the stretched variable rho.

* the standing wave ``m'' + f(m) = 0`` with ``m(+-inf) = +-1, m(0) = 0``;
* the travelling wave ``m'' + c m' + f(m) - a = 0`` with unknown speed;
* the corrector ``theta_1`` solving ``L theta = 1 - sigma m'`` where
  ``L = -d^2/drho^2 - f'(m)``;
* two quadratures of the inverse surface tension ``sigma``;
* the principal eigenvalue of ``L`` on a truncated interval.

All problems are discretised by second order centred differences on a
uniform grid. Fronts are found by Newton's method on the full boundary
value problem with the speed appended as an unknown and the translation
fixed by ``m(0) = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, optimize, sparse
from scipy.linalg import solve_banded
from scipy.sparse.linalg import spsolve

from .reaction import Bistable, potential_v

__all__ = [
    "WaveProfile",
    "TravelingWave",
    "EigenProbe",
    "NoConvergence",
    "NonMonotone",
    "NoThreeZeros",
    "SingularSystem",
    "make_grid",
    "solve_standing",
    "solve_traveling",
    "sigma_bar",
    "solve_theta1",
    "principal_eigenvalue",
    "ode_residual",
    "first_moments",
]

DEFAULT_R = 20.0
DEFAULT_H = 0.002


class NoConvergence(RuntimeError):
    pass


class NonMonotone(RuntimeError):
    pass


class NoThreeZeros(ValueError):
    pass


class SingularSystem(RuntimeError):
    pass


@dataclass
class WaveProfile:
    """A profile sampled on a uniform symmetric rho grid.

    ``kind`` is one of ``"standing"``, ``"traveling"`` or ``"corrector"``.
    """

    rho: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    decay_rate: float
    kind: str
    reaction: Bistable
    a: float = 0.0
    speed: float = 0.0
    residual: float = np.nan

    @property
    def h(self) -> float:
        return float(self.rho[1] - self.rho[0])

    @property
    def R(self) -> float:
        return float(self.rho[-1])

    @property
    def center_index(self) -> int:
        return int(np.argmin(np.abs(self.rho)))

    def __call__(self, rho):
        """Linear interpolation, constant continuation beyond the grid."""
        return np.interp(rho, self.rho, self.values)


@dataclass
class TravelingWave:
    profile: WaveProfile
    a: float
    c: float
    m_star_plus: float
    m_star_minus: float


@dataclass
class EigenProbe:
    value: float
    cosine: float
    rho: np.ndarray
    vector: np.ndarray
    iterations: int


def make_grid(R: float, h: float) -> np.ndarray:
    """Uniform grid on [-R, R] containing rho = 0 as a node."""
    n = int(round(R / h))
    return h * np.arange(-n, n + 1, dtype=float)


def _diff4(y: np.ndarray, h: float) -> np.ndarray:
    """First derivative, fourth order inside, second order at the ends."""
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    d[1] = (y[2] - y[0]) / (2 * h)
    d[-2] = (y[-1] - y[-3]) / (2 * h)
    d[0] = (-3 * y[0] + 4 * y[1] - y[2]) / (2 * h)
    d[-1] = (3 * y[-1] - 4 * y[-2] + y[-3]) / (2 * h)
    return d


def ode_residual(m: np.ndarray, h: float, c: float, b: Bistable, a: float = 0.0) -> np.ndarray:
    """Centred-difference residual of m'' + c m' + f(m) - a on interior nodes."""
    return ((m[2:] - 2 * m[1:-1] + m[:-2]) / h ** 2
            + c * (m[2:] - m[:-2]) / (2 * h) + b.f(m[1:-1]) - a)


def _equilibria(b: Bistable, a: float) -> tuple[float, float]:
    def g(u):
        return float(b.f(u)) - a

    def gp(u):
        return float(b.f_prime(u))

    plus = optimize.newton(g, 1.0, fprime=gp, tol=1e-15, maxiter=100)
    minus = optimize.newton(g, -1.0, fprime=gp, tol=1e-15, maxiter=100)
    return float(plus), float(minus)


def _front(b: Bistable, a: float, R: float, h: float, tol: float = 1e-13, maxit: int = 50):
    """Newton on the bordered front problem; returns (rho, m, c)."""
    rho = make_grid(R, h)
    n = rho.size
    i0 = n // 2
    mp, mm = _equilibria(b, a)
    zeta = np.sqrt(-max(float(b.f_prime(mp)), float(b.f_prime(mm))))
    m = 0.5 * (mp + mm) + 0.5 * (mp - mm) * np.tanh(0.5 * zeta * rho)
    m[0], m[-1] = mm, mp
    c = 0.0
    k = n - 2  # interior unknowns
    for it in range(maxit):
        res = ode_residual(m, h, c, b, a)
        F = np.concatenate([res, [m[i0]]])
        mi = m[1:-1]
        main = -2.0 / h ** 2 + b.f_prime(mi)
        up = np.full(k - 1, 1.0 / h ** 2 + c / (2 * h))
        lo = np.full(k - 1, 1.0 / h ** 2 - c / (2 * h))
        J = sparse.diags([lo, main, up], [-1, 0, 1], format="csr")
        dcol = ((m[2:] - m[:-2]) / (2 * h)).reshape(-1, 1)
        prow = sparse.csr_matrix(([1.0], ([0], [i0 - 1])), shape=(1, k))
        A = sparse.bmat([[J, sparse.csr_matrix(dcol)], [prow, None]], format="csc")
        delta = spsolve(A, -F)
        if not np.all(np.isfinite(delta)):
            raise NoConvergence("Newton update is not finite")
        m[1:-1] += delta[:-1]
        c += delta[-1]
        if np.max(np.abs(delta)) < tol:
            m[i0] = 0.0
            return rho, m, c, it + 1
    raise NoConvergence(f"front Newton did not converge in {maxit} iterations")


def _decay_rate(b: Bistable, c: float, mp: float, mm: float) -> float:
    fp, fm = float(b.f_prime(mp)), float(b.f_prime(mm))
    mu_plus = 0.5 * (-c - np.sqrt(c * c - 4 * fp))
    mu_minus = 0.5 * (-c + np.sqrt(c * c - 4 * fm))
    return float(min(-mu_plus, mu_minus))


def _increasing(m: np.ndarray, mp: float, mm: float, floor: float = 1e-13) -> bool:
    """Strict increase away from the roundoff-saturated tails."""
    d = np.diff(m)
    mid = 0.5 * (m[1:] + m[:-1])
    bulk = (mp - mid > floor) & (mid - mm > floor)
    return bool(np.all(d[bulk] > 0) and np.all(d > -floor))


def solve_standing(b: Bistable, R: float = DEFAULT_R, h: float = DEFAULT_H) -> WaveProfile:
    """Standing wave connecting -1 to +1 with m(0) = 0."""
    if R < 10 or h > 0.05:
        raise ValueError("need R >= 10 and h <= 0.05")
    rho, m, c, _ = _front(b, 0.0, R, h)
    if not _increasing(m, 1.0, -1.0):
        raise NonMonotone("standing wave is not strictly increasing")
    res = ode_residual(m, rho[1] - rho[0], 0.0, b)
    return WaveProfile(rho=rho, values=m, derivative=_diff4(m, h), kind="standing",
                       decay_rate=_decay_rate(b, 0.0, 1.0, -1.0), reaction=b,
                       speed=c, residual=float(np.max(np.abs(res))))


def solve_traveling(b: Bistable, a: float, R: float = DEFAULT_R, h: float = DEFAULT_H) -> TravelingWave:
    """Travelling wave of m'' + c m' + f(m) - a = 0 with the speed c(a)."""
    grid = np.linspace(-1.5, 1.5, 10_000)
    s = np.sign(b.f(grid) - a)
    s = s[s != 0]
    if np.count_nonzero(s[1:] != s[:-1]) != 3:
        raise NoThreeZeros(f"f - {a} does not have three zeros on [-1.5, 1.5]")
    rho, m, c, _ = _front(b, a, R, h)
    mp, mm = _equilibria(b, a)
    if not _increasing(m, mp, mm):
        raise NonMonotone("travelling wave is not strictly increasing")
    res = ode_residual(m, h, c, b, a)
    prof = WaveProfile(rho=rho, values=m, derivative=_diff4(m, h), kind="traveling",
                       decay_rate=_decay_rate(b, c, mp, mm), reaction=b, a=a, speed=c,
                       residual=float(np.max(np.abs(res))))
    return TravelingWave(profile=prof, a=a, c=c, m_star_plus=mp, m_star_minus=mm)


def sigma_bar(p: WaveProfile) -> tuple[float, float]:
    """Inverse surface tension by two formulas.

    ``sigma_a = 2 / int m'^2`` (trapezoid) and
    ``sigma_b = sqrt(2) / int_{-1}^{1} sqrt(V(u)) du`` (adaptive).
    """
    sa = 2.0 / np.trapezoid(p.derivative ** 2, p.rho)
    b = p.reaction
    integral, _ = integrate.quad(lambda u: np.sqrt(max(potential_v(b, u), 0.0)), -1.0, 1.0,
                                 epsabs=1e-14, epsrel=1e-13)
    return float(sa), float(np.sqrt(2.0) / integral)


def _neumann_operator(m: np.ndarray, h: float, b: Bistable) -> sparse.csr_matrix:
    """-D2 - f'(m) with mirrored ghost nodes at both ends."""
    n = m.size
    main = 2.0 / h ** 2 - b.f_prime(m)
    up = np.full(n - 1, -1.0 / h ** 2)
    lo = np.full(n - 1, -1.0 / h ** 2)
    up[0] = -2.0 / h ** 2
    lo[-1] = -2.0 / h ** 2
    return sparse.diags([lo, main, up], [-1, 0, 1], format="csr")


def solve_theta1(p: WaveProfile, sigma: float) -> WaveProfile:
    """Corrector theta_1: L theta = 1 - sigma m', theta(0) = 0, Neumann ends.

    The Neumann operator has a near-kernel spanned by m', so the system is
    bordered by that direction: ``L theta + mu m' = g`` together with the
    phase condition. ``mu`` measures the remaining solvability defect.
    """
    if p.kind != "standing":
        raise ValueError("theta_1 needs the standing profile")
    h, n, i0 = p.h, p.rho.size, p.center_index
    L = _neumann_operator(p.values, h, p.reaction)
    g = 1.0 - sigma * p.derivative
    col = sparse.csr_matrix(p.derivative.reshape(-1, 1))
    row = sparse.csr_matrix(([1.0], ([0], [i0])), shape=(1, n))
    A = sparse.bmat([[L, col], [row, None]], format="csc")
    rhs = np.concatenate([g, [0.0]])
    sol = spsolve(A, rhs)
    sol += spsolve(A, rhs - A @ sol)  # one refinement sweep
    if not np.all(np.isfinite(sol)):
        raise SingularSystem("bordered corrector system is singular")
    theta = sol[:-1]
    resid = L @ theta - g
    return WaveProfile(rho=p.rho, values=theta, derivative=_diff4(theta, h), kind="corrector",
                       decay_rate=p.decay_rate, reaction=p.reaction,
                       residual=float(np.max(np.abs(resid))))


def principal_eigenvalue(p: WaveProfile, eps: float, tol: float = 1e-15,
                         maxit: int = 2000) -> EigenProbe:
    """Smallest eigenvalue of -D2 - f'(m) on (-1/eps, 1/eps), Neumann ends.

    Shifted inverse iteration on the symmetric tridiagonal matrix (the
    Neumann closure uses half-cell end rows), with the shift placed below
    the Gershgorin bound so the iteration is attracted to the bottom of
    the spectrum; the eigenvalue is the Rayleigh quotient.
    """
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if 1.0 / eps > p.R:
        p = solve_standing(p.reaction, R=1.0 / eps + 1.0, h=p.h)
    h = p.h
    keep = np.abs(p.rho) <= 1.0 / eps + 1e-12
    rho, m, dm = p.rho[keep], p.values[keep], p.derivative[keep]
    n = rho.size
    diag = 2.0 / h ** 2 - p.reaction.f_prime(m)
    diag[0] -= 1.0 / h ** 2
    diag[-1] -= 1.0 / h ** 2
    off = -1.0 / h ** 2
    radius = np.full(n, 2.0 / h ** 2)
    radius[[0, -1]] = 1.0 / h ** 2
    shift = float(np.min(diag - radius)) - 1e-3
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = diag - shift
    ab[2, :-1] = off

    fp = p.reaction.f_prime(m)

    def rayleigh(x):
        # Dirichlet form of the half-cell Neumann matrix, free of the
        # O(1/h^2) cancellation in x @ (T x)
        return float((np.sum(np.diff(x) ** 2) / h ** 2 - np.sum(fp * x * x)) / (x @ x))

    x = np.ones(n) / np.sqrt(n)
    lam_old = np.inf
    for it in range(1, maxit + 1):
        y = solve_banded((1, 1), ab, x)
        y /= np.linalg.norm(y)
        if y @ x < 0:
            y = -y
        change = np.linalg.norm(y - x)
        x = y
        lam = rayleigh(x)
        if change < 1e-12 or abs(lam - lam_old) <= tol:
            break
        lam_old = lam
    else:
        raise NoConvergence("inverse iteration did not settle")
    if x @ dm < 0:
        x = -x
    cos = float(x @ dm / (np.linalg.norm(x) * np.linalg.norm(dm)))
    return EigenProbe(value=lam, cosine=cos, rho=rho, vector=x, iterations=it)


def first_moments(p: WaveProfile) -> tuple[float, float]:
    """(int rho m' drho, int rho m'^2 drho)."""
    return (float(np.trapezoid(p.rho * p.derivative, p.rho)),
            float(np.trapezoid(p.rho * p.derivative ** 2, p.rho)))
