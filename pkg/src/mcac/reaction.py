"""Bistable reaction terms.

A bistable ``f`` has stable zeros at -1 and +1, a single unstable zero in
between, and satisfies the balance condition ``int_{-1}^{1} f = 0`` so that
the standing wave connecting the two phases does not travel.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

__all__ = [
    "Bistable",
    "ReactionError",
    "BalanceViolation",
    "ZeroCountViolation",
    "SlopeSignViolation",
    "ValidationReport",
    "make_cubic",
    "potential_v",
    "validate",
]

BALANCE_TOL = 1e-12
ZERO_TOL = 1e-12


class ReactionError(ValueError):
    """Base class for structural violations of a bistable term."""


class BalanceViolation(ReactionError):
    pass


class ZeroCountViolation(ReactionError):
    pass


class SlopeSignViolation(ReactionError):
    pass


@dataclass(frozen=True)
class Bistable:
    """A scalar bistable nonlinearity with its first two derivatives.

    Attributes
    ----------
    f, f_prime, f_double_prime : callable
        Vectorised functions of ``u``.
    c_bar_1 : float
        Global upper bound for ``f'``.
    zeros : tuple of float
        ``(-1, u_mid, 1)``.
    potential : callable, optional
        Closed form of ``V(u) = int_u^1 f``; quadrature is used if absent.
    """

    f: Callable
    f_prime: Callable
    f_double_prime: Callable
    c_bar_1: float
    zeros: tuple
    potential: Optional[Callable] = None
    name: str = "custom"

    def slope_bound(self, lo: float = -1.0, hi: float = 1.0, n: int = 2001) -> float:
        """max |f'| sampled on [lo, hi]."""
        u = np.linspace(lo, hi, n)
        return float(np.max(np.abs(self.f_prime(u))))


def make_cubic() -> Bistable:
    """The model nonlinearity f(u) = u - u^3."""
    return Bistable(
        f=lambda u: u - u ** 3,
        f_prime=lambda u: 1.0 - 3.0 * u ** 2,
        f_double_prime=lambda u: -6.0 * np.asarray(u, dtype=float),
        c_bar_1=1.0,
        zeros=(-1.0, 0.0, 1.0),
        potential=lambda u: 0.25 * (1.0 - u ** 2) ** 2,
        name="cubic",
    )


def potential_v(b: Bistable, u):
    """V(u) = int_u^1 f(v) dv."""
    if b.potential is not None:
        return b.potential(u)
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.array([integrate.quad(b.f, x, 1.0, epsabs=1e-14, epsrel=1e-13)[0] for x in u_arr])
    return out.reshape(np.shape(u)) if np.ndim(u) else float(out[0])


@dataclass
class ValidationReport:
    """Per-condition outcome of :func:`validate`."""

    n_zeros: int = 0
    balance_residual: float = np.nan
    endpoint_values: tuple = (np.nan, np.nan)
    endpoint_slopes: tuple = (np.nan, np.nan)
    slope_excess: float = np.nan
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(self.checks.values())


def _count_sign_changes(values: np.ndarray) -> int:
    s = np.sign(values)
    nonzero = s[s != 0]
    # an exact zero on the grid between two opposite signs counts once
    return int(np.count_nonzero(nonzero[1:] != nonzero[:-1]))


def validate(b: Bistable, raise_on_fail: bool = True) -> ValidationReport:
    """Check the bistable structure conditions and report residuals.

    The order of checks is: zero count, balance, zeros at +-1, slope signs,
    slope bound. The first failing check raises when ``raise_on_fail``.
    """
    rep = ValidationReport()

    def fail(exc_type, msg):
        if raise_on_fail:
            raise exc_type(msg)

    grid = np.linspace(-1.5, 1.5, 10_000)
    rep.n_zeros = _count_sign_changes(b.f(grid))
    rep.checks["zero_count"] = rep.n_zeros == 3
    if not rep.checks["zero_count"]:
        fail(ZeroCountViolation, f"expected 3 zeros on [-1.5, 1.5], found {rep.n_zeros}")

    nodes, weights = np.polynomial.legendre.leggauss(64)
    bal = float(weights @ b.f(nodes))
    rep.balance_residual = abs(bal)
    rep.checks["balance"] = rep.balance_residual < BALANCE_TOL
    if not rep.checks["balance"]:
        fail(BalanceViolation, f"int f over [-1, 1] = {bal:.3e}")

    fm, fp = float(b.f(-1.0)), float(b.f(1.0))
    rep.endpoint_values = (fm, fp)
    rep.checks["endpoint_zeros"] = abs(fm) <= ZERO_TOL and abs(fp) <= ZERO_TOL
    if not rep.checks["endpoint_zeros"]:
        fail(ZeroCountViolation, f"f(-1) = {fm:.3e}, f(1) = {fp:.3e}")

    sm, sp = float(b.f_prime(-1.0)), float(b.f_prime(1.0))
    rep.endpoint_slopes = (sm, sp)
    rep.checks["stable_ends"] = sm < 0 and sp < 0
    if not rep.checks["stable_ends"]:
        fail(SlopeSignViolation, f"f'(-1) = {sm}, f'(1) = {sp}; both must be negative")

    u = np.linspace(-3.0, 3.0, 6001)
    rep.slope_excess = float(np.max(b.f_prime(u)) - b.c_bar_1)
    rep.checks["slope_bound"] = rep.slope_excess <= 0.0
    if not rep.checks["slope_bound"]:
        fail(SlopeSignViolation, f"f' exceeds c_bar_1 by {rep.slope_excess:.3e}")
    return rep
