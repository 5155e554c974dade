"""Smooth-in-time approximations of Brownian motion.

Two families are provided.

``mollified_bm``
    A Brownian path stopped on leaving ``(-psi, psi)`` and convolved with
    the causal bump ``eta_psi(s) = psi * eta(psi * s)``.
``mixing_noise``
    ``dw/dt = A^{-1} psi xi(psi^2 t)`` where ``xi`` is a symmetric
    two-state telegraph process (rate one) smoothed by the same bump at
    scale 0.1.

``psi`` grows as ``eps -> 0``. The nested-log rate is so slow that it is
practically constant at any representable ``eps``, so a power-law variant
is available for experiments that need the noise to roughen visibly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
import sympy as sp
from scipy.signal import fftconvolve

__all__ = [
    "NoiseConfig",
    "NoisePath",
    "DomainError",
    "OrderUnavailable",
    "Mollifier",
    "GEps",
    "psi",
    "mollified_bm",
    "mixing_noise",
    "telegraph",
    "ck_norm",
    "holder_norm",
    "g_eps",
]

EEE = math.exp(math.e ** math.e)  # e^{e^e}
TELEGRAPH_SCALE = 0.1
TELEGRAPH_RATE = 1.0


class DomainError(ValueError):
    pass


class OrderUnavailable(ValueError):
    pass


@dataclass(frozen=True)
class NoiseConfig:
    """Parameters of the mild-noise construction.

    Parameters
    ----------
    beta_tilde : float
        Exponent in ``psi``.
    n1 : int
        Integer knob entering ``G_eps``.
    mollifier_order : int
        Highest tabulated derivative of the bump ``eta``.
    family : {"mollified_bm", "mixing"}
    psi_variant : {"safe", "raw", "power"}
        ``raw`` is the nested-log rate, ``safe`` shifts its argument so
        it is defined on (0, 1), ``power`` uses ``eps**(-beta_tilde)``.
    k_max : int
        Number of stored time derivatives.
    """

    beta_tilde: float = 1.0
    n1: int = 1
    mollifier_order: int = 6
    family: str = "mollified_bm"
    psi_variant: str = "safe"
    k_max: int = 4

    def __post_init__(self):
        if not self.beta_tilde > 0:
            raise ValueError("beta_tilde must be positive")
        if int(self.n1) != self.n1 or self.n1 < 1:
            raise ValueError("n1 must be a positive integer")
        if self.family not in ("mollified_bm", "mixing"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.psi_variant not in ("safe", "raw", "power"):
            raise ValueError(f"unknown psi variant {self.psi_variant!r}")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.mollifier_order < self.k_max + 1:
            raise ValueError("mollifier_order must be at least k_max + 1")

    def key(self) -> dict:
        return {"beta_tilde": self.beta_tilde, "n1": self.n1,
                "mollifier_order": self.mollifier_order, "family": self.family,
                "psi_variant": self.psi_variant, "k_max": self.k_max}


@dataclass(frozen=True)
class NoisePath:
    """One sampled realisation of ``w^eps`` on a uniform grid.

    ``derivs[k - 1]`` holds ``d^k w / dt^k``. ``h_eps`` bounds every stored
    derivative on the grid and is at least one. ``consts`` keeps the
    constants entering the family's a priori derivative bound.
    """

    t: np.ndarray
    w: np.ndarray
    derivs: np.ndarray
    eps: float
    seed: int
    h_eps: float
    underlying_bm: np.ndarray
    family: str
    psi: float
    dt: float
    consts: dict = field(default_factory=dict)

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def k_max(self) -> int:
        return int(self.derivs.shape[0])

    @property
    def wdot(self) -> np.ndarray:
        return self.derivs[0]

    def bound(self, k: int) -> float:
        """A priori bound on ``|dw/dt|_{k,T}`` for this family."""
        if self.family == "mollified_bm":
            return k * self.consts["eta_norms"][k + 2] * self.psi ** (k + 2)
        return self.consts["M"] * k / self.consts["A"] * self.psi ** (2 * k + 1)

    def at(self, times) -> np.ndarray:
        """w^eps at arbitrary times by linear interpolation of the samples."""
        return np.interp(times, self.t, self.w)


# ---------------------------------------------------------------------------
# bump function


class Mollifier:
    """``eta(s) = C exp(-1 / (s (1 - s)))`` on (0, 1) with unit mass.

    Derivatives use ``eta^(k) = Q_k(s) eta(s) / q^{2k}``, ``q = s(1-s)``,
    with ``Q_{k+1} = Q_k' q^2 - 2k q q' Q_k + q' Q_k`` and ``Q_0 = 1``.
    """

    def __init__(self, order: int = 6, n_table: int = 200_001):
        s = sp.symbols("s")
        q = s * (1 - s)
        qp = sp.diff(q, s)
        polys = [sp.Integer(1)]
        for k in range(order):
            Q = polys[-1]
            polys.append(sp.expand(sp.diff(Q, s) * q ** 2 - 2 * k * q * qp * Q + qp * Q))
        self.order = order
        self._polys = [np.poly1d([float(c) for c in sp.Poly(P, s).all_coeffs()]) for P in polys]
        # normalisation by high-order Gauss-Legendre on the smooth integrand
        x, wts = np.polynomial.legendre.leggauss(400)
        x = 0.5 * (x + 1.0)
        self.C = 1.0 / float(0.5 * wts @ self._raw(x, 0))
        grid = np.linspace(0.0, 1.0, n_table)
        self._table_s = grid
        self._sup = np.array([np.max(np.abs(self.derivative(grid, k))) for k in range(order + 1)])
        dgrid = grid[1] - grid[0]
        self._l1 = np.array([np.trapezoid(np.abs(self.derivative(grid, k)), dx=dgrid)
                             for k in range(order + 1)])

    def _raw(self, s, k):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        q = s * (1.0 - s)
        ok = q > 1.0 / 700.0  # exp(-1/q) underflows beyond this
        qq = q[ok]
        out[ok] = self._polys[k](s[ok]) * np.exp(-1.0 / qq) / qq ** (2 * k)
        return out

    def derivative(self, s, k: int = 0):
        if k > self.order:
            raise OrderUnavailable(f"eta derivative {k} exceeds tabulated order {self.order}")
        return self.C * self._raw(s, k)

    def __call__(self, s):
        return self.derivative(s, 0)

    def sup(self, k: int) -> float:
        return float(self._sup[k])

    def norm(self, k: int) -> float:
        """``|eta|_k = sum_{i <= k} sup |eta^(i)|``."""
        return float(np.sum(self._sup[: k + 1]))

    def l1(self, k: int) -> float:
        return float(self._l1[k])


@lru_cache(maxsize=4)
def _mollifier(order: int) -> Mollifier:
    return Mollifier(order)


# ---------------------------------------------------------------------------


def psi(eps: float, cfg: NoiseConfig) -> float:
    """Growth rate ``psi(eps)`` of the mild noise."""
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    L = abs(math.log(eps))
    if cfg.psi_variant == "power":
        return eps ** (-cfg.beta_tilde)
    if cfg.psi_variant == "safe":
        L = L + EEE
    inner = L
    for _ in range(3):
        if inner <= 0:
            raise DomainError(f"nested logarithm undefined at eps = {eps}")
        inner = math.log(inner)
    if inner <= 0:
        raise DomainError(f"nested logarithm is not positive at eps = {eps}")
    return inner ** cfg.beta_tilde


def _fit_dt(T: float, target: float) -> float:
    """Largest step not above ``target`` that divides ``T`` exactly."""
    return T / math.ceil(T / target - 1e-9)


def _grid(T: float, dt: float) -> tuple[np.ndarray, int]:
    n = int(round(T / dt))
    if n < 2 or abs(n * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be an integer multiple (>= 2) of dt")
    return dt * np.arange(n + 1), n


def _causal_conv(kernel: np.ndarray, signal: np.ndarray, dt: float) -> np.ndarray:
    return fftconvolve(signal, kernel)[: signal.size] * dt


def mollified_bm(eps: float, T: float, seed: int, cfg: NoiseConfig = NoiseConfig(),
                 dt: Optional[float] = None) -> NoisePath:
    """Mollified stopped Brownian motion.

    The Brownian path is sampled on the output grid. It is stopped at the
    first grid time its modulus reaches ``psi`` and frozen at the exit
    level, i.e. at the crossing value of the linear interpolant, so that
    ``sup |W_eps| <= psi`` holds exactly. ``W_eps`` vanishes for ``t < 0``.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    ps = psi(eps, cfg)
    dt = _fit_dt(T, min(1e-3, 1.0 / (200.0 * ps))) if dt is None else dt
    width = 1.0 / (ps * dt)
    if width < 20:
        raise ValueError(f"dt = {dt} resolves the mollifier window by only {width:.1f} samples")
    t, n = _grid(T, dt)
    rng = np.random.default_rng(seed)
    bm = np.concatenate([[0.0], np.cumsum(rng.standard_normal(n) * math.sqrt(dt))])
    stopped = bm.copy()
    out = np.nonzero(np.abs(bm) >= ps)[0]
    if out.size:
        stopped[out[0]:] = math.copysign(ps, bm[out[0]])
    mol = _mollifier(cfg.mollifier_order)
    m = int(math.ceil(width)) + 1
    u = np.arange(m) * dt
    w = _causal_conv(ps * mol.derivative(ps * u, 0), stopped, dt)
    derivs = np.array([_causal_conv(ps ** (k + 1) * mol.derivative(ps * u, k), stopped, dt)
                       for k in range(1, cfg.k_max + 1)])
    w[0] = 0.0
    h = max(1.0, float(np.max(np.abs(derivs))))
    consts = {"eta_norms": [mol.norm(k) for k in range(cfg.mollifier_order + 1)],
              "stopped": stopped}
    return NoisePath(t=t, w=w, derivs=derivs, eps=eps, seed=seed, h_eps=h, underlying_bm=bm,
                     family="mollified_bm", psi=ps, dt=dt, consts=consts)


def telegraph(U: float, seed, du: float, k_max: int = 4, pre: float = TELEGRAPH_SCALE,
              rate: float = TELEGRAPH_RATE, scale: float = TELEGRAPH_SCALE, order: int = 6):
    """Smoothed symmetric telegraph process on ``[0, U]``.

    Returns ``(u, xi_raw, xi_derivs)`` where ``xi_derivs[j]`` is the j-th
    derivative of the smoothed process. The raw process is started from
    its stationary law a distance ``pre`` before zero so the smoothing
    window is filled at ``u = 0``.
    """
    rng = np.random.default_rng(seed)
    n_pre = int(math.ceil(pre / du))
    n = int(round(U / du))
    total = (n + n_pre) * du
    start = 1.0 if rng.random() < 0.5 else -1.0
    flips = []
    clock = rng.exponential(1.0 / rate)
    while clock < total + du:
        flips.append(clock)
        clock += rng.exponential(1.0 / rate)
    s = np.arange(n + n_pre + 1) * du
    parity = np.searchsorted(np.asarray(flips), s, side="right") % 2
    xi = start * np.where(parity == 0, 1.0, -1.0)
    mol = _mollifier(order)
    m = int(math.ceil(scale / du)) + 1
    x = np.arange(m) * du / scale
    derivs = np.array([_causal_conv(mol.derivative(x, j) / scale ** (j + 1), xi, du)[n_pre:]
                       for j in range(k_max)])
    return s[n_pre:] - s[n_pre], xi[n_pre:], derivs


def mixing_noise(eps: float, T: float, seed: int, cfg: NoiseConfig = NoiseConfig(family="mixing"),
                 dt: Optional[float] = None) -> NoisePath:
    """``dw/dt = A^{-1} psi xi(psi^2 t)`` with a smoothed telegraph ``xi``.

    For the rate-one telegraph, ``E[xi(0) xi(t)] = exp(-2t)`` and smoothing
    by a unit-mass kernel leaves ``int C`` unchanged, so ``A = 1``. The
    certified constant is ``M = max_j scale^{-j} int |eta^(j)|``, which
    bounds every smoothed derivative since ``|xi| = 1``.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    ps = psi(eps, cfg)
    du_target = TELEGRAPH_SCALE / 100.0
    dt = _fit_dt(T, min(1e-3, du_target / ps ** 2)) if dt is None else dt
    du = ps ** 2 * dt
    if TELEGRAPH_SCALE / du < 20:
        raise ValueError("dt too coarse for the smoothing window")
    t, n = _grid(T, dt)
    _, xi, xd = telegraph(n * du, seed, du, k_max=cfg.k_max, order=cfg.mollifier_order)
    A = 1.0
    derivs = np.array([ps ** (2 * j + 1) / A * xd[j] for j in range(cfg.k_max)])
    wdot = derivs[0]
    w = np.concatenate([[0.0], np.cumsum(0.5 * (wdot[1:] + wdot[:-1]) * dt)])
    mol = _mollifier(cfg.mollifier_order)
    M = max(mol.l1(j) / TELEGRAPH_SCALE ** j for j in range(cfg.k_max))
    h = max(1.0, float(np.max(np.abs(derivs))))
    return NoisePath(t=t, w=w, derivs=derivs, eps=eps, seed=seed, h_eps=h, underlying_bm=xi,
                     family="mixing", psi=ps, dt=dt, consts={"M": M, "A": A})


def make_path(family: str, eps: float, T: float, seed: int, cfg: NoiseConfig,
              dt: Optional[float] = None) -> NoisePath:
    if family == "mollified_bm":
        return mollified_bm(eps, T, seed, cfg, dt)
    if family == "mixing":
        return mixing_noise(eps, T, seed, cfg, dt)
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# norms


def _derivative_rows(path: NoisePath, order: int, k: int) -> list:
    if order + k > path.k_max:
        raise OrderUnavailable(f"order {order + k} requested, {path.k_max} stored")
    rows = [path.w] + list(path.derivs)
    return rows[order:order + k + 1]


def ck_norm(path: NoisePath, k: int, order: int = 0) -> float:
    """``sum_{i <= k} sup |d^{i+order} w|`` over the sample grid.

    ``order = 1`` gives the norm of ``dw/dt`` used in the derivative bounds.
    """
    return float(sum(np.max(np.abs(r)) for r in _derivative_rows(path, order, k)))


def holder_norm(path_or_values, theta: float, dt: Optional[float] = None,
                max_lags: int = 400, dense_lags: int = 200) -> float:
    """``sup |w| + sup |w(t) - w(s)| / |t - s|^theta``.

    All lags up to ``dense_lags`` are scanned, longer lags on a geometric
    subset of at most ``max_lags`` values.
    """
    if isinstance(path_or_values, NoisePath):
        w, dt = path_or_values.w, path_or_values.dt
    else:
        w = np.asarray(path_or_values, dtype=float)
    n = w.size
    lags = np.arange(1, min(n, dense_lags + 1))
    if n - 1 > dense_lags:
        extra = np.unique(np.geomspace(dense_lags + 1, n - 1, max_lags).astype(int))
        lags = np.concatenate([lags, extra])
    semi = max(float(np.max(np.abs(w[l:] - w[:-l]))) / (l * dt) ** theta for l in lags) if n > 1 else 0.0
    return float(np.max(np.abs(w))) + semi


class GEps(NamedTuple):
    value: float
    overflow: bool


def g_eps(h_eps: float, n1: int) -> GEps:
    """``G_eps = exp(exp(H^{2 n1}))``; overflow returns ``inf`` with a flag."""
    if h_eps < 1:
        raise ValueError("h_eps must be at least 1")
    try:
        inner = math.exp(h_eps ** (2 * n1))
        return GEps(math.exp(inner), False)
    except OverflowError:
        return GEps(math.inf, True)
