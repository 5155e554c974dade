"""Stochastic mass-conserving Allen-Cahn equation on a square.

    u_t = Lap u + eps^{-2} (f(u) - <f(u)>) + v(t),    Neumann boundary,

with ``<.>`` the spatial mean and ``v = alpha dw/dt``. The mean of ``u``
then moves only through the forcing, ``<u>(t) = C + alpha w(t)``.

The grid is cell centred. The 5-point Laplacian with mirrored ghost cells
is diagonalised by the type-II cosine transform, so the implicit diffusion
solve is exact up to rounding and leaves the zero mode untouched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.fft import dctn, idctn

from . import geometry
from .profile import WaveProfile, solve_standing
from .reaction import Bistable, potential_v

__all__ = [
    "PhaseField",
    "MassLedger",
    "CurveTooCloseToBoundary",
    "SolverDiverged",
    "FieldBlowup",
    "StepRejected",
    "NoInterface",
    "cell_centers",
    "stable_dt",
    "init_from_curve",
    "init_radial",
    "lambda_eps",
    "energy",
    "step",
    "run",
    "extract_zero_level",
]

BLOWUP = 2.0


class CurveTooCloseToBoundary(ValueError):
    pass


class SolverDiverged(RuntimeError):
    pass


class FieldBlowup(RuntimeError):
    pass


class StepRejected(ValueError):
    pass


class NoInterface(ValueError):
    pass


@dataclass
class PhaseField:
    """Cell-centred field on ``[0, L]^2``; ``u[i, j]`` sits at ``(x_i, y_j)``."""

    u: np.ndarray
    eps: float
    t: float
    dx: float
    mass0: float
    alpha: float = 0.0

    @property
    def N(self) -> int:
        return self.u.shape[0]

    @property
    def L(self) -> float:
        return self.N * self.dx

    @property
    def mean(self) -> float:
        return float(np.mean(self.u))

    def copy(self) -> "PhaseField":
        return replace(self, u=self.u.copy())


@dataclass
class MassLedger:
    """Samples ``(t, mean_u, alpha_w)`` and the reference constant ``C``."""

    mass0: float
    samples: list = field(default_factory=list)

    def append(self, t: float, mean_u: float, alpha_w: float) -> None:
        self.samples.append((t, mean_u, alpha_w))

    def as_array(self) -> np.ndarray:
        return np.array(self.samples, dtype=float).reshape(-1, 3)

    def residuals(self) -> np.ndarray:
        a = self.as_array()
        return a[:, 1] - self.mass0 - a[:, 2]

    def max_residual(self) -> float:
        r = self.residuals()
        return float(np.max(np.abs(r))) if r.size else 0.0


def cell_centers(N: int, L: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    x = (np.arange(N) + 0.5) * (L / N)
    return np.meshgrid(x, x, indexing="ij")


def stable_dt(eps: float, b: Bistable, safety: float = 0.2) -> float:
    """Reaction budget ``safety * eps^2 / max_{[-1,1]} |f'|``."""
    return safety * eps ** 2 / b.slope_bound()


# ---------------------------------------------------------------------------
# initial data


_PROFILE_CACHE: dict = {}


def _standing(b: Bistable) -> WaveProfile:
    key = id(b)
    if key not in _PROFILE_CACHE:
        _PROFILE_CACHE[key] = (b, solve_standing(b))
    return _PROFILE_CACHE[key][1]


def init_from_curve(curve, eps: float, N: int, L: float = 1.0, b: Optional[Bistable] = None,
                    profile: Optional[WaveProfile] = None, delta: Optional[float] = None,
                    alpha: float = 0.0) -> PhaseField:
    """Order-zero data ``u = m(d / eps)`` with ``d`` the signed distance.

    ``curve`` is a :class:`~mcac.limitflow.CurveState` or a closed polyline.
    The curve must keep a clearance of ``3 delta`` from the boundary.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if hasattr(curve, "kappa"):
        from .limitflow import reconstruct
        poly = reconstruct(curve)
    else:
        poly = np.asarray(curve, dtype=float)
    delta = 0.05 * L if delta is None else delta
    clearance = float(np.min(np.concatenate([poly.ravel(), L - poly.ravel()])))
    if clearance < 3 * delta:
        raise CurveTooCloseToBoundary(f"clearance {clearance:.4g} < 3 delta = {3 * delta:.4g}")
    if profile is None:
        from .reaction import make_cubic
        profile = _standing(b if b is not None else make_cubic())
    X, Y = cell_centers(N, L)
    d = geometry.signed_distance(np.stack([X, Y], axis=-1), poly)
    u = profile(d / eps)
    return PhaseField(u=u, eps=eps, t=0.0, dx=L / N, mass0=float(np.mean(u)), alpha=alpha)


def init_radial(center, R: float, eps: float, N: int, L: float = 1.0,
                profile: Optional[WaveProfile] = None, alpha: float = 0.0) -> PhaseField:
    """``u = m((|x - x0| - R) / eps)`` from the exact distance to a circle."""
    if profile is None:
        from .reaction import make_cubic
        profile = _standing(make_cubic())
    X, Y = cell_centers(N, L)
    d = np.hypot(X - center[0], Y - center[1]) - R
    u = profile(d / eps)
    return PhaseField(u=u, eps=eps, t=0.0, dx=L / N, mass0=float(np.mean(u)), alpha=alpha)


# ---------------------------------------------------------------------------
# diagnostics


def lambda_eps(field: PhaseField, b: Bistable) -> float:
    """``eps^{-1} <f(u)>`` by the midpoint rule."""
    return float(np.mean(b.f(field.u))) / field.eps


def energy(field: PhaseField, b: Bistable) -> float:
    """Discrete ``int (|grad u|^2 / 2 + eps^{-2} V(u))``; no flux at the walls."""
    u, dx = field.u, field.dx
    grad = np.sum(np.diff(u, axis=0) ** 2) + np.sum(np.diff(u, axis=1) ** 2)
    pot = np.sum(potential_v(b, u)) * dx * dx / field.eps ** 2
    return 0.5 * float(grad) + float(pot)


# ---------------------------------------------------------------------------
# time stepping


@lru_cache(maxsize=16)
def _inverse_symbol(N: int, dx: float, dt: float) -> np.ndarray:
    k = np.arange(N)
    lam = -(4.0 / dx ** 2) * np.sin(np.pi * k / (2 * N)) ** 2
    return 1.0 / (1.0 - dt * (lam[:, None] + lam[None, :]))


def _advance(u: np.ndarray, b: Bistable, eps: float, v: float, dt: float, dx: float) -> np.ndarray:
    fu = b.f(u)
    rhs = u + dt * ((fu - fu.mean()) / eps ** 2 + v)
    inv = _inverse_symbol(u.shape[0], dx, dt)
    return idctn(dctn(rhs, type=2, norm="ortho") * inv, type=2, norm="ortho")


def _check(u: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(u)):
        raise SolverDiverged(f"non-finite values at t = {t:.6g}")
    if np.max(np.abs(u)) > BLOWUP:
        raise FieldBlowup(f"|u| exceeded {BLOWUP} at t = {t:.6g}")


def step(field: PhaseField, b: Bistable, v_t: float, dt: float) -> PhaseField:
    """One IMEX step: explicit reaction and forcing, implicit diffusion."""
    budget = stable_dt(field.eps, b)
    if dt > budget * (1 + 1e-12):
        raise StepRejected(f"dt = {dt:.3g} exceeds the reaction budget {budget:.3g}")
    u = _advance(field.u, b, field.eps, v_t, dt, field.dx)
    _check(u, field.t + dt)
    return replace(field, u=u, t=field.t + dt)


def run(field: PhaseField, b: Bistable, path, T: float, dt: float, stride: int = 1,
        snapshot_times: Optional[Sequence[float]] = None):
    """Integrate to time ``T`` driven by the noise path.

    The forcing over ``[t_n, t_{n+1}]`` is the step average
    ``alpha (w(t_{n+1}) - w(t_n)) / dt``, which keeps the discrete mean
    locked to ``C + alpha w(t_n)`` at every step. ``path`` may be ``None``
    for the unforced equation.

    Returns
    -------
    field : PhaseField
    ledger : MassLedger
    snapshots : list of (t, u) pairs at the requested times
    """
    budget = stable_dt(field.eps, b)
    if dt > budget * (1 + 1e-12):
        raise StepRejected(f"dt = {dt:.3g} exceeds the reaction budget {budget:.3g}")
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be an integer multiple of dt")
    times = field.t + dt * np.arange(n + 1)
    if path is not None:
        if path.T < times[-1] - 1e-12:
            raise ValueError("noise path does not cover [0, T]")
        if path.dt > dt * (1 + 1e-9):
            raise ValueError("noise path is coarser than the time step")
        w = path.at(times)
    else:
        w = np.zeros(n + 1)
    alpha = field.alpha
    snap_idx = set()
    if snapshot_times is not None:
        snap_idx = {int(round((s - field.t) / dt)) for s in snapshot_times}
    ledger = MassLedger(field.mass0)
    snapshots = []
    u = field.u.copy()
    eps, dx = field.eps, field.dx

    def record(i):
        if i % stride == 0 or i == n:
            ledger.append(times[i], float(np.mean(u)), alpha * w[i])
        if i in snap_idx:
            snapshots.append((times[i], u.copy()))

    record(0)
    for i in range(n):
        v = alpha * (w[i + 1] - w[i]) / dt
        u = _advance(u, b, eps, v, dt, dx)
        _check(u, times[i + 1])
        record(i + 1)
    return replace(field, u=u, t=times[-1]), ledger, snapshots


# ---------------------------------------------------------------------------
# interface extraction

# corner order: c0 = (i, j), c1 = (i+1, j), c2 = (i+1, j+1), c3 = (i, j+1)
# edge order: 0 bottom (c0 c1), 1 right (c1 c2), 2 top (c3 c2), 3 left (c0 c3)
_CASES = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)], 6: [(0, 2)], 7: [(2, 3)],
    8: [(2, 3)], 9: [(0, 2)], 11: [(1, 2)], 12: [(1, 3)], 13: [(0, 1)], 14: [(3, 0)],
}
_SADDLE = {  # (centre positive, centre negative)
    5: ([(0, 1), (2, 3)], [(3, 0), (1, 2)]),
    10: ([(3, 0), (1, 2)], [(0, 1), (2, 3)]),
}


def extract_zero_level(field) -> list:
    """Zero level set by marching squares on the cell centres.

    Returns a list of polylines (``(k, 2)`` arrays, first vertex not
    repeated), oriented counterclockwise. Curves closing inside the grid
    are closed; chains cut by the outermost cell row are returned open.
    """
    u = field.u if isinstance(field, PhaseField) else np.asarray(field)
    dx = field.dx if isinstance(field, PhaseField) else 1.0 / u.shape[0]
    N0, N1 = u.shape
    pos = u >= 0
    if pos.all() or not pos.any():
        raise NoInterface("field does not change sign")
    case = (pos[:-1, :-1].astype(int) + 2 * pos[1:, :-1] + 4 * pos[1:, 1:] + 8 * pos[:-1, 1:])
    ci, cj = np.nonzero((case != 0) & (case != 15))

    def edge_key(i, j, e):
        # horizontal edges ('h', i, j) join (i, j)-(i+1, j); vertical ('v', i, j) join (i, j)-(i, j+1)
        return [("h", i, j), ("v", i + 1, j), ("h", i, j + 1), ("v", i, j)][e]

    def edge_point(key):
        kind, i, j = key
        if kind == "h":
            a, bv = u[i, j], u[i + 1, j]
            s = a / (a - bv)
            return ((i + 0.5 + s) * dx, (j + 0.5) * dx)
        a, bv = u[i, j], u[i, j + 1]
        s = a / (a - bv)
        return ((i + 0.5) * dx, (j + 0.5 + s) * dx)

    links: dict = {}
    for i, j in zip(ci.tolist(), cj.tolist()):
        c = int(case[i, j])
        if c in _SADDLE:
            centre = 0.25 * (u[i, j] + u[i + 1, j] + u[i + 1, j + 1] + u[i, j + 1])
            segs = _SADDLE[c][0 if centre >= 0 else 1]
        else:
            segs = _CASES[c]
        for e0, e1 in segs:
            k0, k1 = edge_key(i, j, e0), edge_key(i, j, e1)
            links.setdefault(k0, []).append(k1)
            links.setdefault(k1, []).append(k0)

    curves = []
    seen = set()
    # open chains start at edges with a single neighbour
    starts = [k for k, v in links.items() if len(v) == 1] + list(links.keys())
    for start in starts:
        if start in seen:
            continue
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [k for k in links[cur] if k != prev and k not in seen]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            chain.append(cur)
            seen.add(cur)
        pts = np.array([edge_point(k) for k in chain])
        if pts.shape[0] >= 3 and geometry.shoelace_area(pts) < 0:
            pts = pts[::-1]
        curves.append(pts)
    return curves
