"""Stochastic area-preserving curvature flow of convex curves.

A strictly convex closed curve is labelled by the angle ``theta`` of its
outward normal and described by its curvature ``kappa(theta)``. With
inward normal velocity

    V = kappa - kappa_bar + (c alpha / |gamma|) o dw/dt,    c = |D| / 2,

the curvature obeys

    kappa_t = kappa^2 kappa_thth + kappa^3 - kappa^2 kappa_bar
              + (c alpha kappa^2 / |gamma|) o dw/dt,

where ``|gamma| = int dtheta / kappa`` and ``kappa_bar = 2 pi / |gamma|``.
The curve is recovered from ``X_theta = (-sin, cos) / kappa`` and one
anchor point, and the enclosed area obeys ``A(t) = A(0) - c alpha w(t)``.

For computation ``kappa`` is passed through the cutoff ``chi_L``, the
identity on ``[1/L, L]``; a run stops when ``kappa`` leaves that band.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import geometry as geo

__all__ = [
    "CurveState",
    "Cutoff",
    "FlowResult",
    "NonConvex",
    "ClosureViolation",
    "CutoffExit",
    "StepRejected",
    "theta_grid",
    "circle_state",
    "ellipse_state",
    "ellipse_point",
    "closure_residual",
    "geometry",
    "reconstruct",
    "d2theta",
    "drift_rhs",
    "ito_drift",
    "parabolic_budget",
    "step_stratonovich",
    "step_ito",
    "integrate",
    "simulate_ensemble",
    "area_identity_check",
]

BUDGET = 0.2


class NonConvex(ValueError):
    pass


class ClosureViolation(ValueError):
    pass


class StepRejected(ValueError):
    pass


class CutoffExit(RuntimeError):
    """Raised at the discrete stopping time; carries the offending state."""

    def __init__(self, t: float, reason: str, state=None):
        super().__init__(f"stopping time reached at t = {t:.6g}: {reason}")
        self.t = t
        self.reason = reason
        self.state = state


@dataclass
class CurveState:
    kappa: np.ndarray
    anchor: np.ndarray
    t: float = 0.0
    L_cut: float = math.inf

    @property
    def M(self) -> int:
        return int(self.kappa.shape[-1])

    @property
    def theta_grid(self) -> np.ndarray:
        return theta_grid(self.M)


def theta_grid(M: int) -> np.ndarray:
    return 2 * np.pi * np.arange(M) / M


@dataclass(frozen=True)
class Cutoff:
    """Smooth cutoff ``chi_L``.

    ``chi(x) = x`` on ``[1/L, L]``. Above ``L`` it bends over with slope
    ``1 - S((x - L) / L)`` where ``S`` is the quintic smoothstep, reaching
    the constant ``3L/2`` at ``x = 2L``; below ``1/L`` it mirrors this at
    scale ``1/(2L)`` and levels off at ``3/(4L)``. ``chi`` is C^3 and stays
    in ``[3/(4L), 3L/2]``.
    """

    L: float = math.inf

    def __post_init__(self):
        if not self.L >= 1:
            raise ValueError("cutoff level must be at least 1")

    @staticmethod
    def _bend(z):
        # integral of 1 - smoothstep on [0, z], saturating at 1/2
        zc = np.clip(z, 0.0, 1.0)
        return zc - (zc ** 6 - 3 * zc ** 5 + 2.5 * zc ** 4)

    @staticmethod
    def _slope(z):
        zc = np.clip(z, 0.0, 1.0)
        return 1.0 - (6 * zc ** 5 - 15 * zc ** 4 + 10 * zc ** 3)

    def chi(self, x):
        x = np.asarray(x, dtype=float)
        if math.isinf(self.L):
            return x
        L, lo = self.L, 1.0 / self.L
        out = np.where(x > L, L + L * self._bend((x - L) / L), x)
        return np.where(x < lo, lo - 0.5 * lo * self._bend((lo - x) / (0.5 * lo)), out)

    def dchi(self, x):
        x = np.asarray(x, dtype=float)
        if math.isinf(self.L):
            return np.ones_like(x)
        L, lo = self.L, 1.0 / self.L
        out = np.where(x > L, self._slope((x - L) / L), 1.0)
        return np.where(x < lo, self._slope((lo - x) / (0.5 * lo)), out)

    def inside(self, kappa) -> bool:
        return bool(np.all(kappa >= 1.0 / self.L) and np.all(kappa <= self.L))


# ---------------------------------------------------------------------------
# shapes and geometry


def circle_state(R: float, M: int = 256, center=(0.5, 0.5), L_cut: float = math.inf) -> CurveState:
    return CurveState(kappa=np.full(M, 1.0 / R), anchor=np.array(center, float) + [R, 0.0],
                      L_cut=L_cut)


def ellipse_state(a: float, b: float, M: int = 256, center=(0.5, 0.5),
                  L_cut: float = math.inf) -> CurveState:
    """Ellipse with semi-axes ``a`` along x and ``b`` along y.

    The radius of curvature at outward normal angle ``theta`` is
    ``a^2 b^2 / (a^2 cos^2 + b^2 sin^2)^{3/2}``.
    """
    th = theta_grid(M)
    kappa = (a * a * np.cos(th) ** 2 + b * b * np.sin(th) ** 2) ** 1.5 / (a * a * b * b)
    return CurveState(kappa=kappa, anchor=np.array(center, float) + [a, 0.0], L_cut=L_cut)


def ellipse_point(a: float, b: float, theta, center=(0.0, 0.0)) -> np.ndarray:
    """Point of the ellipse whose outward normal has angle ``theta``."""
    p = np.sqrt(a * a * np.cos(theta) ** 2 + b * b * np.sin(theta) ** 2)
    return np.column_stack([a * a * np.cos(theta) / p, b * b * np.sin(theta) / p]) + center


def _require_convex(kappa) -> None:
    if not np.all(kappa > 0):
        raise NonConvex("curvature must be strictly positive")


def closure_residual(kappa: np.ndarray) -> tuple[float, float]:
    th = theta_grid(kappa.shape[-1])
    dth = 2 * np.pi / kappa.shape[-1]
    return (float(np.sum(np.cos(th) / kappa) * dth), float(np.sum(np.sin(th) / kappa) * dth))


def _antiderivative(g: np.ndarray) -> tuple[np.ndarray, float]:
    """Periodic antiderivative vanishing at theta = 0, plus the mean of g."""
    M = g.shape[-1]
    gh = np.fft.rfft(g)
    k = np.arange(gh.shape[-1])
    Fh = np.zeros_like(gh)
    Fh[1:] = gh[1:] / (1j * k[1:])
    if M % 2 == 0:
        Fh[-1] = 0.0
    F = np.fft.irfft(Fh, n=M)
    return F - F[0], float(gh[0].real / M)


def _reconstruct_parts(state: CurveState):
    th = state.theta_grid
    gx, gy = -np.sin(th) / state.kappa, np.cos(th) / state.kappa
    Fx, mx = _antiderivative(gx)
    Fy, my = _antiderivative(gy)
    X = state.anchor[0] + Fx + mx * th
    Y = state.anchor[1] + Fy + my * th
    return X, Y, gx, gy, 2 * np.pi * math.hypot(mx, my)


def reconstruct(state: CurveState, check: bool = True) -> np.ndarray:
    """Vertices ``X(theta_j)``, integrating ``(-sin, cos)/kappa`` spectrally.

    Raises :class:`ClosureViolation` when the end point misses the start by
    more than ``1e-6`` times the length.
    """
    _require_convex(state.kappa)
    X, Y, _, _, gap = _reconstruct_parts(state)
    if check:
        length = 2 * np.pi / state.M * float(np.sum(1.0 / state.kappa))
        if gap > 1e-6 * length:
            raise ClosureViolation(f"closure gap {gap:.3e} for length {length:.4g}")
    return np.column_stack([X, Y])


def geometry(state: CurveState) -> tuple[float, float, float]:
    """(length, kappa_bar, enclosed area).

    The area is ``1/2 int (x y_theta - y x_theta) dtheta`` with the
    spectrally reconstructed vertices, which is exact to rounding for
    band-limited ``1/kappa``; the vertex shoelace sum is only second order
    in ``1/M``.
    """
    _require_convex(state.kappa)
    M = state.M
    length = 2 * np.pi / M * float(np.sum(1.0 / state.kappa))
    X, Y, gx, gy, _ = _reconstruct_parts(state)
    area = 0.5 * 2 * np.pi / M * float(np.sum(X * gy - Y * gx))
    return length, 2 * np.pi / length, area


# ---------------------------------------------------------------------------
# right-hand sides (batched over leading axes)


def d2theta(kappa: np.ndarray) -> np.ndarray:
    """Spectral second derivative; a constant input gives exactly zero."""
    M = kappa.shape[-1]
    kh = np.fft.rfft(kappa - kappa[..., :1], axis=-1)
    k = np.arange(kh.shape[-1])
    return np.fft.irfft(-(k * k) * kh, n=M, axis=-1)


def _gamma_L(chi: np.ndarray) -> np.ndarray:
    return 2 * np.pi / chi.shape[-1] * np.sum(1.0 / chi, axis=-1, keepdims=True)


def _parts(kappa: np.ndarray, cutoff: Cutoff, alpha: float, c: float):
    """Drift ``a_L kappa_thth + b_L`` and noise coefficient ``h_L``."""
    chi = cutoff.chi(kappa)
    gL = _gamma_L(chi)
    chi2 = chi * chi
    drift = chi2 * d2theta(kappa) + chi2 * chi - 2 * np.pi * chi2 / gL
    return drift, c * alpha * chi2 / gL


def _as_kappa(x) -> np.ndarray:
    return x.kappa if isinstance(x, CurveState) else np.asarray(x, dtype=float)


def drift_rhs(state, cutoff: Cutoff, v_t: float, alpha: float = 1.0, area_D: float = 1.0) -> np.ndarray:
    """``a_L kappa_thth + b_L + h_L v_t`` with ``h_L = c alpha chi^2 / |gamma|_L``.

    ``v_t`` plays the role of ``dw/dt``; the deterministic forced flow with
    forcing ``v`` is ``alpha = 1, v_t = v``.
    """
    drift, h = _parts(_as_kappa(state), cutoff, alpha, 0.5 * area_D)
    return drift + h * np.asarray(v_t)[..., None] if np.ndim(v_t) else drift + h * v_t


def ito_drift(state, cutoff: Cutoff, alpha: float, area_D: float = 1.0) -> np.ndarray:
    """Ito correction ``g``, one half of the derivative of ``h_L`` along ``h_L``.

    ``g = (c alpha / |gamma|_L) chi chi' h
          + (c alpha chi^2 / (2 |gamma|_L^2)) int chi' h / chi^2 dtheta``.
    At constant ``kappa`` with ``chi`` the identity this equals
    ``(3/2) C^2 kappa^5`` with ``C = c alpha / (2 pi)``.
    """
    kappa = _as_kappa(state)
    c = 0.5 * area_D
    chi = cutoff.chi(kappa)
    dchi = cutoff.dchi(kappa)
    gL = _gamma_L(chi)
    h = c * alpha * chi * chi / gL
    dth = 2 * np.pi / kappa.shape[-1]
    integral = dth * np.sum(dchi * h / (chi * chi), axis=-1, keepdims=True)
    return (c * alpha / gL) * chi * dchi * h + (c * alpha * chi * chi / (2 * gL * gL)) * integral


def parabolic_budget(kappa: np.ndarray, cutoff: Cutoff) -> float:
    dth = 2 * np.pi / kappa.shape[-1]
    return BUDGET * dth * dth / float(np.max(cutoff.chi(kappa) ** 2))


def _anchor_velocity(kappa: np.ndarray, c: float, alpha: float):
    """Deterministic velocity of X(0) and the coefficient of dw in its x part."""
    M = kappa.shape[-1]
    length = 2 * np.pi / M * np.sum(1.0 / kappa, axis=-1)
    kbar = 2 * np.pi / length
    kh = np.fft.rfft(kappa, axis=-1)
    k = np.arange(kh.shape[-1])
    dk = 1j * k * kh
    if M % 2 == 0:
        dk[..., -1] = 0.0
    kth0 = np.fft.irfft(dk, n=M, axis=-1)[..., 0]
    det = np.stack([-(kappa[..., 0] - kbar), -kth0], axis=-1)
    return det, -c * alpha / length, length


def _check_band(kappa, cutoff: Cutoff, t: float, state=None):
    if not np.all(np.isfinite(kappa)):
        raise CutoffExit(t, "non-finite curvature", state)
    if not cutoff.inside(kappa):
        raise CutoffExit(t, f"kappa left [1/L, L] (min {np.min(kappa):.4g}, max {np.max(kappa):.4g})",
                         state)


def _heun(kappa, anchor, dw, dt, cutoff, alpha, c):
    F1, h1 = _parts(kappa, cutoff, alpha, c)
    dwb = np.asarray(dw)[..., None] if np.ndim(dw) else dw
    kt = kappa + F1 * dt + h1 * dwb
    F2, h2 = _parts(kt, cutoff, alpha, c)
    new = kappa + 0.5 * (F1 + F2) * dt + 0.5 * (h1 + h2) * dwb
    if anchor is None:
        return new, None
    v1, n1, _ = _anchor_velocity(kappa, c, alpha)
    v2, n2, _ = _anchor_velocity(kt, c, alpha)
    a = anchor + 0.5 * (v1 + v2) * dt
    a = a + np.stack([0.5 * (n1 + n2) * dw, np.zeros_like(n1 * dw)], axis=-1)
    return new, a


def _euler_maruyama(kappa, anchor, dw, dt, cutoff, alpha, c):
    F, h = _parts(kappa, cutoff, alpha, c)
    g = ito_drift(kappa, cutoff, alpha, 2 * c)
    dwb = np.asarray(dw)[..., None] if np.ndim(dw) else dw
    new = kappa + (F + g) * dt + h * dwb
    if anchor is None:
        return new, None
    v, nx, length = _anchor_velocity(kappa, c, alpha)
    # Stratonovich-to-Ito correction of -(c alpha / |gamma|) o dw
    corr = -np.pi * (c * alpha) ** 2 / length ** 3
    a = anchor + v * dt + np.stack([nx * dw + corr * dt, np.zeros_like(nx * dw)], axis=-1)
    return new, a


def _check_budget(kappa, cutoff, dt):
    budget = parabolic_budget(kappa, cutoff)
    if dt > budget * (1 + 1e-12):
        raise StepRejected(f"dt = {dt:.3g} exceeds the parabolic budget {budget:.3g}")


def _cutoff_for(state: CurveState, cutoff: Optional[Cutoff]) -> Cutoff:
    return cutoff if cutoff is not None else Cutoff(state.L_cut)


def step_stratonovich(state: CurveState, cutoff: Optional[Cutoff], path, dt: float,
                      alpha: float = 1.0, area_D: float = 1.0, dw: Optional[float] = None) -> CurveState:
    """One Heun step driven by the increment of a smooth noise path.

    ``path`` is a :class:`~mcac.noise.NoisePath`, a callable ``t -> w(t)``
    or ``None`` (no noise); ``dw`` overrides the increment directly.
    """
    cutoff = _cutoff_for(state, cutoff)
    _require_convex(state.kappa)
    _check_budget(state.kappa, cutoff, dt)
    if dw is None:
        dw = _increment(path, state.t, dt)
    kappa, anchor = _heun(state.kappa, state.anchor, dw, dt, cutoff, alpha, 0.5 * area_D)
    new = replace(state, kappa=kappa, anchor=anchor, t=state.t + dt)
    _check_band(kappa, cutoff, new.t, new)
    return new


def step_ito(state: CurveState, cutoff: Optional[Cutoff], dw: float, dt: float,
             rng_stream=None, alpha: float = 1.0, area_D: float = 1.0) -> CurveState:
    """One Euler-Maruyama step of the Ito form with drift ``a_L kappa_thth + b_L + g``.

    If ``dw`` is ``None`` it is drawn from ``rng_stream``.
    """
    cutoff = _cutoff_for(state, cutoff)
    _require_convex(state.kappa)
    _check_budget(state.kappa, cutoff, dt)
    if dw is None:
        dw = float(rng_stream.normal(0.0, math.sqrt(dt)))
    kappa, anchor = _euler_maruyama(state.kappa, state.anchor, dw, dt, cutoff, alpha, 0.5 * area_D)
    new = replace(state, kappa=kappa, anchor=anchor, t=state.t + dt)
    _check_band(kappa, cutoff, new.t, new)
    return new


def _w_function(path) -> Callable:
    if path is None:
        return lambda t: 0.0
    if callable(path) and not hasattr(path, "at"):
        return path
    return lambda t: float(path.at(t))


def _increment(path, t, dt):
    w = _w_function(path)
    return w(t + dt) - w(t)


# ---------------------------------------------------------------------------
# runners


@dataclass
class FlowResult:
    """Recorded trajectory. ``w`` holds the driving path at record times."""

    times: np.ndarray
    states: list
    w: np.ndarray
    length: np.ndarray
    area: np.ndarray
    kappa_min: np.ndarray
    kappa_max: np.ndarray
    clearance: np.ndarray
    tube: np.ndarray
    alpha: float
    area_D: float
    stopped: bool = False
    stop_time: float = math.nan
    stop_reason: str = ""

    @property
    def final(self) -> CurveState:
        return self.states[-1]


def integrate(state: CurveState, T: float, dt: float, cutoff: Optional[Cutoff] = None,
              mode: str = "strat", path=None, rng=None, alpha: float = 1.0, area_D: float = 1.0,
              record_every: int = 1, domain_L: Optional[float] = None, delta: Optional[float] = None,
              raise_on_exit: bool = False) -> FlowResult:
    """Advance ``state`` to time ``T`` in outer steps of ``dt``.

    Each outer step is split into the fewest equal substeps that respect
    the parabolic budget. In ``strat`` mode the path increment is split
    accordingly (linear interpolation between samples); ``ito`` draws
    Brownian increments at the substep size from ``rng``; ``det`` is noise
    free. When ``domain_L`` is given the distance from the curve to the
    boundary of ``[0, domain_L]^2`` is a further stopping trigger.
    """
    if mode not in ("strat", "ito", "det"):
        raise ValueError(f"unknown mode {mode!r}")
    cutoff = _cutoff_for(state, cutoff)
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be an integer multiple of dt")
    wf = _w_function(path if mode == "strat" else None)
    if mode == "ito" and rng is None:
        raise ValueError("ito mode needs an rng")
    c = 0.5 * area_D
    delta = (0.05 * domain_L if domain_L else 0.0) if delta is None else delta
    rec = {k: [] for k in ("t", "states", "w", "length", "area", "kmin", "kmax", "clear", "tube")}
    w_ito = 0.0

    def record(s: CurveState, wval: float):
        length, _, area = geometry(s)
        rec["t"].append(s.t)
        rec["states"].append(s)
        rec["w"].append(wval)
        rec["length"].append(length)
        rec["area"].append(area)
        rec["kmin"].append(float(np.min(s.kappa)))
        rec["kmax"].append(float(np.max(s.kappa)))
        rec["clear"].append(_clearance(s, domain_L))
        rec["tube"].append(1.0 - 3 * delta * float(np.max(s.kappa)))

    kappa, anchor, t = state.kappa.copy(), state.anchor.copy(), state.t
    record(state, wf(t) if mode == "strat" else 0.0)
    stopped, stop_t, reason = False, math.nan, ""
    t0 = state.t
    try:
        for i in range(n):
            t_out = t0 + (i + 1) * dt
            nsub = max(1, math.ceil(dt / parabolic_budget(kappa, cutoff) * (1 - 1e-12)))
            h = dt / nsub
            for j in range(nsub):
                ta = t0 + i * dt + j * h
                if mode == "ito":
                    dw = float(rng.normal(0.0, math.sqrt(h)))
                    w_ito += dw
                    kappa, anchor = _euler_maruyama(kappa, anchor, dw, h, cutoff, alpha, c)
                else:
                    dw = wf(ta + h) - wf(ta) if mode == "strat" else 0.0
                    kappa, anchor = _heun(kappa, anchor, dw, h, cutoff, alpha, c)
                _check_band(kappa, cutoff, ta + h)
            t = t_out
            s = CurveState(kappa=kappa.copy(), anchor=anchor.copy(), t=t, L_cut=state.L_cut)
            if domain_L is not None and _clearance(s, domain_L) < 1.0 / cutoff.L:
                raise CutoffExit(t, "curve within 1/L of the domain boundary", s)
            if (i + 1) % record_every == 0 or i == n - 1:
                record(s, wf(t) if mode == "strat" else w_ito)
    except CutoffExit as exc:
        if raise_on_exit:
            raise
        stopped, stop_t, reason = True, exc.t, exc.reason
    return FlowResult(times=np.array(rec["t"]), states=rec["states"], w=np.array(rec["w"]),
                      length=np.array(rec["length"]), area=np.array(rec["area"]),
                      kappa_min=np.array(rec["kmin"]), kappa_max=np.array(rec["kmax"]),
                      clearance=np.array(rec["clear"]), tube=np.array(rec["tube"]),
                      alpha=alpha, area_D=area_D, stopped=stopped, stop_time=stop_t,
                      stop_reason=reason)


def _clearance(s: CurveState, domain_L: Optional[float]) -> float:
    if domain_L is None:
        return math.inf
    p = reconstruct(s, check=False)
    return float(np.min(np.concatenate([p.ravel(), domain_L - p.ravel()])))


def simulate_ensemble(kappa0: np.ndarray, increments: np.ndarray, dt: float,
                      cutoff: Cutoff = Cutoff(), mode: str = "strat", alpha: float = 1.0,
                      area_D: float = 1.0) -> np.ndarray:
    """Curvatures at the final time for a batch of driving increments.

    ``increments`` has shape ``(P, n)``; row ``p`` drives path ``p``.
    Anchors are not tracked. Paths leaving the cutoff band raise.
    """
    P, n = increments.shape
    kappa = np.broadcast_to(kappa0, (P, kappa0.size)).copy()
    _check_budget(kappa, cutoff, dt)
    stepper = _heun if mode == "strat" else _euler_maruyama
    c = 0.5 * area_D
    for i in range(n):
        kappa, _ = stepper(kappa, None, increments[:, i], dt, cutoff, alpha, c)
    _check_band(kappa, cutoff, n * dt)
    return kappa


def area_identity_check(trajectory: FlowResult, path=None, alpha: Optional[float] = None,
                        area_D: Optional[float] = None) -> float:
    """``sup_t |A(t) - A(0) + (alpha |D| / 2)(w(t) - w(0))|``."""
    alpha = trajectory.alpha if alpha is None else alpha
    area_D = trajectory.area_D if area_D is None else area_D
    if path is None:
        w = trajectory.w
    else:
        wf = _w_function(path)
        w = np.array([wf(t) for t in trajectory.times])
    res = trajectory.area - trajectory.area[0] + 0.5 * alpha * area_D * (w - w[0])
    return float(np.max(np.abs(res)))
