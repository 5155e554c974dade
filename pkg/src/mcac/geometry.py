"""Polyline utilities shared by the phase-field and curve solvers."""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "shoelace_area",
    "polyline_length",
    "inside_polygon",
    "distance_to_polyline",
    "signed_distance",
    "resample_closed",
    "hausdorff",
    "circumcircle_curvature",
]


def _closed(poly: np.ndarray) -> np.ndarray:
    poly = np.asarray(poly, dtype=float)
    if np.allclose(poly[0], poly[-1]):
        return poly[:-1]
    return poly


def shoelace_area(poly: np.ndarray) -> float:
    """Signed area, positive for counterclockwise vertex order."""
    p = _closed(poly)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polyline_length(poly: np.ndarray, closed: bool = True) -> float:
    p = _closed(poly) if closed else np.asarray(poly, dtype=float)
    seg = np.roll(p, -1, axis=0) - p if closed else np.diff(p, axis=0)
    return float(np.sum(np.hypot(seg[:, 0], seg[:, 1])))


def inside_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Crossing-number test for each point (boolean array)."""
    p = _closed(poly)
    x, y = points[..., 0], points[..., 1]
    inside = np.zeros(x.shape, dtype=bool)
    q = np.roll(p, -1, axis=0)
    for (x0, y0), (x1, y1) in zip(p, q):
        cond = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= cond & (x < xc)
    return inside


def distance_to_polyline(points: np.ndarray, poly: np.ndarray, chunk: int = 16) -> np.ndarray:
    """Euclidean distance from each point to a closed polyline."""
    p = _closed(poly)
    a = p
    b = np.roll(p, -1, axis=0)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    best = np.full(pts.shape[0], np.inf)
    for s in range(0, a.shape[0], chunk):
        A, B = a[s:s + chunk], b[s:s + chunk]
        d = B - A
        dd = np.maximum(np.sum(d * d, axis=1), 1e-300)
        rel = pts[:, None, :] - A[None, :, :]
        t = np.clip(np.sum(rel * d[None], axis=2) / dd[None], 0.0, 1.0)
        diff = rel - t[..., None] * d[None]
        best = np.minimum(best, np.min(np.hypot(diff[..., 0], diff[..., 1]), axis=1))
    return best.reshape(np.shape(points)[:-1])


def signed_distance(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distance to the polyline, negative inside."""
    d = distance_to_polyline(points, poly)
    return np.where(inside_polygon(points, poly), -d, d)


def resample_closed(poly: np.ndarray, n: int = 2000) -> np.ndarray:
    """``n`` points equally spaced in arc length along a closed polyline."""
    p = _closed(poly)
    q = np.vstack([p, p[:1]])
    seg = np.hypot(*np.diff(q, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    t = np.linspace(0.0, s[-1], n, endpoint=False)
    return np.column_stack([np.interp(t, s, q[:, 0]), np.interp(t, s, q[:, 1])])


def hausdorff(a, b, n: int = 2000) -> float:
    """Symmetric Hausdorff distance between (unions of) closed polylines.

    Each polyline is resampled to ``n`` points; distances are nearest
    neighbour queries on the resampled sets.
    """
    a = a if isinstance(a, (list, tuple)) else [a]
    b = b if isinstance(b, (list, tuple)) else [b]
    pa = np.vstack([resample_closed(c, n) for c in a])
    pb = np.vstack([resample_closed(c, n) for c in b])
    da, _ = cKDTree(pb).query(pa)
    db, _ = cKDTree(pa).query(pb)
    return float(max(da.max(), db.max()))


def circumcircle_curvature(poly: np.ndarray) -> np.ndarray:
    """Curvature at each vertex from the circle through it and its neighbours."""
    p = _closed(poly)
    a, b, c = np.roll(p, 1, axis=0), p, np.roll(p, -1, axis=0)
    ab = np.hypot(*(b - a).T)
    bc = np.hypot(*(c - b).T)
    ca = np.hypot(*(a - c).T)
    cross = (b - a)[:, 0] * (c - a)[:, 1] - (b - a)[:, 1] * (c - a)[:, 0]
    return 2.0 * cross / (ab * bc * ca)
