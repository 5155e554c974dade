"""Sharp-interface convergence experiment and reporting.

Each experiment cell ``(eps, seed)`` draws one noise path, runs the
phase-field equation from order-zero data around the initial curve and the
curve flow from the same curve, both driven by that path, and compares
them at common sample times.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import acpde, geometry, limitflow
from .cache import get_noise
from .noise import NoiseConfig
from .reaction import make_cubic

__all__ = [
    "ExperimentConfig",
    "RunRecord",
    "StoppingTimeHit",
    "load_config",
    "make_shape",
    "run_cell",
    "converge",
    "summarize",
    "report",
    "write_pgm",
    "write_ppm",
    "render_snapshot",
    "strictly_decreasing",
]


class StoppingTimeHit(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    eps_list: tuple = (0.08, 0.04, 0.02)
    N_list: tuple = (128, 256, 512)
    alpha: float = 0.5
    family: str = "mollified_bm"
    seeds: tuple = tuple(range(8))
    L: float = 1.0
    shape: tuple = ("ellipse", 0.3, 0.2)
    T: float = 0.05
    n_samples: int = 10
    ac_safety: float = 0.2
    M: int = 128
    L_cut: float = 50.0
    beta_tilde: float = 1.0
    psi_variant: str = "power"
    out_dir: Optional[str] = None
    workers: int = 1
    keep_snapshots: bool = False

    def __post_init__(self):
        self.eps_list = tuple(float(e) for e in self.eps_list)
        self.N_list = tuple(int(n) for n in self.N_list)
        self.seeds = tuple(int(s) for s in self.seeds)
        if len(self.eps_list) != len(self.N_list):
            raise ValueError("eps_list and N_list must have equal length")
        if any(b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ValueError("eps_list must be strictly decreasing")
        if self.T <= 0 or self.n_samples < 1:
            raise ValueError("T and n_samples must be positive")

    def noise_config(self) -> NoiseConfig:
        return NoiseConfig(beta_tilde=self.beta_tilde, psi_variant=self.psi_variant,
                           family=self.family)

    def ac_steps(self, eps: float) -> int:
        """Step count: a multiple of n_samples with dt inside the reaction budget."""
        budget = acpde.stable_dt(eps, make_cubic(), self.ac_safety)
        return self.n_samples * math.ceil(self.T / (self.n_samples * budget) - 1e-9)


_LIST_KEYS = {"eps_list": float, "N_list": int, "seeds": int}


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Flat ``key = value`` file (``#`` comments; lists comma separated)."""
    raw: dict = {}
    if path is not None:
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            k, _, v = line.partition("=")
            raw[k.strip()] = v.strip()
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    kwargs = {}
    for k, v in raw.items():
        if k not in types:
            raise ValueError(f"unknown config key {k!r}")
        if not isinstance(v, str):
            kwargs[k] = v
        elif k in _LIST_KEYS:
            kwargs[k] = tuple(_LIST_KEYS[k](x) for x in v.split(",") if x.strip())
        elif k == "shape":
            parts = v.replace(",", " ").split()
            kwargs[k] = (parts[0],) + tuple(float(x) for x in parts[1:])
        elif k in ("family", "psi_variant", "out_dir"):
            kwargs[k] = v
        elif k == "keep_snapshots":
            kwargs[k] = v.lower() in ("1", "true", "yes")
        elif k in ("n_samples", "M", "workers"):
            kwargs[k] = int(v)
        else:
            kwargs[k] = float(v)
    return ExperimentConfig(**kwargs)


def make_shape(shape, M: int, L: float, L_cut: float = math.inf) -> limitflow.CurveState:
    center = (0.5 * L, 0.5 * L)
    if shape[0] == "circle":
        return limitflow.circle_state(shape[1], M, center, L_cut)
    if shape[0] == "ellipse":
        return limitflow.ellipse_state(shape[1], shape[2], M, center, L_cut)
    raise ValueError(f"unknown shape {shape[0]!r}")


@dataclass
class RunRecord:
    eps: float
    N: int
    seed: int
    dt: float
    ledger_max: float
    times: list
    hausdorff: list
    l2: list
    mass_gap: list
    stopped: bool
    stop_time: float
    stop_reason: str
    wall_time: float
    snapshot: Optional[dict] = field(default=None, repr=False)

    @property
    def sup_hausdorff(self) -> float:
        return float(np.max(self.hausdorff)) if self.hausdorff else math.nan

    def row(self) -> dict:
        return {"eps": self.eps, "N": self.N, "seed": self.seed, "dt": self.dt,
                "ledger_max": self.ledger_max, "sup_hausdorff": self.sup_hausdorff,
                "sup_l2": float(np.max(self.l2)) if self.l2 else math.nan,
                "max_mass_gap": float(np.max(self.mass_gap)) if self.mass_gap else math.nan,
                "n_samples": len(self.times), "stopped": int(self.stopped),
                "stop_time": self.stop_time, "wall_time": self.wall_time}

    def to_json(self) -> dict:
        d = asdict(self)
        d["snapshot"] = None
        return d


def _sharp_indicator(poly: np.ndarray, N: int, L: float) -> np.ndarray:
    X, Y = acpde.cell_centers(N, L)
    inside = geometry.inside_polygon(np.stack([X, Y], axis=-1), poly)
    return np.where(inside, -1.0, 1.0)


def run_cell(cfg: ExperimentConfig, eps: float, N: int, seed: int) -> RunRecord:
    """One (eps, seed) cell of the convergence study."""
    start = time.perf_counter()
    b = make_cubic()
    n = cfg.ac_steps(eps)
    dt = cfg.T / n
    stride = n // cfg.n_samples
    root = Path(cfg.out_dir) / "noise" if cfg.out_dir else None
    path = get_noise(cfg.family, eps, cfg.T, dt, seed, cfg.noise_config(), root)
    curve = make_shape(cfg.shape, cfg.M, cfg.L, cfg.L_cut)
    field0 = acpde.init_from_curve(curve, eps, N, cfg.L, b=b, alpha=cfg.alpha)
    flow = limitflow.integrate(curve, cfg.T, dt, mode="strat", path=path, alpha=cfg.alpha,
                               area_D=cfg.L ** 2, record_every=stride, domain_L=cfg.L)
    times, haus, l2, gap = [], [], [], []
    ledger_max = 0.0
    stopped, stop_time, reason = flow.stopped, flow.stop_time, flow.stop_reason
    fld = field0
    snapshot = None
    flow_by_time = {round(t / dt): s for t, s in zip(flow.times, flow.states)}
    area_D = cfg.L ** 2
    for k in range(cfg.n_samples + 1):
        idx = k * stride
        if idx not in flow_by_time:
            break
        if k > 0:
            try:
                fld, ledger, _ = acpde.run(fld, b, path, stride * dt, dt)
            except (acpde.FieldBlowup, acpde.SolverDiverged) as exc:
                if not stopped or fld.t < stop_time:
                    stopped, stop_time, reason = True, fld.t, f"phase field: {exc}"
                break
            ledger_max = max(ledger_max, ledger.max_residual())
        state = flow_by_time[idx]
        poly = limitflow.reconstruct(state, check=False)
        try:
            level = acpde.extract_zero_level(fld)
        except acpde.NoInterface:
            stopped, stop_time, reason = True, fld.t, "interface vanished"
            break
        times.append(fld.t)
        haus.append(geometry.hausdorff(level, poly))
        chi = _sharp_indicator(poly, N, cfg.L)
        l2.append(float(np.sqrt(np.sum((fld.u - chi) ** 2)) * fld.dx))
        area = limitflow.geometry(state)[2]
        gap.append(abs((1.0 - 2.0 * area / area_D) - fld.mean))
        if cfg.keep_snapshots:
            snapshot = {"t": fld.t, "u": fld.u.copy(), "level": level, "curve": poly, "L": cfg.L}
    return RunRecord(eps=eps, N=N, seed=seed, dt=dt, ledger_max=ledger_max, times=times,
                     hausdorff=haus, l2=l2, mass_gap=gap, stopped=stopped,
                     stop_time=stop_time if stopped else math.nan, stop_reason=reason,
                     wall_time=time.perf_counter() - start, snapshot=snapshot)


def _cell_job(args):
    cfg, eps, N, seed = args
    return run_cell(cfg, eps, N, seed)


def summarize(records: Sequence[RunRecord]) -> list:
    """Per-eps medians over seeds, sorted by eps descending."""
    rows = []
    for eps in sorted({r.eps for r in records}, reverse=True):
        rs = [r for r in records if r.eps == eps]
        rows.append({
            "eps": eps,
            "N": rs[0].N,
            "n_runs": len(rs),
            "median_sup_hausdorff": float(np.median([r.sup_hausdorff for r in rs])),
            "median_sup_l2": float(np.median([np.max(r.l2) if r.l2 else math.nan for r in rs])),
            "max_ledger": float(max(r.ledger_max for r in rs)),
            "max_mass_gap": float(max(np.max(r.mass_gap) if r.mass_gap else math.nan for r in rs)),
            "n_stopped": int(sum(r.stopped for r in rs)),
        })
    return rows


SUMMARY_FIELDS = ["eps", "N", "n_runs", "median_sup_hausdorff", "median_sup_l2", "max_ledger",
                  "max_mass_gap", "n_stopped"]


def strictly_decreasing(values: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def converge(cfg: ExperimentConfig):
    """Run every cell; returns (records, summary rows).

    Cells are independent, evaluated in a fixed order and merged in that
    order, so results do not depend on worker scheduling.
    """
    jobs = [(cfg, e, n, s) for e, n in zip(cfg.eps_list, cfg.N_list) for s in cfg.seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_cell_job, jobs))
    else:
        records = [_cell_job(j) for j in jobs]
    summary = summarize(records)
    if cfg.out_dir:
        report(records, cfg.out_dir)
    return records, summary


# ---------------------------------------------------------------------------
# output


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(header))
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in header})


def write_pgm(path, gray: np.ndarray) -> None:
    g = np.asarray(gray, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{g.shape[1]} {g.shape[0]}\n255\n".encode())
        fh.write(g.tobytes())


def write_ppm(path, rgb: np.ndarray) -> None:
    c = np.asarray(rgb, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{c.shape[1]} {c.shape[0]}\n255\n".encode())
        fh.write(c.tobytes())


def _stamp(img, poly, L, color):
    H = img.shape[0]
    p = geometry.resample_closed(poly, 8 * H)
    ix = np.clip((p[:, 0] / L * H).astype(int), 0, H - 1)
    iy = np.clip((p[:, 1] / L * H).astype(int), 0, H - 1)
    img[H - 1 - iy, ix] = color


def render_snapshot(u: np.ndarray, L: float, polylines=(), curve=None) -> np.ndarray:
    """RGB image of u (black -1, white +1), y up, with overlaid curves."""
    g = np.clip((np.asarray(u) + 1.0) * 127.5, 0, 255).astype(np.uint8)
    img = np.repeat(g.T[::-1, :, None], 3, axis=2)
    for poly in polylines:
        _stamp(img, poly, L, (220, 30, 30))
    if curve is not None:
        _stamp(img, curve, L, (30, 90, 230))
    return img


def report(records: Sequence[RunRecord], out_dir) -> list:
    """Write runs.csv, runs.json, summary.csv and snapshot rasters."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run_fields = ["eps", "N", "seed", "dt", "ledger_max", "sup_hausdorff", "sup_l2",
                  "max_mass_gap", "n_samples", "stopped", "stop_time", "wall_time"]
    _write_csv(out / "runs.csv", run_fields, [r.row() for r in records])
    (out / "runs.json").write_text(json.dumps([r.to_json() for r in records]))
    summary = summarize(records)
    _write_csv(out / "summary.csv", SUMMARY_FIELDS, summary)
    for r in records:
        if r.snapshot is not None:
            s = r.snapshot
            img = render_snapshot(s["u"], s["L"], s["level"], s["curve"])
            write_ppm(out / f"snapshot_eps{r.eps:g}_seed{r.seed}.ppm", img)
    return summary


def load_records(path) -> list:
    data = json.loads(Path(path).read_text())
    return [RunRecord(**d) for d in data]
