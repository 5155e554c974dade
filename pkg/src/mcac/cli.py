"""Command line front end: ``mcac <subcommand>``.

Outputs go below ``$MCAC_OUT`` (default ``./mcac_out``). Exit status is 0
on success, 2 when an acceptance check fails and 3 when a run was cut
short at a stopping time.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import acpde, expansion, harness, limitflow, noise, profile
from .cache import get_noise, load_noise
from .reaction import make_cubic

EXIT_OK, EXIT_FAIL, EXIT_STOPPED = 0, 2, 3


def out_root() -> Path:
    p = Path(os.environ.get("MCAC_OUT", "mcac_out"))
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _reaction(name: str):
    if name != "cubic":
        raise SystemExit(f"unknown reaction {name!r}")
    return make_cubic()


def _noise_cfg(args, family=None) -> noise.NoiseConfig:
    return noise.NoiseConfig(beta_tilde=args.beta_tilde, psi_variant=args.psi_variant,
                             family=family or args.noise_family, k_max=getattr(args, "k_max", 4))


def cmd_profile(args) -> int:
    b = _reaction(args.reaction)
    p = profile.solve_standing(b, args.R, args.h)
    sa, sb = profile.sigma_bar(p)
    th = profile.solve_theta1(p, sa)
    _write_rows(out_root() / "profile.csv", ["rho", "m", "m_prime", "theta1"],
                zip(p.rho, p.values, p.derivative, th.values))
    print(f"sigma_a = {sa:.10f}  sigma_b = {sb:.10f}")
    if args.a is not None:
        tw = profile.solve_traveling(b, args.a, args.R, args.h)
        print(f"a = {args.a}: c = {tw.c:.10g}, m*+ = {tw.m_star_plus:.10f}, m*- = {tw.m_star_minus:.10f}")
    if args.eps is not None:
        ev = profile.principal_eigenvalue(p, args.eps)
        print(f"eps = {args.eps}: principal eigenvalue {ev.value:.4e}, cosine with m' {ev.cosine:.8f}")
    return EXIT_OK


def _path(args, T, dt):
    cfg = _noise_cfg(args)
    return get_noise(args.noise_family, args.eps, T, dt, args.seed, cfg, out_root() / "noise")


def cmd_noise(args) -> int:
    cfg = _noise_cfg(args, args.family)
    p = get_noise(args.family, args.eps, args.T, args.dt, args.seed, cfg, out_root() / "noise")
    header = ["t", "w"] + [f"dw{k}" for k in range(1, p.k_max + 1)]
    _write_rows(out_root() / "noise.csv", header, np.column_stack([p.t, p.w, p.derivs.T]))
    print(f"psi = {p.psi:.6g}, h_eps = {p.h_eps:.6g}")
    return EXIT_OK


def _shape(spec, M, L_cut=math.inf):
    kind = spec[0]
    vals = [float(x) for x in spec[1:]]
    return harness.make_shape((kind, *vals), M, 1.0, L_cut) if kind in ("circle", "ellipse") else None


def cmd_ac(args) -> int:
    b = make_cubic()
    dt = args.dt or acpde.stable_dt(args.eps, b)
    n = math.ceil(args.T / dt - 1e-9)
    dt = args.T / n
    path = _path(args, args.T, dt) if args.alpha != 0 else None
    shape = harness.make_shape(("circle", args.R), 256, args.L)
    field = acpde.init_from_curve(shape, args.eps, args.N, args.L, b=b, alpha=args.alpha)
    every = args.snapshot_every or args.T
    snaps = np.arange(0, args.T + 1e-12, every)
    root = out_root()
    status = EXIT_OK
    try:
        out, ledger, snapshots = acpde.run(field, b, path, args.T, dt, snapshot_times=snaps)
    except (acpde.FieldBlowup, acpde.SolverDiverged) as exc:
        print(f"stopped: {exc}", file=sys.stderr)
        return EXIT_STOPPED
    a = ledger.as_array()
    _write_rows(root / "ledger.csv", ["t", "mean_u", "alpha_w", "residual"],
                np.column_stack([a, ledger.residuals()]))
    rows = []
    for t, u in snapshots:
        try:
            for poly in acpde.extract_zero_level(acpde.PhaseField(u, args.eps, t, field.dx, field.mass0)):
                rows.extend((t, x, y) for x, y in poly)
        except acpde.NoInterface:
            status = EXIT_STOPPED
        if args.raster:
            harness.write_pgm(root / f"u_t{t:.4f}.pgm",
                              np.clip((u.T[::-1] + 1) * 127.5, 0, 255).astype(np.uint8))
    _write_rows(root / "interface.csv", ["t", "x", "y"], rows)
    print(f"ledger max residual {ledger.max_residual():.3e}")
    return status


def cmd_flow(args) -> int:
    state = _shape(args.shape, args.M, args.L_cut)
    if state is None:
        raise SystemExit("shape must be 'circle R' or 'ellipse a b'")
    path, rng = None, None
    if args.mode == "strat":
        path = load_noise(args.noise_cache, out_root() / "noise") if args.noise_cache else _path(args, args.T, args.dt)
    elif args.mode == "ito":
        rng = np.random.default_rng(args.seed)
    res = limitflow.integrate(state, args.T, args.dt, mode=args.mode, path=path, rng=rng,
                              alpha=args.alpha, area_D=args.areaD)
    resid = res.area - res.area[0] + 0.5 * args.alpha * args.areaD * (res.w - res.w[0])
    root = out_root()
    _write_rows(root / "trajectory.csv", ["t", "length", "area", "kappa_min", "kappa_max", "area_residual"],
                np.column_stack([res.times, res.length, res.area, res.kappa_min, res.kappa_max, resid]))
    rows = []
    for s in res.states[:: max(1, len(res.states) // 10)] + [res.final]:
        rows.extend((s.t, x, y) for x, y in limitflow.reconstruct(s, check=False))
    _write_rows(root / "polylines.csv", ["t", "x", "y"], rows)
    if path is not None:
        v = args.alpha * np.interp(res.times, path.t, path.wdot)
    else:
        v = np.zeros(res.times.size)
    np.savez(root / "trajectory.npz", t=res.times, kappa=np.array([s.kappa for s in res.states]),
             anchor=np.array([s.anchor for s in res.states]), v=v, alpha=args.alpha, area_D=args.areaD)
    print(f"max area residual {np.max(np.abs(resid)):.3e}")
    if res.stopped:
        print(f"stopped: {res.stop_reason}", file=sys.stderr)
        return EXIT_STOPPED
    return EXIT_OK


def cmd_expansion(args) -> int:
    z = np.load(args.trajectory)
    states = [limitflow.CurveState(kappa=k, anchor=a, t=t) for k, a, t in zip(z["kappa"], z["anchor"], z["t"])]
    b = make_cubic()
    p = profile.solve_standing(b)
    sigma = profile.sigma_bar(p)[0]
    th = profile.solve_theta1(p, sigma)
    res = expansion.solve_h1(states, z["v"], sigma, p, th, float(z["area_D"]))
    _write_rows(out_root() / "expansion.csv",
                ["t", "lambda0", "lambda1", "h1_min", "h1_max", "theta_variance_flag"],
                zip(res.times, res.lambda0, res.lambda1, res.h1.min(axis=1), res.h1.max(axis=1),
                    res.flagged.astype(int)))
    return EXIT_OK


def cmd_converge(args) -> int:
    overrides = {"out_dir": str(out_root() / "converge")}
    if args.seeds is not None:
        overrides["seeds"] = args.seeds
    if args.workers is not None:
        overrides["workers"] = args.workers
    cfg = harness.load_config(args.config, overrides)
    records, summary = harness.converge(cfg)
    for row in summary:
        print(f"eps = {row['eps']:<6g} N = {row['N']:<4d} median sup Hausdorff {row['median_sup_hausdorff']:.5f}")
    ok = harness.strictly_decreasing([r["median_sup_hausdorff"] for r in summary])
    print("convergence:", "PASS" if ok else "FAIL")
    if not ok:
        return EXIT_FAIL
    return EXIT_STOPPED if any(r.stopped for r in records) else EXIT_OK


def cmd_report(args) -> int:
    records = harness.load_records(args.runs)
    summary = harness.report(records, args.out or out_root() / "report")
    for row in summary:
        print(json.dumps(row))
    return EXIT_OK


def _add_noise_args(p, family_flag="--noise-family"):
    p.add_argument(family_flag, dest="noise_family" if family_flag == "--noise-family" else "family",
                   default="mollified_bm", choices=["mollified_bm", "mixing"])
    p.add_argument("--beta-tilde", type=float, default=1.0)
    p.add_argument("--psi-variant", default="power", choices=["safe", "raw", "power"])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mcac", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="wave profiles, sigma, corrector, eigenvalue")
    p.add_argument("--reaction", default="cubic")
    p.add_argument("--R", type=float, default=profile.DEFAULT_R)
    p.add_argument("--h", type=float, default=profile.DEFAULT_H)
    p.add_argument("--a", type=float)
    p.add_argument("--eps", type=float)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("noise", help="sample and cache a noise path")
    _add_noise_args(p, "--family")
    p.add_argument("--eps", type=float, default=1e-2)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-max", type=int, default=4)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("ac", help="phase-field run from a circle")
    p.add_argument("--eps", type=float, default=0.04)
    p.add_argument("--N", type=int, default=128)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--R", type=float, default=0.25)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--T", type=float, default=0.1)
    p.add_argument("--dt", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snapshot-every", type=float)
    p.add_argument("--raster", action="store_true")
    _add_noise_args(p)
    p.set_defaults(func=cmd_ac)

    p = sub.add_parser("flow", help="curve flow in Gauss-map coordinates")
    p.add_argument("--shape", nargs="+", default=["circle", "0.25"])
    p.add_argument("--M", type=int, default=256)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--areaD", type=float, default=1.0)
    p.add_argument("--L-cut", type=float, default=math.inf)
    p.add_argument("--T", type=float, default=0.1)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--mode", default="strat", choices=["strat", "ito", "det"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.02)
    p.add_argument("--noise-cache", help="cache key of a stored noise path")
    _add_noise_args(p)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("expansion", help="first-order correction along a stored trajectory")
    p.add_argument("--trajectory", required=True)
    p.set_defaults(func=cmd_expansion)

    p = sub.add_parser("converge", help="sharp-interface convergence study")
    p.add_argument("--config")
    p.add_argument("--seeds", help="comma separated seed list")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("report", help="summaries and rasters from runs.json")
    p.add_argument("--runs", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return int(args.func(args))


if __name__ == "__main__":
    sys.exit(main())
