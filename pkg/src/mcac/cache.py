"""Content-addressed on-disk cache of noise paths.

A path is stored under the SHA-256 of its generating parameters, so the
phase-field run and the curve flow of one experiment cell read the same
realisation. Files are written to a temporary name and renamed into
place; each file carries a checksum of its arrays.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
import zipfile
from pathlib import Path
from typing import Optional

import numpy as np

from .noise import NoiseConfig, NoisePath, make_path

__all__ = ["CacheMiss", "ChecksumMismatch", "noise_key", "cache_noise", "load_noise",
           "get_noise", "default_root"]


class CacheMiss(KeyError):
    pass


class ChecksumMismatch(IOError):
    pass


_ARRAYS = ("t", "w", "derivs", "underlying_bm")


def default_root() -> Path:
    return Path(os.environ.get("MCAC_OUT", "mcac_out")) / "noise"


def noise_key(family: str, eps: float, T: float, dt: float, seed: int, cfg: NoiseConfig) -> str:
    spec = {"family": family, "eps": repr(float(eps)), "T": repr(float(T)), "dt": repr(float(dt)),
            "seed": int(seed), "cfg": cfg.key()}
    return hashlib.sha256(json.dumps(spec, sort_keys=True).encode()).hexdigest()


def _digest(arrays: dict) -> str:
    h = hashlib.sha256()
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name])
        h.update(name.encode())
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def cache_noise(path: NoisePath, key: str, root: Optional[Path] = None) -> Path:
    root = Path(root) if root is not None else default_root()
    root.mkdir(parents=True, exist_ok=True)
    arrays = {name: getattr(path, name) for name in _ARRAYS}
    extra = {}
    meta_consts = {}
    for k, v in path.consts.items():
        if isinstance(v, np.ndarray):
            extra["const_" + k] = v
        else:
            meta_consts[k] = v
    arrays.update(extra)
    meta = {"eps": path.eps, "seed": path.seed, "h_eps": path.h_eps, "family": path.family,
            "psi": path.psi, "dt": path.dt, "consts": meta_consts, "checksum": _digest(arrays)}
    target = root / f"{key}.npz"
    fd, tmp = tempfile.mkstemp(dir=root, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, meta=np.array(json.dumps(meta)), **arrays)
        os.replace(tmp, target)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return target


def load_noise(key: str, root: Optional[Path] = None) -> NoisePath:
    root = Path(root) if root is not None else default_root()
    target = root / f"{key}.npz"
    if not target.exists():
        raise CacheMiss(key)
    try:
        with np.load(target, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            arrays = {name: z[name] for name in z.files if name != "meta"}
    except (zipfile.BadZipFile, ValueError, OSError, KeyError, EOFError) as exc:
        raise ChecksumMismatch(f"{target}: unreadable ({exc})") from exc
    if _digest(arrays) != meta["checksum"]:
        raise ChecksumMismatch(f"{target}: checksum mismatch")
    consts = dict(meta["consts"])
    for name in list(arrays):
        if name.startswith("const_"):
            consts[name[6:]] = arrays.pop(name)
    return NoisePath(t=arrays["t"], w=arrays["w"], derivs=arrays["derivs"], eps=meta["eps"],
                     seed=meta["seed"], h_eps=meta["h_eps"], underlying_bm=arrays["underlying_bm"],
                     family=meta["family"], psi=meta["psi"], dt=meta["dt"], consts=consts)


def get_noise(family: str, eps: float, T: float, dt: float, seed: int, cfg: NoiseConfig,
              root: Optional[Path] = None) -> NoisePath:
    """Load the path from the cache, generating and storing it on a miss."""
    key = noise_key(family, eps, T, dt, seed, cfg)
    try:
        return load_noise(key, root)
    except CacheMiss:
        path = make_path(family, eps, T, seed, cfg, dt)
        cache_noise(path, key, root)
        return path
