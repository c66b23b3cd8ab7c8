"""Command-line interface.

Five subcommands: ``sample`` (frames to JSONL), ``hist`` (observable
histogram to CSV), ``oracle`` (reference density to CSV), ``compare``
(Monte-Carlo vs oracle KS report), ``frames-grid`` (per-frame one-body
density rasters plus points).

Every run writes a manifest next to its artifacts echoing the fully resolved
configuration and the SHA-256 of each output file; identical configurations
produce byte-identical artifacts and manifests.  Exit codes: 0 success,
2 flag/parse error, 3 validation error, 4 compare threshold failed.

Configuration may come from a flat ``key = value`` file (--config); explicit
flags override the file, and the environment variable BOSONSIM_SEED supplies
the seed when --seed is absent.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from . import __version__
from ._core import BACKEND
from .bases import (Geometry, averaged_one_body, one_body_density, parse_basis)
from .errors import BosonsimError, ValidationError
from .observables import ESTIMATOR_KINDS, estimate, ks_statistic
from .oracles import FAMILIES, closed_form_for, quadrature_distance
from .sampler import SamplerConfig, sample_frames, write_frames_jsonl
from .states import Fock, Mixture, parse_state

__all__ = ["main"]

_G = ".17g"


def _fmt(x: float) -> str:
    return format(float(x), _G)


# ----- config resolution -----------------------------------------------------

_CONFIG_KEYS = {
    "state": str, "basis": str, "n": int, "frames": int, "seed": int,
    "observable": str, "estimator": str, "bins": int, "out": str,
    "proj_radius": float, "workers": int, "multiplicity": str,
    "q_order": int, "family": str, "c": float, "oracle_family": str,
    "oracle_c": float, "threshold": float, "out_dir": str,
}


def _read_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValidationError(
                        f"{path}:{lineno}: expected 'key = value'"
                    )
                key, val = (part.strip() for part in line.split("=", 1))
                key = key.replace("-", "_")
                if key not in _CONFIG_KEYS:
                    raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
                try:
                    values[key] = _CONFIG_KEYS[key](val)
                except ValueError as exc:
                    raise ValidationError(f"{path}:{lineno}: {exc}") from None
    except OSError as exc:
        raise ValidationError(f"cannot read config file: {exc}") from None
    return values


def _resolve(args: argparse.Namespace) -> dict:
    """Merge flags > BOSONSIM_SEED > config file > defaults into one dict."""
    file_vals = _read_config_file(args.config) if args.config else {}
    resolved = {}
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key == "seed" and os.environ.get("BOSONSIM_SEED"):
            try:
                resolved[key] = int(os.environ["BOSONSIM_SEED"])
            except ValueError:
                raise ValidationError("BOSONSIM_SEED must be an integer") from None
        elif key in file_vals:
            resolved[key] = file_vals[key]
    resolved.setdefault("seed", 0)
    resolved.setdefault("n", 2)
    resolved.setdefault("observable", "distance")
    resolved.setdefault("estimator", "tuples")
    resolved.setdefault("bins", 200)
    resolved.setdefault("proj_radius", 1.0)
    resolved.setdefault("workers", os.cpu_count() or 1)
    resolved.setdefault("multiplicity", "fixed")
    resolved.setdefault("q_order", 0)
    resolved.setdefault("threshold", 0.005)
    resolved["command"] = args.command
    return resolved


def _require(cfg: dict, *keys: str):
    for key in keys:
        if key not in cfg:
            raise ValidationError(
                f"{cfg['command']} needs --{key.replace('_', '-')} "
                "(flag or config file)"
            )


def _validate_common(cfg: dict):
    if cfg["seed"] < 0:
        raise ValidationError("seed must be a non-negative 64-bit integer")
    if "frames" in cfg and cfg["frames"] < 1:
        raise ValidationError("frames must be >= 1")
    if cfg["observable"] not in ("distance", "perimeter"):
        raise ValidationError("observable must be 'distance' or 'perimeter'")
    if cfg["estimator"] not in ESTIMATOR_KINDS:
        raise ValidationError(f"estimator must be one of {ESTIMATOR_KINDS}")
    if cfg["bins"] < 1:
        raise ValidationError("bins must be >= 1")
    if cfg["proj_radius"] <= 0.0:
        raise ValidationError("proj-radius must be positive")
    if cfg["workers"] < 1:
        raise ValidationError("workers must be >= 1")


# ----- manifest --------------------------------------------------------------

def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(path: str, cfg: dict, artifacts: list, extra: Optional[dict] = None):
    doc = {
        "tool": "bosonsim",
        "version": __version__,
        "backend": BACKEND,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "artifacts": {os.path.basename(p): _sha256(p) for p in artifacts},
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ----- subcommands -----------------------------------------------------------

def _sampling_config(cfg: dict) -> SamplerConfig:
    state = parse_state(cfg["state"])
    basis = parse_basis(cfg["basis"])
    return SamplerConfig(
        state=state, basis=basis, n_points=cfg["n"], n_frames=cfg["frames"],
        seed=cfg["seed"], multiplicity=cfg["multiplicity"],
        q_order=cfg["q_order"],
    )


def _cmd_sample(cfg: dict) -> int:
    _require(cfg, "state", "basis", "frames", "out")
    scfg = _sampling_config(cfg)
    batch = sample_frames(scfg, workers=cfg["workers"])
    count = write_frames_jsonl(batch, cfg["out"])
    _write_manifest(cfg["out"] + ".manifest.json", cfg, [cfg["out"]],
                    {"n_frames": count})
    return 0


def _estimate_run(cfg: dict):
    scfg = _sampling_config(cfg)
    batch = sample_frames(scfg, workers=cfg["workers"])
    q = 2 if cfg["observable"] == "distance" else cfg["n"]
    hi = 6.0 if cfg["observable"] == "distance" \
        else 2.0 * math.pi * cfg["proj_radius"]
    res = estimate(batch, cfg["observable"], q, cfg["estimator"],
                   bins=cfg["bins"], lo=0.0, hi=hi,
                   proj_radius=cfg["proj_radius"])
    return res


def _cmd_hist(cfg: dict) -> int:
    _require(cfg, "state", "basis", "frames", "out")
    res = _estimate_run(cfg)
    with open(cfg["out"], "w") as fh:
        fh.write("bin_lo,bin_hi,density\n")
        for lo, hi, dens in res.histogram.csv_rows():
            fh.write(f"{_fmt(lo)},{_fmt(hi)},{_fmt(dens)}\n")
    _write_manifest(cfg["out"] + ".manifest.json", cfg, [cfg["out"]], {
        "mean": res.mean, "stderr": res.stderr,
        "total_weight": res.total_weight, "n_frames_used": res.n_frames_used,
    })
    return 0


def _pick_oracle(cfg: dict):
    """Oracle for compare: explicit family/c flags, else derived from the
    state/basis pair (closed form where one exists, quadrature otherwise)."""
    state = parse_state(cfg["state"])
    basis = parse_basis(cfg["basis"])
    family = cfg.get("oracle_family")
    c = cfg.get("oracle_c")
    if family is not None:
        if family not in FAMILIES:
            raise ValidationError(f"oracle family must be one of {sorted(FAMILIES)}")
        if c is None:
            raise ValidationError("--oracle-family needs --oracle-c")
        return FAMILIES[family](c)
    if c is not None:
        from .bases import DipolePair, MixedLG, VortexPair
        if isinstance(basis, VortexPair) and basis.ell in (1, 2):
            return FAMILIES["vortex1" if basis.ell == 1 else "vortex2"](c)
        if isinstance(basis, DipolePair):
            return FAMILIES["dipole"](c)
        raise ValidationError(
            "--oracle-c without --oracle-family needs a basis with a "
            "closed-form family (vortex:1, vortex:2, dipole)"
        )
    try:
        return closed_form_for(state, basis)
    except ValidationError:
        return quadrature_distance(state, basis)


def _cmd_compare(cfg: dict) -> int:
    _require(cfg, "state", "basis", "frames")
    if cfg["observable"] != "distance":
        raise ValidationError(
            "compare has reference laws for the distance observable only"
        )
    oracle = _pick_oracle(cfg)
    res = _estimate_run(cfg)
    ks = ks_statistic(res.values, oracle.cdf, res.weights)
    passed = bool(ks < cfg["threshold"])
    report = {
        "ks": ks,
        "n_samples": int(res.values.size),
        "threshold": cfg["threshold"],
        "mean": res.mean,
        "stderr": res.stderr,
        "oracle": getattr(oracle, "kind", "unknown"),
        "pass": passed,
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if cfg.get("out"):
        with open(cfg["out"], "w") as fh:
            fh.write(text)
        _write_manifest(cfg["out"] + ".manifest.json", cfg, [cfg["out"]], {})
    else:
        sys.stdout.write(text)
    return 0 if passed else 4


def _cmd_oracle(cfg: dict) -> int:
    _require(cfg, "family", "out")
    family = cfg["family"]
    if family == "quadrature":
        _require(cfg, "state", "basis")
        dist = quadrature_distance(parse_state(cfg["state"]),
                                   parse_basis(cfg["basis"]))
    elif family in FAMILIES:
        _require(cfg, "c")
        dist = FAMILIES[family](cfg["c"])
    else:
        raise ValidationError(
            f"family must be one of {sorted(FAMILIES) + ['quadrature']}"
        )
    d = np.linspace(0.0, 6.0, 1024)
    dens = dist.pdf(d)
    with open(cfg["out"], "w") as fh:
        fh.write("d,density\n")
        for x, y in zip(d, dens):
            fh.write(f"{_fmt(x)},{_fmt(y)}\n")
    _write_manifest(cfg["out"] + ".manifest.json", cfg, [cfg["out"]], {})
    return 0


def _cmd_frames_grid(cfg: dict) -> int:
    _require(cfg, "state", "basis", "frames", "out_dir")
    scfg = _sampling_config(cfg)
    batch = sample_frames(scfg, workers=cfg["workers"])
    os.makedirs(cfg["out_dir"], exist_ok=True)
    axis = np.linspace(-3.0, 3.0, 128)
    gx, gy = np.meshgrid(axis, axis)
    grid_pts = np.column_stack([gx.ravel(), gy.ravel()])
    state, basis = scfg.state, scfg.basis
    fixed_panel = None
    if isinstance(state, (Fock, Mixture)):
        # correlated frames have no per-frame geometry; the panel every frame
        # shares is the state's averaged one-body density
        fixed_panel = averaged_one_body(state, basis, grid_pts).reshape(128, 128)
    artifacts = []
    for frame in batch.frames():
        if fixed_panel is None:
            geom = Geometry(t=frame.t, eta=frame.eta, basis=basis, s=frame.s)
            panel = one_body_density(geom, grid_pts).reshape(128, 128)
        else:
            panel = fixed_panel
        base = os.path.join(cfg["out_dir"], f"frame_{frame.frame_id:06d}")
        with open(base + "_density.csv", "w") as fh:
            for row in panel:
                fh.write(",".join(_fmt(v) for v in row))
                fh.write("\n")
        with open(base + "_points.csv", "w") as fh:
            fh.write("x,y\n")
            for x, y in frame.points:
                fh.write(f"{_fmt(x)},{_fmt(y)}\n")
        artifacts += [base + "_density.csv", base + "_points.csv"]
    _write_manifest(os.path.join(cfg["out_dir"], "manifest.json"), cfg,
                    artifacts, {"grid": {"shape": [128, 128],
                                         "extent": [-3.0, 3.0, -3.0, 3.0]}})
    return 0


_COMMANDS = {
    "sample": _cmd_sample,
    "hist": _cmd_hist,
    "oracle": _cmd_oracle,
    "compare": _cmd_compare,
    "frames-grid": _cmd_frames_grid,
}


# ----- argument parsing ------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, *, sampling: bool):
    p.add_argument("--config", help="flat key = value defaults file")
    p.add_argument("--seed", type=int, help="base RNG seed (BOSONSIM_SEED fallback)")
    p.add_argument("--out", help="output artifact path")
    if sampling:
        p.add_argument("--state", help="state token, e.g. thermal:1,1 or fock:1,1")
        p.add_argument("--basis", help="basis token, e.g. vortex:1, dipole, mixedlg")
        p.add_argument("--n", type=int, help="particles per frame (default 2)")
        p.add_argument("--frames", type=int, help="number of frames")
        p.add_argument("--workers", type=int,
                       help="worker processes (default: logical cores)")
        p.add_argument("--multiplicity", choices=("fixed", "poisson"),
                       help="points per frame: fixed n or Poisson from intensity")
        p.add_argument("--q-order", dest="q_order", type=int,
                       help="tilt geometry law for q-fold coincidences")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bosonsim",
        description="Interfering-boson frame sampler with exact reference laws",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="write frames as JSONL")
    _add_common(p, sampling=True)

    p = sub.add_parser("hist", help="estimate an observable histogram (CSV)")
    _add_common(p, sampling=True)
    p.add_argument("--observable", choices=("distance", "perimeter"))
    p.add_argument("--estimator", choices=ESTIMATOR_KINDS)
    p.add_argument("--bins", type=int)
    p.add_argument("--proj-radius", dest="proj_radius", type=float)

    p = sub.add_parser("oracle", help="write a reference density curve (CSV)")
    _add_common(p, sampling=False)
    p.add_argument("--family",
                   help="vortex1 | dipole | vortex2 | quadrature")
    p.add_argument("--c", type=float, help="correlation parameter in [0, 1/2]")
    p.add_argument("--state", help="state token (family=quadrature)")
    p.add_argument("--basis", help="basis token (family=quadrature)")

    p = sub.add_parser("compare", help="Monte Carlo vs oracle KS report")
    _add_common(p, sampling=True)
    p.add_argument("--observable", choices=("distance", "perimeter"))
    p.add_argument("--estimator", choices=ESTIMATOR_KINDS)
    p.add_argument("--bins", type=int)
    p.add_argument("--oracle-family", dest="oracle_family",
                   help="override the closed-form family")
    p.add_argument("--oracle-c", dest="oracle_c", type=float,
                   help="override the correlation parameter")
    p.add_argument("--threshold", type=float,
                   help="KS pass threshold (default 0.005)")

    p = sub.add_parser("frames-grid",
                       help="per-frame one-body density rasters plus points")
    _add_common(p, sampling=True)
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    return ap


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        _validate_common(cfg)
        return _COMMANDS[args.command](cfg)
    except BosonsimError as exc:
        print(f"bosonsim: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
