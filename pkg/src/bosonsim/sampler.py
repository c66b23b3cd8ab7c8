"""Frame generation: geometry-first classical sampling and the correlated
sequential sampler for fixed-number states.

A "frame" is one experimental shot: a set of detected positions, plus the
shared geometry (t, eta, s) when the state is classical.  Classical states
(thermal, phase-randomized coherent, coherent) factor into geometry laws:
draw (t, eta, s) once per frame, then draw particles independently from the
geometry-conditioned one-body density.  Fixed-number (Fock) states admit no
such factorization; their frames are built particle by particle from exact
conditional angular densities in a vortex basis (other bases go through the
Metropolis fallback).

Determinism: frame content depends only on (seed, frame_id); see
bosonsim._kernels_py for the stream contract.  Identical configs produce
byte-identical frame streams for any worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from . import _core
from ._kernels_py import FrameRng, _sample_geometry
from .bases import Geometry, ModeBasis, VortexPair, basis_code, basis_ell
from .errors import NotClassicalState, ValidationError
from .jointdensity import AngularDensity, SpatialDensity, rho_eval, theta_eval_sympoly
from .states import (Coherent, Fock, Mixture, RPCS, StateSpec, Thermal,
                     correlator_rows)

__all__ = [
    "SamplerConfig", "Frame", "FrameBatch",
    "sample_geometry", "sample_frame_classical", "sample_frame_fock",
    "sample_frames", "mcmc_angles", "mcmc_points",
    "write_frames_jsonl", "read_frames_jsonl",
]

CHUNK = 8192  # frames per worker task; fixed so outputs ignore worker count


@dataclass(frozen=True)
class SamplerConfig:
    state: StateSpec
    basis: ModeBasis
    n_points: int
    n_frames: int
    seed: int = 0
    multiplicity: str = "fixed"      # "fixed" | "poisson"
    q_order: int = 0                 # coincidence-order tilt for geometry laws
    frame_start: int = 0

    def __post_init__(self):
        if self.multiplicity == "fixed" and self.n_points < 1:
            raise ValidationError("fixed-multiplicity frames need at least one point")
        if self.n_frames < 0:
            raise ValidationError("frame count must be non-negative")
        if self.multiplicity not in ("fixed", "poisson"):
            raise ValidationError("multiplicity must be 'fixed' or 'poisson'")
        if self.q_order < 0:
            raise ValidationError("q_order must be non-negative")


@dataclass(frozen=True)
class Frame:
    frame_id: int
    points: np.ndarray               # (M, 2)
    t: Optional[float] = None        # None for correlated (fixed-number) frames
    eta: Optional[float] = None
    s: Optional[float] = None


@dataclass(frozen=True)
class FrameBatch:
    """Column layout of many frames; .frames() yields Frame views."""

    frame_ids: np.ndarray
    counts: np.ndarray
    points: np.ndarray               # (sum counts, 2)
    t: Optional[np.ndarray] = None
    eta: Optional[np.ndarray] = None
    s: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.frame_ids)

    def points_matrix(self) -> np.ndarray:
        """(n_frames, n, 2) view; only for constant multiplicity."""
        n = int(self.counts[0]) if len(self.counts) else 0
        if np.any(self.counts != n):
            raise ValidationError("points_matrix needs constant multiplicity")
        return self.points.reshape(len(self.counts), n, 2)

    def frames(self) -> Iterator[Frame]:
        offsets = np.concatenate([[0], np.cumsum(self.counts)])
        for i, fid in enumerate(self.frame_ids):
            yield Frame(
                frame_id=int(fid),
                points=self.points[offsets[i] : offsets[i + 1]],
                t=None if self.t is None else float(self.t[i]),
                eta=None if self.eta is None else float(self.eta[i]),
                s=None if self.s is None else float(self.s[i]),
            )


# ----- geometry laws ---------------------------------------------------------

def _relative_phase(alpha1: complex, alpha2: complex) -> float:
    return math.atan2(alpha1.imag, alpha1.real) - math.atan2(alpha2.imag, alpha2.real)


def _geometry_law(state: StateSpec, basis: ModeBasis, q_order: int):
    """Kernel law tuple (code, t0, eta0, s0, nbar1, nbar2, q) for a classical state."""
    if isinstance(state, Thermal):
        if state.nbar1 <= 0.0 or state.nbar2 <= 0.0:
            raise ValidationError(
                "thermal geometry sampling needs strictly positive occupations"
            )
        if state.nbar1 == state.nbar2:
            return (_core.LAW_THERMAL_BAL, 0.0, 0.0, 0.0,
                    state.nbar1, state.nbar2, q_order)
        return (_core.LAW_THERMAL_IMB, 0.0, 0.0, 0.0,
                state.nbar1, state.nbar2, q_order)
    if isinstance(state, RPCS):
        s = state.a1**2 + state.a2**2
        if s == 0.0:
            raise ValidationError("RPCS with zero intensity has no geometry")
        return (_core.LAW_RPCS, state.a1**2 / s, 0.0, s, 0.0, 0.0, q_order)
    if isinstance(state, Coherent):
        s = abs(state.alpha1) ** 2 + abs(state.alpha2) ** 2
        if s == 0.0:
            raise ValidationError("coherent state with zero intensity has no geometry")
        t = abs(state.alpha1) ** 2 / s
        rel = _relative_phase(state.alpha1, state.alpha2)
        if isinstance(basis, VortexPair):
            eta0 = rel / (2.0 * basis.ell)   # spatial orientation convention
        else:
            eta0 = rel
        return (_core.LAW_FIXED, t, eta0 % (2.0 * math.pi), s, 0.0, 0.0, q_order)
    if isinstance(state, (Fock, Mixture)):
        raise NotClassicalState(
            "fixed-number states have no positive geometry law; use the "
            "sequential sampler (vortex bases) or the Metropolis fallback"
        )
    raise ValidationError(f"unsupported state type {type(state).__name__}")


def sample_geometry(state: StateSpec, basis: ModeBasis, q_order: int,
                    rng: FrameRng) -> Geometry:
    """Draw one frame geometry (t, eta, s) from the state's geometry law.

    q_order > 0 tilts the law toward frames that would yield a q-fold
    coincidence (intensity weight s^q); q_order = 0 is the bare law.
    """
    law = _geometry_law(state, basis, q_order)
    t, eta, s = _sample_geometry(rng, law)
    return Geometry(t=t, eta=eta, basis=basis, s=s)


def sample_frame_classical(state: StateSpec, basis: ModeBasis, n_points: int,
                           rng: FrameRng, multiplicity: str = "fixed",
                           q_order: int = 0, frame_id: int = 0) -> Frame:
    """One classical frame: shared geometry, then independent particles."""
    law = _geometry_law(state, basis, q_order)
    t, eta, s = _sample_geometry(rng, law)
    m = rng.poisson(s) if multiplicity == "poisson" else n_points
    pts = np.empty((m, 2))
    from ._kernels_py import sample_point

    code, ell = basis_code(basis), basis_ell(basis)
    for j in range(m):
        x, y, _ = sample_point(code, ell, t, eta, rng)
        pts[j] = (x, y)
    return Frame(frame_id=frame_id, points=pts, t=t, eta=eta, s=s)


def _fock_ctab(state: Fock, q: int) -> np.ndarray:
    if q > state.n1 + state.n2:
        raise ValidationError(
            f"cannot draw {q} particles from Fock({state.n1},{state.n2})"
        )
    return correlator_rows(state, q)


def sample_frame_fock(state: Fock, basis: VortexPair, n_points: int,
                      rng: FrameRng, frame_id: int = 0) -> Frame:
    """One correlated frame by sequential exact conditionals (vortex bases)."""
    if not isinstance(state, Fock):
        raise ValidationError("sequential sampler takes a Fock state")
    if not isinstance(basis, VortexPair):
        raise ValidationError(
            "sequential sampling is exact only in vortex bases; "
            "use mcmc_points for other bases"
        )
    ctab = _fock_ctab(state, n_points)
    from ._kernels_py import sample_fock_frame

    pts, _, margin = sample_fock_frame(rng, basis.ell, n_points, ctab)
    if margin < -1e-9:
        raise ValidationError("conditional density went negative; bad correlators")
    return Frame(frame_id=frame_id, points=pts)


# ----- batched generation ----------------------------------------------------

def _classical_chunk(args):
    (seed, start, count, law, code, ell, n_points, poisson) = args
    return _core.kernels.sample_classical_batch(
        seed, start, count, law, code, ell, n_points, poisson
    )


def _fock_chunk(args):
    (seed, start, count, ell, q, ctab) = args
    return _core.kernels.sample_fock_batch(seed, start, count, ell, q, ctab)


def sample_frames(cfg: SamplerConfig, workers: int = 1) -> FrameBatch:
    """Generate cfg.n_frames frames; bit-identical for any worker count."""
    ids = np.arange(cfg.frame_start, cfg.frame_start + cfg.n_frames, dtype=np.int64)
    fock_mode = isinstance(cfg.state, (Fock, Mixture))
    if fock_mode:
        if not isinstance(cfg.state, Fock):
            raise NotClassicalState(
                "mixtures have no direct frame sampler; draw a component with "
                "states.effective_weights and sample it"
            )
        if not isinstance(cfg.basis, VortexPair):
            raise ValidationError(
                "batched correlated sampling requires a vortex basis"
            )
        if cfg.multiplicity != "fixed":
            raise ValidationError("correlated frames have fixed multiplicity")
        ctab = _fock_ctab(cfg.state, cfg.n_points)
        ell = cfg.basis.ell
        tasks = [
            (cfg.seed, int(start), int(min(CHUNK, ids[-1] + 1 - start)),
             ell, cfg.n_points, ctab)
            for start in range(cfg.frame_start, cfg.frame_start + cfg.n_frames, CHUNK)
        ] if cfg.n_frames else []
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_fock_chunk, tasks))
        else:
            results = [_fock_chunk(t) for t in tasks]
        pts = np.concatenate([r[0] for r in results]) if results else np.empty((0, 2))
        margin = min((r[3] for r in results), default=1.0)
        if margin < -1e-9:
            raise ValidationError("conditional density went negative; bad correlators")
        counts = np.full(cfg.n_frames, cfg.n_points, dtype=np.int64)
        return FrameBatch(frame_ids=ids, counts=counts, points=pts)

    law = _geometry_law(cfg.state, cfg.basis, cfg.q_order)
    code, ell = basis_code(cfg.basis), basis_ell(cfg.basis)
    poisson = cfg.multiplicity == "poisson"
    tasks = [
        (cfg.seed, int(start), int(min(CHUNK, ids[-1] + 1 - start)),
         law, code, ell, cfg.n_points, poisson)
        for start in range(cfg.frame_start, cfg.frame_start + cfg.n_frames, CHUNK)
    ] if cfg.n_frames else []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_classical_chunk, tasks))
    else:
        results = [_classical_chunk(t) for t in tasks]
    if results:
        t_arr = np.concatenate([r[0] for r in results])
        eta_arr = np.concatenate([r[1] for r in results])
        s_arr = np.concatenate([r[2] for r in results])
        counts = np.concatenate([r[3] for r in results])
        pts = np.concatenate([r[4] for r in results])
    else:
        t_arr = eta_arr = s_arr = np.empty(0)
        counts = np.empty(0, dtype=np.int64)
        pts = np.empty((0, 2))
    return FrameBatch(frame_ids=ids, counts=counts, points=pts,
                      t=t_arr, eta=eta_arr, s=s_arr)


# ----- Metropolis fallback ---------------------------------------------------

def mcmc_angles(dens: AngularDensity, n_samples: int, seed: int = 0,
                burn_in: int = 1000, thinning: int = 10, step: float = 0.5,
                walkers: int = 256):
    """Metropolis chain on [0, 2 pi)^N targeting the angular density.

    Runs `walkers` independent chains with Gaussian steps (sigma = `step`,
    radians) and keeps every `thinning`-th state after `burn_in` steps of
    each chain.  Returns (samples, info) with samples of shape (>= n_samples, N)
    trimmed to n_samples, and info holding the acceptance rate.
    """
    rng = np.random.default_rng(seed)
    n = dens.order
    per_walker = -(-n_samples // walkers)
    th = rng.uniform(0.0, 2.0 * math.pi, size=(walkers, n))
    dens_cur = theta_eval_sympoly(dens, th)
    kept = []
    accepted = 0
    proposed = 0
    total_steps = burn_in + per_walker * thinning
    for it in range(total_steps):
        prop = (th + rng.normal(0.0, step, size=th.shape)) % (2.0 * math.pi)
        dens_prop = theta_eval_sympoly(dens, prop)
        u = rng.uniform(size=walkers)
        acc = u * dens_cur < dens_prop
        th[acc] = prop[acc]
        dens_cur = np.where(acc, dens_prop, dens_cur)
        accepted += int(acc.sum())
        proposed += walkers
        if it >= burn_in and (it - burn_in) % thinning == thinning - 1:
            kept.append(th.copy())
    samples = np.concatenate(kept)[:n_samples]
    return samples, {"acceptance": accepted / proposed}


def mcmc_points(dens: SpatialDensity, n_samples: int, seed: int = 0,
                burn_in: int = 1000, thinning: int = 10, step: float = 0.5,
                walkers: int = 256):
    """Metropolis chain in the 2N-dimensional position space targeting the
    spatial N-body density (the fallback for fixed-number states outside
    vortex bases; N <= 4).  Same shape conventions as mcmc_angles, samples
    of shape (n_samples, N, 2)."""
    rng = np.random.default_rng(seed)
    n = dens.order
    pts = rng.normal(0.0, 1.0, size=(walkers, n, 2))
    dens_cur = rho_eval(dens, pts)
    # nodal surfaces have measure zero but a zero start would freeze a walker
    bad = dens_cur <= 0.0
    while np.any(bad):
        pts[bad] = rng.normal(0.0, 1.0, size=(int(bad.sum()), n, 2))
        dens_cur = rho_eval(dens, pts)
        bad = dens_cur <= 0.0
    per_walker = -(-n_samples // walkers)
    kept = []
    accepted = 0
    proposed = 0
    total_steps = burn_in + per_walker * thinning
    for it in range(total_steps):
        prop = pts + rng.normal(0.0, step, size=pts.shape)
        dens_prop = rho_eval(dens, prop)
        u = rng.uniform(size=walkers)
        acc = u * dens_cur < dens_prop
        pts[acc] = prop[acc]
        dens_cur = np.where(acc, dens_prop, dens_cur)
        accepted += int(acc.sum())
        proposed += walkers
        if it >= burn_in and (it - burn_in) % thinning == thinning - 1:
            kept.append(pts.copy())
    samples = np.concatenate(kept)[:n_samples]
    return samples, {"acceptance": accepted / proposed}


# ----- frame files -----------------------------------------------------------

def _fmt(x: Optional[float]) -> str:
    return "null" if x is None else format(float(x), ".17g")


def frame_to_json(frame: Frame) -> str:
    """One JSONL record; field order and float formatting are part of the
    file contract (17 significant digits)."""
    pts = ",".join(
        f"[{format(p[0], '.17g')},{format(p[1], '.17g')}]" for p in frame.points
    )
    return (f'{{"frame_id":{frame.frame_id},"t":{_fmt(frame.t)},'
            f'"eta":{_fmt(frame.eta)},"s":{_fmt(frame.s)},"points":[{pts}]}}')


def write_frames_jsonl(frames, path) -> int:
    """Write frames (iterable of Frame or a FrameBatch); returns the count."""
    if isinstance(frames, FrameBatch):
        frames = frames.frames()
    count = 0
    with open(path, "w") as fh:
        for frame in frames:
            fh.write(frame_to_json(frame))
            fh.write("\n")
            count += 1
    return count


def read_frames_jsonl(path) -> Iterator[Frame]:
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            yield Frame(
                frame_id=int(rec["frame_id"]),
                points=np.array(rec["points"], dtype=float).reshape(-1, 2),
                t=rec.get("t"),
                eta=rec.get("eta"),
                s=rec.get("s"),
            )
