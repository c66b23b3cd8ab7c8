"""Frame observables and their aggregation.

Three estimator protocols turn per-frame observable values into one
expectation; all are consistent for the same q-body observable but weight
frames differently:

- ``reweight``:  frames carry their recorded intensity s; frame weight s**q.
  Correct when geometries were drawn from the bare classical law.
- ``tuples``:    frame weight binom(M_f, q), i.e. every unordered q-tuple of
  detected points counts once.  Correct for Poisson multiplicities.
- ``qmeasure``:  plain frame average.  Correct only when the geometries were
  drawn from the q-tilted law (SamplerConfig.q_order = q); the sampler has
  already absorbed the weight.

Goodness of fit is Kolmogorov-Smirnov on raw (optionally weighted) samples,
never on binned counts; histograms are presentation artifacts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from scipy.stats import ks_2samp

from .errors import (DegeneratePoint, InsufficientMultiplicity,
                     MissingIntensity, ValidationError)
from .sampler import Frame, FrameBatch

__all__ = [
    "pair_distance", "projected_perimeter", "distance_values",
    "perimeter_values", "Histogram", "EstimateResult", "estimate",
    "ks_statistic", "ks_two_sample",
]

ESTIMATOR_KINDS = ("reweight", "tuples", "qmeasure")


# ----- point observables -----------------------------------------------------

def pair_distance(p1, p2) -> float:
    """Euclidean distance between two detected positions."""
    return math.hypot(p1[0] - p2[0], p1[1] - p2[1])


def projected_perimeter(points, proj_radius: float = 1.0) -> float:
    """Perimeter of the polygon obtained by projecting every point to the
    circle of radius proj_radius at its own angle.

    Points are sorted by angle (they are in convex position on the circle, so
    this is the convex-hull perimeter); consecutive chords have length
    2 R sin(|dtheta| / 2) and the polygon is closed.  Invariant under global
    rotation and under permutation of the input.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValidationError("perimeter needs at least 3 points")
    if np.any((pts[:, 0] == 0.0) & (pts[:, 1] == 0.0)):
        raise DegeneratePoint("point at the origin has no angle")
    ang = np.sort(np.arctan2(pts[:, 1], pts[:, 0]))
    gaps = np.diff(ang, append=ang[0] + 2.0 * math.pi)
    return float(2.0 * proj_radius * np.sin(0.5 * gaps).sum())


def distance_values(points_matrix: np.ndarray) -> np.ndarray:
    """Pair distances for a stack of 2-point frames, shape (n, 2, 2) -> (n,)."""
    pm = np.asarray(points_matrix, dtype=float)
    if pm.ndim != 3 or pm.shape[1] != 2:
        raise ValidationError("expected (n_frames, 2, 2) point stacks")
    diff = pm[:, 0] - pm[:, 1]
    return np.hypot(diff[:, 0], diff[:, 1])


def perimeter_values(points_matrix: np.ndarray,
                     proj_radius: float = 1.0) -> np.ndarray:
    """Projected perimeters for a stack of N-point frames, (n, N, 2) -> (n,)."""
    pm = np.asarray(points_matrix, dtype=float)
    if pm.ndim != 3 or pm.shape[1] < 3:
        raise ValidationError("expected (n_frames, N >= 3, 2) point stacks")
    if np.any((pm[..., 0] == 0.0) & (pm[..., 1] == 0.0)):
        raise DegeneratePoint("point at the origin has no angle")
    ang = np.sort(np.arctan2(pm[..., 1], pm[..., 0]), axis=1)
    gaps = np.diff(ang, axis=1)
    wrap = ang[:, 0] + 2.0 * math.pi - ang[:, -1]
    total = np.sin(0.5 * gaps).sum(axis=1) + np.sin(0.5 * wrap)
    return 2.0 * proj_radius * total


# ----- histograms ------------------------------------------------------------

@dataclass
class Histogram:
    """Weighted histogram; the density view integrates to 1."""

    edges: np.ndarray
    counts: np.ndarray
    total_weight: float

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if len(self.counts) != len(self.edges) - 1:
            raise ValidationError("need len(counts) == len(edges) - 1")
        if np.any(np.diff(self.edges) <= 0.0):
            raise ValidationError("edges must be strictly increasing")
        if np.any(self.counts < 0.0):
            raise ValidationError("histogram counts must be non-negative")

    @classmethod
    def from_samples(cls, samples, weights=None, bins: int = 200,
                     lo: float = 0.0, hi: float = 6.0) -> "Histogram":
        samples = np.asarray(samples, dtype=float)
        edges = np.linspace(lo, hi, bins + 1)
        counts, _ = np.histogram(samples, bins=edges, weights=weights)
        if weights is None:
            total = float(samples.size)
        else:
            total = float(np.sum(weights))
        return cls(edges=edges, counts=counts.astype(float), total_weight=total)

    def density(self) -> np.ndarray:
        """Per-bin density normalized so sum(density * width) = 1."""
        widths = np.diff(self.edges)
        inside = float(self.counts.sum())
        if inside <= 0.0:
            return np.zeros_like(self.counts)
        return self.counts / (inside * widths)

    def merge(self, other: "Histogram") -> "Histogram":
        if not np.array_equal(self.edges, other.edges):
            raise ValidationError("cannot merge histograms with different edges")
        return Histogram(edges=self.edges, counts=self.counts + other.counts,
                         total_weight=self.total_weight + other.total_weight)

    def csv_rows(self):
        """Rows (bin_lo, bin_hi, density) per the histogram CSV contract."""
        dens = self.density()
        for lo, hi, d in zip(self.edges[:-1], self.edges[1:], dens):
            yield float(lo), float(hi), float(d)


# ----- estimation ------------------------------------------------------------

@dataclass(frozen=True)
class EstimateResult:
    histogram: Histogram
    mean: float
    stderr: float
    total_weight: float
    n_frames_used: int
    values: Optional[np.ndarray] = None    # raw per-tuple samples
    weights: Optional[np.ndarray] = None   # per-tuple histogram weights


def _named_kernel(observable, proj_radius: float):
    if callable(observable):
        return observable
    if observable == "distance":
        return lambda pts: pair_distance(pts[0], pts[1])
    if observable == "perimeter":
        return lambda pts: projected_perimeter(pts, proj_radius)
    raise ValidationError(f"unknown observable {observable!r}")


def _fast_frame_values(frames: FrameBatch, observable, q: int,
                       proj_radius: float) -> Optional[np.ndarray]:
    """One value per frame when every frame holds exactly one q-tuple."""
    counts = frames.counts
    if len(counts) == 0 or np.any(counts != q):
        return None
    pm = frames.points.reshape(len(counts), q, 2)
    if observable == "distance" and q == 2:
        return distance_values(pm)
    if observable == "perimeter":
        return perimeter_values(pm, proj_radius)
    return None


def estimate(frames: Union[FrameBatch, Iterable[Frame]], observable, q: int,
             kind: str = "tuples", bins: int = 200, lo: float = 0.0,
             hi: float = 6.0, proj_radius: float = 1.0,
             keep_samples: bool = True) -> EstimateResult:
    """Aggregate a symmetric q-body observable over frames.

    observable: "distance" (q = 2), "perimeter" (q-point polygons), or a
    callable taking a (q, 2) array.  Frames with fewer than q points carry
    zero weight; if no frame supports q the estimate is undefined and raises
    InsufficientMultiplicity.  kind "reweight" needs recorded intensities
    (raises MissingIntensity otherwise); see the module docstring for when
    each kind is consistent.
    """
    if kind not in ESTIMATOR_KINDS:
        raise ValidationError(f"estimator kind must be one of {ESTIMATOR_KINDS}")
    if q < 1:
        raise ValidationError("observable order q must be >= 1")
    if not isinstance(frames, FrameBatch):
        frames = _batch_from_frames(frames)
    if kind == "reweight" and frames.s is None:
        raise MissingIntensity(
            "reweight estimator needs frames with recorded intensity s "
            "(classical geometry-first frames)"
        )

    fast = _fast_frame_values(frames, observable, q, proj_radius)
    if fast is not None:
        frame_vals = fast
        frame_tuples = np.ones(len(fast))
        values = fast
        value_frame = np.arange(len(fast))
    else:
        kernel = _named_kernel(observable, proj_radius)
        frame_vals_l, frame_tuples_l, values_l, value_frame_l = [], [], [], []
        offsets = np.concatenate([[0], np.cumsum(frames.counts)])
        for i, m in enumerate(frames.counts):
            if m < q:
                frame_vals_l.append(0.0)
                frame_tuples_l.append(0.0)
                continue
            pts = frames.points[offsets[i] : offsets[i + 1]]
            vals = [float(kernel(pts[list(idx)]))
                    for idx in combinations(range(int(m)), q)]
            frame_vals_l.append(float(np.mean(vals)))
            frame_tuples_l.append(float(len(vals)))
            values_l.extend(vals)
            value_frame_l.extend([i] * len(vals))
        frame_vals = np.asarray(frame_vals_l)
        frame_tuples = np.asarray(frame_tuples_l)
        values = np.asarray(values_l)
        value_frame = np.asarray(value_frame_l, dtype=int)

    usable = frame_tuples > 0.0
    if not np.any(usable):
        raise InsufficientMultiplicity(f"no frame holds {q} points")

    if kind == "reweight":
        frame_w = np.where(usable, np.asarray(frames.s, dtype=float) ** q, 0.0)
    elif kind == "tuples":
        frame_w = frame_tuples
    else:
        frame_w = usable.astype(float)

    total_w = float(frame_w.sum())
    if total_w <= 0.0:
        raise InsufficientMultiplicity("all usable frames carry zero weight")
    mean = float(np.sum(frame_w * frame_vals) / total_w)
    # ratio-estimator variance of a weighted mean over independent frames
    stderr = float(
        math.sqrt(np.sum((frame_w * (frame_vals - mean)) ** 2)) / total_w
    )

    # per-tuple weights: each frame spreads its weight evenly over its tuples
    per_tuple = np.zeros_like(frame_w)
    np.divide(frame_w, frame_tuples, out=per_tuple, where=frame_tuples > 0.0)
    value_w = per_tuple[value_frame]
    hist = Histogram.from_samples(values, weights=value_w, bins=bins, lo=lo, hi=hi)
    return EstimateResult(
        histogram=hist, mean=mean, stderr=stderr, total_weight=total_w,
        n_frames_used=int(usable.sum()),
        values=values if keep_samples else None,
        weights=value_w if keep_samples else None,
    )


def _batch_from_frames(frames: Iterable[Frame]) -> FrameBatch:
    frames = list(frames)
    ids = np.array([f.frame_id for f in frames], dtype=np.int64)
    counts = np.array([len(f.points) for f in frames], dtype=np.int64)
    pts = (np.concatenate([np.asarray(f.points, dtype=float).reshape(-1, 2)
                           for f in frames])
           if frames else np.empty((0, 2)))
    have_geom = bool(frames) and frames[0].t is not None
    t = np.array([f.t for f in frames]) if have_geom else None
    eta = np.array([f.eta for f in frames]) if have_geom else None
    s = np.array([f.s for f in frames]) if have_geom else None
    return FrameBatch(frame_ids=ids, counts=counts, points=pts, t=t, eta=eta, s=s)


# ----- goodness of fit -------------------------------------------------------

def ks_statistic(samples, cdf: Callable[[np.ndarray], np.ndarray],
                 weights=None) -> float:
    """Sup-distance between the (weighted) empirical CDF of raw samples and a
    reference CDF callable.  Weights need not be normalized."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValidationError("KS statistic needs at least one sample")
    order = np.argsort(samples, kind="stable")
    xs = samples[order]
    if weights is None:
        cum = np.arange(1, xs.size + 1) / xs.size
    else:
        w = np.asarray(weights, dtype=float)[order]
        cum = np.cumsum(w)
        cum /= cum[-1]
    ref = np.asarray(cdf(xs), dtype=float)
    upper = np.max(np.abs(cum - ref))
    lower = np.max(np.abs(np.concatenate([[0.0], cum[:-1]]) - ref))
    return float(max(upper, lower))


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic (unweighted)."""
    return float(ks_2samp(np.asarray(a, float), np.asarray(b, float),
                          method="asymp").statistic)
