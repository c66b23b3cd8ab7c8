"""Observables, histograms, frame-weighted estimators, KS distances."""

import math

import numpy as np
import pytest
from scipy import stats

from bosonsim.bases import VortexPair
from bosonsim.errors import (DegeneratePoint, InsufficientMultiplicity,
                             MissingIntensity, ValidationError)
from bosonsim.observables import (ESTIMATOR_KINDS, Histogram, distance_values,
                                  estimate, ks_statistic, ks_two_sample,
                                  pair_distance, perimeter_values,
                                  projected_perimeter)
from bosonsim.sampler import Frame, SamplerConfig, sample_frames
from bosonsim.states import Coherent, Fock, Thermal

TWO_PI = 2.0 * math.pi


def _on_circle(angles, radii=None):
    angles = np.asarray(angles, dtype=float)
    r = np.ones_like(angles) if radii is None else np.asarray(radii, float)
    return np.stack([r * np.cos(angles), r * np.sin(angles)], axis=-1)


class TestProjectedPerimeter:
    def test_equilateral(self):
        pts = _on_circle([0.0, TWO_PI / 3, 2 * TWO_PI / 3])
        assert projected_perimeter(pts) == pytest.approx(3.0 * math.sqrt(3.0))

    def test_square(self):
        pts = _on_circle([0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi])
        assert projected_perimeter(pts) == pytest.approx(4.0 * math.sqrt(2.0))

    def test_collinear_angles_collapse(self):
        pts = _on_circle([0.4, 0.4, 0.4], radii=[0.2, 1.0, 3.0])
        assert projected_perimeter(pts) == pytest.approx(0.0, abs=1e-12)

    def test_radius_only_scales(self):
        pts = _on_circle([0.1, 2.0, 4.4], radii=[0.5, 2.0, 1.3])
        base = projected_perimeter(pts)
        assert projected_perimeter(pts, proj_radius=2.5) == pytest.approx(2.5 * base)
        # radial coordinates of the inputs are irrelevant
        assert projected_perimeter(_on_circle([0.1, 2.0, 4.4])) == pytest.approx(base)

    def test_rotation_and_permutation_invariant(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(6, 2))
        base = projected_perimeter(pts)
        c, s = math.cos(1.234), math.sin(1.234)
        rot = np.array([[c, -s], [s, c]])
        assert projected_perimeter(pts @ rot.T) == pytest.approx(base, rel=1e-12)
        assert projected_perimeter(pts[::-1]) == pytest.approx(base, rel=1e-12)

    def test_guards(self):
        with pytest.raises(ValidationError):
            projected_perimeter(np.zeros((2, 2)) + 1.0)
        with pytest.raises(DegeneratePoint):
            projected_perimeter(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(1)
        pm = rng.normal(size=(50, 4, 2))
        vals = perimeter_values(pm, proj_radius=1.7)
        for i in range(50):
            assert vals[i] == pytest.approx(
                projected_perimeter(pm[i], proj_radius=1.7), rel=1e-12
            )

    def test_uniform_triangle_mean(self):
        # E[perimeter] for three uniform angles on the unit circle is 12/pi,
        # confirmed by brute force at 10^7 draws
        rng = np.random.default_rng(2026)
        total, n_total = 0.0, 0
        for _ in range(10):
            ang = rng.uniform(0.0, TWO_PI, size=(1_000_000, 3))
            ang.sort(axis=1)
            gaps = np.diff(ang, axis=1)
            wrap = ang[:, 0] + TWO_PI - ang[:, -1]
            per = 2.0 * (np.sin(0.5 * gaps).sum(axis=1) + np.sin(0.5 * wrap))
            total += per.sum()
            n_total += per.size
        assert total / n_total == pytest.approx(12.0 / math.pi, abs=2e-3)
        # and the production routine agrees on a smaller stack
        ang = rng.uniform(0.0, TWO_PI, size=(200_000, 3))
        vals = perimeter_values(_on_circle(ang))
        assert vals.mean() == pytest.approx(12.0 / math.pi, abs=6e-3)


class TestDistances:
    def test_pair_distance(self):
        assert pair_distance((0.0, 0.0), (3.0, 4.0)) == 5.0

    def test_batch_and_rotation_invariance(self):
        rng = np.random.default_rng(3)
        pm = rng.normal(size=(40, 2, 2))
        vals = distance_values(pm)
        for i in range(40):
            assert vals[i] == pytest.approx(pair_distance(pm[i, 0], pm[i, 1]))
        c, s = math.cos(0.77), math.sin(0.77)
        rot = np.array([[c, -s], [s, c]])
        assert np.allclose(distance_values(pm @ rot.T), vals)

    def test_shape_guard(self):
        with pytest.raises(ValidationError):
            distance_values(np.zeros((5, 3, 2)))


class TestHistogram:
    def test_density_integrates_to_one(self):
        h = Histogram.from_samples(np.array([0.5, 1.5, 1.6, 5.9]), bins=12,
                                   lo=0.0, hi=6.0)
        widths = np.diff(h.edges)
        assert np.sum(h.density() * widths) == pytest.approx(1.0)

    def test_out_of_range_kept_in_total_weight(self):
        h = Histogram.from_samples(np.array([1.0, 100.0]), bins=6, lo=0.0, hi=6.0)
        assert h.total_weight == 2.0
        assert h.counts.sum() == 1.0

    def test_weighted_counts(self):
        h = Histogram.from_samples(np.array([1.0, 1.0, 3.0]),
                                   weights=np.array([0.5, 0.25, 2.0]),
                                   bins=6, lo=0.0, hi=6.0)
        assert h.counts[1] == pytest.approx(0.75)
        assert h.counts[3] == pytest.approx(2.0)
        assert h.total_weight == pytest.approx(2.75)

    def test_merge(self):
        a = Histogram.from_samples(np.array([1.0]), bins=6, lo=0.0, hi=6.0)
        b = Histogram.from_samples(np.array([2.0, 3.0]), bins=6, lo=0.0, hi=6.0)
        m = a.merge(b)
        assert m.counts.sum() == 3.0 and m.total_weight == 3.0
        with pytest.raises(ValidationError):
            a.merge(Histogram.from_samples(np.array([1.0]), bins=5, lo=0, hi=6))

    def test_invalid_construction(self):
        with pytest.raises(ValidationError):
            Histogram(edges=np.array([0.0, 1.0, 1.0]),
                      counts=np.array([1.0, 1.0]), total_weight=2.0)
        with pytest.raises(ValidationError):
            Histogram(edges=np.array([0.0, 1.0]), counts=np.array([-1.0]),
                      total_weight=1.0)

    def test_csv_rows(self):
        h = Histogram.from_samples(np.array([0.5]), bins=3, lo=0.0, hi=3.0)
        rows = list(h.csv_rows())
        assert len(rows) == 3
        assert rows[0] == (0.0, 1.0, 1.0)


class TestEstimators:
    def _coherent_batch(self, n_frames=400, n_points=2, seed=5):
        cfg = SamplerConfig(Coherent(1.0, 1.0), VortexPair(1), n_points,
                            n_frames, seed=seed)
        return sample_frames(cfg)

    def test_kinds_coincide_for_constant_intensity(self):
        batch = self._coherent_batch()
        results = {k: estimate(batch, "distance", 2, kind=k)
                   for k in ESTIMATOR_KINDS}
        means = [r.mean for r in results.values()]
        errs = [r.stderr for r in results.values()]
        assert means[0] == pytest.approx(means[1], rel=1e-12)
        assert means[1] == pytest.approx(means[2], rel=1e-12)
        assert errs[0] == pytest.approx(errs[1], rel=1e-12)
        assert np.allclose(results["tuples"].histogram.counts /
                           results["tuples"].histogram.counts.sum(),
                           results["qmeasure"].histogram.counts /
                           results["qmeasure"].histogram.counts.sum())

    def test_reweight_needs_intensity(self):
        cfg = SamplerConfig(Fock(1, 1), VortexPair(1), 2, 50, seed=1)
        batch = sample_frames(cfg)
        with pytest.raises(MissingIntensity):
            estimate(batch, "distance", 2, kind="reweight")
        # the other kinds work on correlated frames
        estimate(batch, "distance", 2, kind="tuples")

    def test_insufficient_multiplicity(self):
        frames = [Frame(frame_id=i, points=np.zeros((1, 2)) + i + 1.0)
                  for i in range(5)]
        with pytest.raises(InsufficientMultiplicity):
            estimate(frames, "distance", 2, kind="tuples")

    def test_combination_enumeration(self):
        pts = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
        frames = [Frame(frame_id=0, points=pts)]
        res = estimate(frames, "distance", 2, kind="tuples")
        assert res.values.shape == (3,)
        expected = np.sort([math.sqrt(2.0), math.sqrt(2.0), 2.0])
        assert np.allclose(np.sort(res.values), expected)
        assert res.mean == pytest.approx(np.mean(expected))

    def test_variable_counts_weighting(self):
        # two frames: 2 points (1 tuple) and 3 points (3 tuples); the tuple
        # estimator weights the second frame three times as strongly
        f1 = Frame(frame_id=0, points=np.array([[0.0, 1.0], [0.0, -1.0]]))
        f2 = Frame(frame_id=1,
                   points=np.array([[1.0, 0.0], [3.0, 0.0], [6.0, 0.0]]))
        per_frame_means = np.array([2.0, (2.0 + 5.0 + 3.0) / 3.0])
        res_t = estimate([f1, f2], "distance", 2, kind="tuples")
        assert res_t.mean == pytest.approx(
            (1 * per_frame_means[0] + 3 * per_frame_means[1]) / 4.0
        )
        res_q = estimate([f1, f2], "distance", 2, kind="qmeasure")
        assert res_q.mean == pytest.approx(per_frame_means.mean())

    def test_poisson_tuple_weight_tracks_intensity_moment(self):
        # over Poisson frames, E[#pairs] = E[s^2]/2: total tuple weight must
        # approach the reweight total divided by 2!
        cfg = SamplerConfig(Thermal(1.0, 1.0), VortexPair(1), 0, 40_000,
                            seed=9, multiplicity="poisson")
        batch = sample_frames(cfg)
        res_t = estimate(batch, "distance", 2, kind="tuples")
        res_r = estimate(batch, "distance", 2, kind="reweight")
        assert res_t.total_weight * 2.0 == pytest.approx(
            np.sum(batch.s**2), rel=0.03
        )
        assert res_t.mean == pytest.approx(
            res_r.mean, abs=3.0 * (res_t.stderr + res_r.stderr)
        )

    def test_frame_list_equals_batch(self):
        batch = self._coherent_batch(n_frames=100)
        res_a = estimate(batch, "distance", 2, kind="tuples")
        res_b = estimate(list(batch.frames()), "distance", 2, kind="tuples")
        assert res_a.mean == res_b.mean
        assert np.array_equal(res_a.histogram.counts, res_b.histogram.counts)

    def test_callable_observable(self):
        batch = self._coherent_batch(n_frames=60)
        named = estimate(batch, "distance", 2, kind="tuples")
        custom = estimate(batch, lambda p: pair_distance(p[0], p[1]), 2,
                          kind="tuples")
        assert custom.mean == pytest.approx(named.mean, rel=1e-12)

    def test_split_merge_consistency(self):
        batch = self._coherent_batch(n_frames=300)
        frames = list(batch.frames())
        whole = estimate(frames, "distance", 2, kind="tuples")
        first = estimate(frames[:120], "distance", 2, kind="tuples")
        second = estimate(frames[120:], "distance", 2, kind="tuples")
        merged = first.histogram.merge(second.histogram)
        assert np.allclose(merged.counts, whole.histogram.counts, atol=1e-9)
        w = first.total_weight + second.total_weight
        recombined = (first.mean * first.total_weight
                      + second.mean * second.total_weight) / w
        assert recombined == pytest.approx(whole.mean, rel=1e-12)

    def test_keep_samples_flag(self):
        batch = self._coherent_batch(n_frames=30)
        res = estimate(batch, "distance", 2, kind="tuples", keep_samples=False)
        assert res.values is None and res.weights is None

    def test_bad_kind_and_order(self):
        batch = self._coherent_batch(n_frames=10)
        with pytest.raises(ValidationError):
            estimate(batch, "distance", 2, kind="bootstrap")
        with pytest.raises(ValidationError):
            estimate(batch, "distance", 0)


class TestKs:
    def test_exact_small_case(self):
        xs = np.array([0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95])
        assert ks_statistic(xs, lambda x: x) == pytest.approx(0.05)

    def test_matches_scipy(self):
        rng = np.random.default_rng(4)
        xs = rng.uniform(size=500)
        ours = ks_statistic(xs, lambda x: x)
        ref = stats.kstest(xs, "uniform").statistic
        assert ours == pytest.approx(ref, rel=1e-12)

    def test_uniform_weights_match_unweighted(self):
        rng = np.random.default_rng(5)
        xs = rng.normal(size=300)
        cdf = stats.norm.cdf
        a = ks_statistic(xs, cdf)
        b = ks_statistic(xs, cdf, weights=np.full(300, 0.37))
        assert a == pytest.approx(b, rel=1e-12)

    def test_weight_splitting_invariance(self):
        xs = np.array([0.2, 0.4, 0.9])
        w = np.array([1.0, 2.0, 1.0])
        split_xs = np.array([0.2, 0.4, 0.4, 0.9])
        split_w = np.array([1.0, 1.0, 1.0, 1.0])
        a = ks_statistic(xs, lambda x: x, weights=w)
        b = ks_statistic(split_xs, lambda x: x, weights=split_w)
        assert a == pytest.approx(b, rel=1e-12)

    def test_detects_wrong_model(self):
        rng = np.random.default_rng(6)
        xs = rng.uniform(size=2000) ** 2
        assert ks_statistic(xs, lambda x: np.clip(x, 0, 1)) > 0.2

    def test_two_sample(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=800)
        b = rng.normal(size=900)
        ref = stats.ks_2samp(a, b, method="asymp").statistic
        assert ks_two_sample(a, b) == pytest.approx(ref, rel=1e-12)
        shifted = rng.normal(loc=1.0, size=800)
        assert ks_two_sample(a, shifted) > 0.3

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            ks_statistic(np.array([]), lambda x: x)
