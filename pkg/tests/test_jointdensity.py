"""Exact N-body densities: two evaluation routes, marginals, quadrature."""

import math

import numpy as np
import pytest

from bosonsim.errors import OrderTooLarge, ValidationError
from bosonsim.jointdensity import (AngularDensity, SpatialDensity,
                                   marginal_density, numeric_angular_marginal,
                                   pair_radial_angle_density,
                                   quadrature_oracle, rho_eval,
                                   rho_eval_permsum, theta_eval_permsum,
                                   theta_eval_sympoly)
from bosonsim.bases import DipolePair, MixedLG, VortexPair
from bosonsim.states import Coherent, Fock, Mixture, RPCS, Thermal, curly_c

TWO_PI = 2.0 * math.pi

STATE_FAMILIES = [
    Fock(3, 2),
    Thermal(3.5, 1.0),
    RPCS(1.2, 0.7),
    Mixture(((0.4, Fock(2, 2)), (0.6, Fock(3, 1)))),
]


def _max_order(state, cap):
    """Largest supported density order: fixed-number states run out."""
    if isinstance(state, Fock):
        return min(cap, state.n1 + state.n2)
    if isinstance(state, Mixture):
        return min(cap, max(c.n1 + c.n2 for _, c in state.components))
    return cap


class TestTwoRoutesAgree:
    @pytest.mark.parametrize("state", STATE_FAMILIES,
                             ids=lambda s: type(s).__name__)
    @pytest.mark.parametrize("ell", [1, 2])
    def test_angular_sympoly_vs_permsum(self, state, ell):
        rng = np.random.default_rng(5)
        for order in range(1, _max_order(state, 6) + 1):
            dens = AngularDensity(state, ell, order)
            for _ in range(15):
                th = rng.uniform(0.0, TWO_PI, size=order)
                a = theta_eval_sympoly(dens, th)
                b = theta_eval_permsum(dens, th)
                assert a == pytest.approx(b, rel=5e-10, abs=1e-18)

    @pytest.mark.parametrize("state", STATE_FAMILIES,
                             ids=lambda s: type(s).__name__)
    @pytest.mark.parametrize("basis", [VortexPair(1), DipolePair(), MixedLG()],
                             ids=lambda b: type(b).__name__)
    def test_spatial_vs_permsum(self, state, basis):
        rng = np.random.default_rng(9)
        for order in range(1, 5):
            dens = SpatialDensity(state, basis, order)
            for _ in range(10):
                pts = rng.normal(scale=1.2, size=(order, 2))
                a = rho_eval(dens, pts)
                b = rho_eval_permsum(dens, pts)
                assert a == pytest.approx(b, rel=5e-10, abs=1e-18)

    def test_vortex_factorization_at_high_order(self):
        # vortex rho_eval runs radial x angular; permsum is the flat sum
        dens = SpatialDensity(Fock(5, 3), VortexPair(1), 8)
        rng = np.random.default_rng(3)
        for _ in range(3):
            pts = rng.normal(size=(8, 2))
            assert rho_eval(dens, pts) == pytest.approx(
                rho_eval_permsum(dens, pts), rel=1e-9
            )

    def test_batched_evaluation_matches_scalar(self):
        dens = AngularDensity(Thermal(1.0, 1.0), 1, 3)
        rng = np.random.default_rng(2)
        batch = rng.uniform(0, TWO_PI, size=(4, 5, 3))
        vals = theta_eval_sympoly(dens, batch)
        assert vals.shape == (4, 5)
        assert vals[2, 3] == pytest.approx(
            theta_eval_sympoly(dens, batch[2, 3]), rel=1e-12
        )


class TestNormalization:
    @pytest.mark.parametrize("state", STATE_FAMILIES,
                             ids=lambda s: type(s).__name__)
    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_angular_joint_integral(self, state, order):
        # trig polynomial of degree 2 ell per angle: uniform grids are exact
        ell = 1
        dens = AngularDensity(state, ell, order)
        m = 4 * ell + 2
        grid = np.arange(m) * (TWO_PI / m)
        mesh = np.stack(np.meshgrid(*([grid] * order), indexing="ij"),
                        axis=-1).reshape(-1, order)
        total = theta_eval_sympoly(dens, mesh).sum() * (TWO_PI / m) ** order
        assert total == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("state", [Fock(1, 1), Thermal(3.5, 1.0),
                                       RPCS(1.0, 1.0)],
                             ids=lambda s: type(s).__name__)
    @pytest.mark.parametrize("basis", [VortexPair(1), VortexPair(2),
                                       DipolePair(), MixedLG()],
                             ids=lambda b: type(b).__name__)
    def test_pair_reduced_density_integral(self, state, basis):
        w = pair_radial_angle_density(state, basis)
        x, wx = np.polynomial.legendre.leggauss(96)
        r = 0.5 * 8.0 * (x + 1.0)
        wr = 0.5 * 8.0 * wx
        dth = np.arange(128) * (TWO_PI / 128)
        vals = w(r[:, None, None], r[None, :, None], dth[None, None, :])
        total = np.einsum("ijk,i,j->", vals, wr, wr) * (TWO_PI / 128)
        assert total == pytest.approx(1.0, abs=1e-8)


class TestPairReduction:
    @pytest.mark.parametrize("state", [Fock(1, 1), Thermal(3.5, 1.0)],
                             ids=lambda s: type(s).__name__)
    def test_vortex_pair_density_matches_rho(self, state):
        # rotation-invariant: W(r1, r2, dth) = 2 pi r1 r2 rho_2
        w = pair_radial_angle_density(state, VortexPair(1))
        dens = SpatialDensity(state, VortexPair(1), 2)
        for r1, r2, dth in [(0.8, 1.3, 0.4), (1.7, 0.5, 2.9), (1.0, 1.0, 0.0)]:
            pts = np.array([[r1, 0.0],
                            [r2 * math.cos(dth), r2 * math.sin(dth)]])
            assert w(r1, r2, dth) == pytest.approx(
                TWO_PI * r1 * r2 * rho_eval(dens, pts), rel=1e-10
            )

    def test_mixedlg_pair_density_matches_rho(self):
        state = Thermal(1.0, 1.0)
        w = pair_radial_angle_density(state, MixedLG())
        dens = SpatialDensity(state, MixedLG(), 2)
        for r1, r2, dth in [(0.5, 1.1, 1.2), (1.4, 0.9, 4.0)]:
            pts = np.array([[r1, 0.0],
                            [r2 * math.cos(dth), r2 * math.sin(dth)]])
            assert w(r1, r2, dth) == pytest.approx(
                TWO_PI * r1 * r2 * rho_eval(dens, pts), rel=1e-10
            )

    def test_dipole_pair_density_is_rotation_average(self):
        state = Fock(1, 1)
        w = pair_radial_angle_density(state, DipolePair())
        dens = SpatialDensity(state, DipolePair(), 2)
        r1, r2, dth = 1.2, 0.7, 0.9
        m = 64
        th1 = np.arange(m) * (TWO_PI / m)
        acc = 0.0
        for a in th1:
            pts = np.array([[r1 * math.cos(a), r1 * math.sin(a)],
                            [r2 * math.cos(a + dth), r2 * math.sin(a + dth)]])
            acc += rho_eval(dens, pts)
        avg = acc / m
        assert w(r1, r2, dth) == pytest.approx(TWO_PI * r1 * r2 * avg, rel=1e-8)


class TestMarginals:
    @pytest.mark.parametrize("n1,n2", [(2, 2), (3, 1), (2, 1), (4, 0)])
    def test_fock_marginal_identity(self, n1, n2):
        n = n1 + n2
        if n > 4:
            pytest.skip("kept to N <= 4")
        rng = np.random.default_rng(7)
        full = AngularDensity(Fock(n1, n2), 1, n)
        for q in range(1, n):
            reduced = marginal_density(full, q)
            th_q = rng.uniform(0, TWO_PI, size=(6, q))
            numeric = numeric_angular_marginal(full, th_q)
            claimed = theta_eval_sympoly(reduced, th_q)
            assert np.allclose(numeric, claimed, rtol=1e-8)

    def test_marginal_rejected_for_indefinite_number(self):
        dens = AngularDensity(Thermal(1.0, 1.0), 1, 3)
        with pytest.raises(ValidationError):
            marginal_density(dens, 2)

    def test_numeric_marginal_full_order_is_identity(self):
        dens = AngularDensity(Fock(2, 1), 1, 3)
        th = np.array([0.3, 1.1, 4.0])
        assert numeric_angular_marginal(dens, th) == pytest.approx(
            theta_eval_sympoly(dens, th), rel=1e-12
        )


class TestQuadratureOracle:
    def test_pair_constant_is_one(self):
        dens = SpatialDensity(Fock(1, 1), VortexPair(1), 2)
        val = quadrature_oracle(dens, lambda r1, r2, dth: np.ones_like(r1 * r2 * dth))
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_pair_radial_moment(self):
        # per-particle radial law r^3 e^{-r^2}: E[r^2] = 2
        dens = SpatialDensity(Thermal(1.0, 1.0), VortexPair(1), 2)
        val = quadrature_oracle(dens, lambda r1, r2, dth: r1 * r1 + 0.0 * (r2 + dth))
        assert val == pytest.approx(2.0, abs=1e-6)

    @pytest.mark.parametrize("state,expect", [
        (Fock(1, 1), 0.5), (Thermal(2.0, 2.0), 1.0 / 6.0), (RPCS(1.0, 1.0), 0.25),
        (Coherent(1.0, 1.0j), 0.25), (Thermal(3.5, 1.0), curly_c(Thermal(3.5, 1.0))),
    ])
    def test_angular_interference_contrast(self, state, expect):
        dens = AngularDensity(state, 1, 2)
        val = quadrature_oracle(
            dens, lambda th: np.cos(2.0 * (th[..., 0] - th[..., 1])),
            kind="angular",
        )
        assert val == pytest.approx(expect, abs=1e-9)


class TestGuards:
    def test_permsum_order_cap(self):
        dens = AngularDensity(Thermal(1.0, 1.0), 1, 13)
        with pytest.raises(OrderTooLarge):
            theta_eval_permsum(dens, np.zeros(13))

    def test_nonvortex_spatial_order_cap(self):
        with pytest.raises(OrderTooLarge):
            SpatialDensity(Fock(3, 2), DipolePair(), 5)
        SpatialDensity(Fock(3, 2), VortexPair(1), 5)  # vortex scales further

    def test_shape_validation(self):
        dens = AngularDensity(Fock(1, 1), 1, 2)
        with pytest.raises(ValidationError):
            theta_eval_sympoly(dens, np.zeros(3))
        with pytest.raises(ValidationError):
            rho_eval(SpatialDensity(Fock(1, 1), DipolePair(), 2), np.zeros((3, 2)))

    def test_empty_sector_rejected(self):
        with pytest.raises(ValidationError):
            theta_eval_sympoly(AngularDensity(Fock(1, 0), 1, 2), np.zeros(2))
