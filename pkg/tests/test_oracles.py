"""Closed-form and quadrature distance laws, and their cross-agreements."""

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from bosonsim.bases import DipolePair, MixedLG, VortexPair
from bosonsim.errors import QuadratureNotConverged, ValidationError
from bosonsim.oracles import (FAMILIES, ClosedFormDistribution,
                              TabulatedDistribution, closed_form_for,
                              distance_dipole, distance_vortex1,
                              distance_vortex2, quadrature_distance)
from bosonsim.states import Coherent, Fock, RPCS, Thermal, curly_c

GRID = np.linspace(0.0, 8.0, 1601)


class TestClosedForms:
    @pytest.mark.parametrize("family", FAMILIES.values(),
                             ids=list(FAMILIES.keys()))
    @pytest.mark.parametrize("c", [0.0, 1.0 / 6.0, 0.25, 0.5])
    def test_exactly_normalized(self, family, c):
        dist = family(c)
        assert dist.integral() == 1.0
        # and the numeric integral agrees
        val, _ = quad(dist.pdf, 0.0, np.inf)
        assert val == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("family", FAMILIES.values(),
                             ids=list(FAMILIES.keys()))
    def test_c_range_enforced(self, family):
        with pytest.raises(ValidationError):
            family(-0.01)
        with pytest.raises(ValidationError):
            family(0.51)

    @pytest.mark.parametrize("c", [0.0, 0.2, 0.5])
    def test_vortex1_literal_polynomial(self, c):
        d = GRID
        expect = d / 16.0 * ((1 + 2 * c) * (8 + d**4) - 16 * c * d**2) \
            * np.exp(-0.5 * d * d)
        assert np.allclose(distance_vortex1(c).pdf(d), expect, atol=1e-14)

    @pytest.mark.parametrize("c", [0.0, 0.2, 0.5])
    def test_dipole_literal_polynomial(self, c):
        d = GRID
        expect = d / 32.0 * ((3 - 2 * c) * (8 + d**4) - 8 * (1 - 2 * c) * d**2) \
            * np.exp(-0.5 * d * d)
        assert np.allclose(distance_dipole(c).pdf(d), expect, atol=1e-14)

    @pytest.mark.parametrize("c", [0.0, 0.2, 0.5])
    def test_vortex2_literal_polynomial(self, c):
        d = GRID
        sym = d**8 + 32.0 * d**4 + 384.0
        anti = d**8 - 32.0 * d**6 + 288.0 * d**4 - 768.0 * d**2 + 384.0
        expect = d / 1024.0 * (sym + 2 * c * anti) * np.exp(-0.5 * d * d)
        assert np.allclose(distance_vortex2(c).pdf(d), expect, atol=1e-13)

    def test_quarter_contrast_vortex_equals_bare_dipole(self):
        # same polynomial on both routes: the c = 1/4 vortex law IS the
        # uncorrelated dipole law
        assert distance_vortex1(0.25).coefficients \
            == distance_dipole(0.0).coefficients
        d = np.linspace(0, 6, 200)
        assert np.allclose(distance_vortex1(0.25).pdf(d),
                           distance_dipole(0.0).pdf(d), atol=1e-16)

    @pytest.mark.parametrize("family", FAMILIES.values(),
                             ids=list(FAMILIES.keys()))
    @pytest.mark.parametrize("c", [0.0, 0.3, 0.5])
    def test_cdf_integrates_pdf(self, family, c):
        dist = family(c)
        for d in [0.3, 1.0, 2.2, 4.5]:
            val, _ = quad(dist.pdf, 0.0, d, epsabs=1e-13, epsrel=1e-13)
            assert dist.cdf(d) == pytest.approx(val, abs=1e-10)
        assert dist.cdf(0.0) == 0.0
        assert float(dist.cdf(50.0)) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("family", FAMILIES.values(),
                             ids=list(FAMILIES.keys()))
    @pytest.mark.parametrize("c", [0.0, 0.25, 0.5])
    def test_pdf_nonnegative(self, family, c):
        assert np.all(family(c).pdf(GRID) >= -1e-15)

    def test_small_distance_mass_monotone_in_c(self):
        # bunching: more interference contrast piles mass at small d for the
        # vortex families and removes it for the dipole family
        cs = [0.0, 0.1, 0.25, 0.4, 0.5]
        v1 = [float(distance_vortex1(c).cdf(0.5)) for c in cs]
        v2 = [float(distance_vortex2(c).cdf(0.5)) for c in cs]
        dp = [float(distance_dipole(c).cdf(0.5)) for c in cs]
        assert all(a < b for a, b in zip(v1, v1[1:]))
        assert all(a < b for a, b in zip(v2, v2[1:]))
        assert all(a > b for a, b in zip(dp, dp[1:]))

    def test_bad_coefficients_rejected(self):
        with pytest.raises(ValidationError):
            ClosedFormDistribution(kind="x", c=None,
                                   coefficients=(Fraction(1, 2),))


class TestClosedFormFor:
    def test_state_to_parameter_map(self):
        cases = [
            (Fock(1, 1), VortexPair(1), "vortex1", 0.5),
            (Thermal(2.0, 2.0), VortexPair(1), "vortex1", 1.0 / 6.0),
            (RPCS(1.0, 1.0), VortexPair(1), "vortex1", 0.25),
            (Coherent(1.0, 1.0j), DipolePair(), "dipole", 0.25),
            (Fock(1, 1), VortexPair(2), "vortex2", 0.5),
            (Thermal(3.5, 1.0), DipolePair(), "dipole",
             curly_c(Thermal(3.5, 1.0))),
        ]
        for state, basis, kind, c in cases:
            dist = closed_form_for(state, basis)
            assert dist.kind == kind
            assert dist.c == pytest.approx(c)

    def test_unsupported_bases(self):
        with pytest.raises(ValidationError):
            closed_form_for(Fock(1, 1), MixedLG())
        with pytest.raises(ValidationError):
            closed_form_for(Fock(1, 1), VortexPair(3))


class TestFrozenSeparations:
    def test_thermal_vs_fock_margin(self):
        """The balanced-thermal and two-particle-interference distance laws
        differ by a sup-CDF distance of (1/3)(sqrt(2)-1) e^(sqrt(2)-2), far
        above the 0.05 detection threshold used downstream."""
        d_th = distance_vortex1(1.0 / 6.0)
        d_11 = distance_vortex1(0.5)
        gap = np.max(np.abs(d_th.cdf(GRID) - d_11.cdf(GRID)))
        frozen = (math.sqrt(2.0) - 1.0) * math.exp(math.sqrt(2.0) - 2.0) / 3.0
        assert frozen == pytest.approx(0.0768598, abs=1e-6)
        assert gap == pytest.approx(frozen, abs=1e-5)
        assert gap > 0.05
        # maximizer sits at d* = sqrt(2 (2 - sqrt 2))
        d_star = math.sqrt(2.0 * (2.0 - math.sqrt(2.0)))
        at_star = abs(float(d_th.cdf(d_star) - d_11.cdf(d_star)))
        assert at_star == pytest.approx(frozen, abs=1e-12)
        assert at_star >= gap

    def test_uncorrelated_vs_fock_margin(self):
        gap = np.max(np.abs(distance_vortex1(0.0).cdf(GRID)
                            - distance_vortex1(0.5).cdf(GRID)))
        frozen = 0.5 * (math.sqrt(2.0) - 1.0) * math.exp(math.sqrt(2.0) - 2.0)
        assert gap == pytest.approx(frozen, abs=1e-5)
        assert frozen == pytest.approx(0.1152897, abs=1e-6)


class TestTabulated:
    def _rayleigh(self, n=400):
        d = np.linspace(0.0, 8.0, n)
        return TabulatedDistribution(d=d, density=d * np.exp(-0.5 * d * d))

    def test_cdf_matches_analytic(self):
        dist = self._rayleigh()
        x = np.linspace(0.1, 7.5, 40)
        assert np.allclose(dist.cdf(x), 1.0 - np.exp(-0.5 * x * x), atol=2e-4)

    def test_support_edges(self):
        dist = self._rayleigh()
        assert dist.pdf(9.0) == 0.0 and dist.pdf(-1.0) == 0.0
        assert dist.cdf(-1.0) == 0.0 and dist.cdf(9.0) == 1.0
        assert np.all(np.diff(dist.cdf(np.linspace(0, 8, 200))) >= 0.0)

    def test_integral(self):
        assert self._rayleigh().integral() == pytest.approx(1.0, abs=1e-4)

    def test_validation(self):
        with pytest.raises(ValidationError):
            TabulatedDistribution(d=np.linspace(0, 1, 4),
                                  density=np.ones(4))
        with pytest.raises(ValidationError):
            TabulatedDistribution(d=np.linspace(0, 1, 20),
                                  density=np.zeros(20))


class TestQuadratureDistance:
    def test_matches_vortex1_closed_form(self):
        dist = quadrature_distance(Fock(1, 1), VortexPair(1))
        ref = distance_vortex1(0.5)
        assert np.max(np.abs(dist.density - ref.pdf(dist.d))) < 1e-6
        # tabulated CDF accuracy is set by the trapezoid step, not the
        # quadrature: O(h^2) ~ 3e-6 on the 1024-point grid
        x = np.linspace(0.0, 6.0, 100)
        assert np.max(np.abs(dist.cdf(x) - ref.cdf(x))) < 1e-5

    def test_matches_vortex2_closed_form(self):
        dist = quadrature_distance(Fock(1, 1), VortexPair(2))
        ref = distance_vortex2(0.5)
        assert np.max(np.abs(dist.density - ref.pdf(dist.d))) < 1e-6

    def test_matches_dipole_closed_form(self):
        state = Thermal(3.5, 1.0)
        dist = quadrature_distance(state, DipolePair())
        ref = distance_dipole(curly_c(state))
        assert np.max(np.abs(dist.density - ref.pdf(dist.d))) < 1e-6

    def test_imbalanced_thermal_reduces_to_contrast_parameter(self):
        # all two-body angular structure flows through the single contrast
        # parameter: the imbalanced state with c = curly_c reproduces the
        # one-parameter vortex law exactly
        state = Thermal(3.5, 1.0)
        dist = quadrature_distance(state, VortexPair(1))
        ref = distance_vortex1(curly_c(state))
        assert np.max(np.abs(dist.density - ref.pdf(dist.d))) < 1e-6

    def test_mixedlg_normalized(self):
        dist = quadrature_distance(Thermal(1.0, 1.0), MixedLG())
        assert dist.integral() == pytest.approx(1.0, abs=1e-4)
        assert dist.pdf(0.0) == 0.0
        assert float(dist.cdf(8.0)) == 1.0

    def test_grid_contract(self):
        dist = quadrature_distance(Fock(1, 1), VortexPair(1))
        assert dist.d[0] == 0.0
        assert dist.d[1023] == pytest.approx(6.0, abs=1e-12)
        assert dist.d[-1] == pytest.approx(8.0, abs=1e-12)
        h = np.diff(dist.d)
        assert np.allclose(h, 6.0 / 1023)

    def test_unreachable_tolerance_raises(self):
        with pytest.raises(QuadratureNotConverged):
            quadrature_distance(Fock(1, 1), VortexPair(1), tol=0.0,
                                n_points=64, d_max=6.0)
