"""Exact N-body densities for two-mode states.

The angular N-body density in a counter-rotating vortex pair is

    Theta(theta_1..theta_N) =
        sum_k C[k, N-k] |e_k(z)|^2 / ((2 pi)^N sum_k binom(N,k) C[k, N-k])

with z_j = exp(2 i ell theta_j) and e_k the elementary symmetric polynomials.
Two independent evaluation routes are kept deliberately:

- theta_eval_permsum enumerates the sign assignments explicitly (all ways of
  giving each particle a +ell or -ell phase winding) and accumulates the
  cosine double sum term by term.  Exponential cost, capped at N = 12; this
  is the oracle.
- theta_eval_sympoly builds e_k by the O(N^2) product recursion; it is the
  production path and scales to N in the hundreds (correlator rows are
  max-scaled, so huge occupations stay in float range).

Spatial densities follow the same structure with mode amplitudes in place of
unit phases: rho = sum_k C[k, N-k] |B_k|^2 / Z_N, where B_k is the coefficient
of x^k in prod_j (phi_b(r_j) + x phi_a(r_j)).  For the vortex basis this
factorizes into (radial product) x Theta and is evaluated that way at any N;
the other bases are capped at N = 4 (their oracle is the explicit sum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .bases import DipolePair, MixedLG, ModeBasis, VortexPair, mode_a, mode_b
from .errors import OrderTooLarge, QuadratureNotConverged, ValidationError
from .states import StateSpec, correlator_rows

__all__ = [
    "AngularDensity", "SpatialDensity",
    "theta_eval_sympoly", "theta_eval_permsum",
    "rho_eval", "rho_eval_permsum", "marginal_density",
    "numeric_angular_marginal", "pair_radial_angle_density", "quadrature_oracle",
]

PERMSUM_MAX = 12
NONVORTEX_MAX = 4
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class AngularDensity:
    """Order-N angular density of `state` in a vortex pair of charge ell."""

    state: StateSpec
    ell: int
    order: int

    def __post_init__(self):
        if self.order < 1:
            raise ValidationError("density order must be >= 1")
        if self.ell < 1:
            raise ValidationError("vortex charge must be >= 1")

    def __call__(self, thetas):
        return theta_eval_sympoly(self, thetas)


@dataclass(frozen=True)
class SpatialDensity:
    """Order-N spatial density of `state` in `basis`."""

    state: StateSpec
    basis: ModeBasis
    order: int

    def __post_init__(self):
        if self.order < 1:
            raise ValidationError("density order must be >= 1")
        if not isinstance(self.basis, VortexPair) and self.order > NONVORTEX_MAX:
            raise OrderTooLarge(
                f"non-vortex spatial densities support order <= {NONVORTEX_MAX}"
            )

    def __call__(self, points):
        return rho_eval(self, points)


def _scaled_row(state, order):
    """(c_tilde[k], z_tilde) with the order-`order` correlator row max-scaled."""
    rows = correlator_rows(state, order)
    row = rows[order, : order + 1]
    z_scaled = sum(math.comb(order, k) * row[k] for k in range(order + 1))
    if z_scaled == 0.0:
        raise ValidationError(f"state has no {order}-particle component")
    return row, z_scaled


def _check_thetas(dens, thetas):
    th = np.asarray(thetas, dtype=float)
    if th.shape[-1] != dens.order:
        raise ValidationError(
            f"expected angle tuples of length {dens.order}, got {th.shape[-1]}"
        )
    return th


def _elementary_sym(z):
    """e_k(z) for k = 0..N along the last axis; z of shape (..., N) complex."""
    n = z.shape[-1]
    ek = np.zeros(z.shape[:-1] + (n + 1,), dtype=complex)
    ek[..., 0] = 1.0
    for j in range(n):
        zj = z[..., j]
        ek[..., 1 : j + 2] = ek[..., 1 : j + 2] + zj[..., None] * ek[..., 0 : j + 1]
    return ek


def theta_eval_sympoly(dens: AngularDensity, thetas):
    """Angular density via elementary symmetric polynomials; batches over
    leading axes of `thetas` (shape (..., N))."""
    th = _check_thetas(dens, thetas)
    row, z_scaled = _scaled_row(dens.state, dens.order)
    z = np.exp(2j * dens.ell * th)
    ek = _elementary_sym(z)
    num = np.einsum("...k,k->...", np.abs(ek) ** 2, row)
    out = num / (TWO_PI**dens.order * z_scaled)
    return out if out.shape else float(out)


def theta_eval_permsum(dens: AngularDensity, thetas):
    """Angular density by explicit enumeration of winding assignments.

    Oracle path: O(binom(2N, N)) cosine terms, order capped at 12.
    Accepts a single tuple of shape (N,).
    """
    th = np.asarray(thetas, dtype=float)
    n = dens.order
    if th.shape != (n,):
        raise ValidationError("permsum evaluates one angle tuple of shape (N,)")
    if n > PERMSUM_MAX:
        raise OrderTooLarge(f"permsum supports order <= {PERMSUM_MAX}")
    row, z_scaled = _scaled_row(dens.state, n)
    total = 0.0
    for k in range(n + 1):
        if row[k] == 0.0:
            continue
        # all assignments of +ell to k particles and -ell to the rest
        sums = []
        for plus in combinations(range(n), k):
            signs = -np.ones(n)
            signs[list(plus)] = 1.0
            sums.append(dens.ell * float(signs @ th))
        arr = np.array(sums)
        pair_cos = np.cos(arr[:, None] - arr[None, :]).sum()
        total += row[k] * pair_cos
    return total / (TWO_PI**n * z_scaled)


def _amplitudes(basis, points):
    pts = np.asarray(points, dtype=float)
    return mode_a(basis, pts), mode_b(basis, pts)


def _poly_coeffs_recursion(w, v):
    """B_k = [x^k] prod_j (v_j + x w_j) along the last axis."""
    n = w.shape[-1]
    bk = np.zeros(w.shape[:-1] + (n + 1,), dtype=complex)
    bk[..., 0] = 1.0
    for j in range(n):
        wj = w[..., j]
        vj = v[..., j]
        bk[..., 1 : j + 2] = vj[..., None] * bk[..., 1 : j + 2] \
            + wj[..., None] * bk[..., 0 : j + 1]
        bk[..., 0] = bk[..., 0] * vj
    return bk


def rho_eval(dens: SpatialDensity, points):
    """Spatial N-body density at point tuples of shape (..., N, 2)."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[-2:] != (dens.order, 2):
        raise ValidationError(
            f"expected point tuples of shape (..., {dens.order}, 2)"
        )
    if isinstance(dens.basis, VortexPair):
        ell = dens.basis.ell
        r2 = pts[..., 0] ** 2 + pts[..., 1] ** 2
        # per-particle radial marginal 2 pi |R_ell|^2; angles carry Theta
        radial = (2.0 / math.factorial(ell)) * r2**ell * np.exp(-r2)
        ang = AngularDensity(dens.state, ell, dens.order)
        thetas = np.arctan2(pts[..., 1], pts[..., 0])
        return np.prod(radial, axis=-1) * theta_eval_sympoly(ang, thetas)
    row, z_scaled = _scaled_row(dens.state, dens.order)
    w, v = _amplitudes(dens.basis, pts)
    bk = _poly_coeffs_recursion(w, v)
    num = np.einsum("...k,k->...", np.abs(bk) ** 2, row)
    out = num / z_scaled
    return out if out.shape else float(out)


def rho_eval_permsum(dens: SpatialDensity, points):
    """Spatial density by explicit enumeration over mode assignments (oracle).

    One tuple of shape (N, 2); N capped at 12 (4 is the contract for the
    non-vortex bases, where this is the reference path).
    """
    pts = np.asarray(points, dtype=float)
    n = dens.order
    if pts.shape != (n, 2):
        raise ValidationError("permsum evaluates one point tuple of shape (N, 2)")
    if n > PERMSUM_MAX:
        raise OrderTooLarge(f"permsum supports order <= {PERMSUM_MAX}")
    row, z_scaled = _scaled_row(dens.state, n)
    w, v = _amplitudes(dens.basis, pts)
    total = 0.0
    for k in range(n + 1):
        if row[k] == 0.0:
            continue
        bk = 0.0 + 0.0j
        for plus in combinations(range(n), k):
            term = 1.0 + 0.0j
            for j in range(n):
                term *= w[j] if j in plus else v[j]
            bk += term
        total += row[k] * abs(bk) ** 2
    return total / z_scaled


def marginal_density(dens, q: int):
    """Order-q marginal of an order-N density of a fixed-number state.

    For Fock states (and Fock mixtures restricted to one sector) the q-body
    marginal of the N-body law is the q-body law of the same state; this
    returns that density.  The identity is verified numerically in the tests
    at N <= 4 before being relied on by the sequential sampler.
    """
    from .states import Fock  # local import to keep module deps one-way

    if not isinstance(dens.state, Fock):
        raise ValidationError("exact marginals are only claimed for Fock states")
    if not 1 <= q <= dens.order:
        raise ValidationError("marginal order must lie in [1, N]")
    if isinstance(dens, AngularDensity):
        return AngularDensity(dens.state, dens.ell, q)
    return SpatialDensity(dens.state, dens.basis, q)


def numeric_angular_marginal(dens: AngularDensity, thetas_q, nodes: int = 0):
    """Integrate the angular density over its trailing N - q angles on a
    uniform periodic grid.

    The integrand is a trigonometric polynomial of degree 2*ell per angle, so
    any grid with more than 4*ell + 1 nodes per dimension is exact to
    rounding; `nodes` = 0 picks that size.  Used to verify marginal_density.
    """
    th_q = np.asarray(thetas_q, dtype=float)
    q = th_q.shape[-1]
    n = dens.order
    if not 1 <= q <= n:
        raise ValidationError("marginal order must lie in [1, N]")
    if q == n:
        return theta_eval_sympoly(dens, th_q)
    m = nodes or (4 * dens.ell + 2)
    grid = np.arange(m) * (TWO_PI / m)
    rest = np.stack(
        np.meshgrid(*([grid] * (n - q)), indexing="ij"), axis=-1
    ).reshape(-1, n - q)
    lead = np.broadcast_to(th_q[..., None, :], th_q.shape[:-1] + (rest.shape[0], q))
    full = np.concatenate(
        [lead, np.broadcast_to(rest, lead.shape[:-1] + (n - q,))], axis=-1
    )
    vals = theta_eval_sympoly(dens, full)
    out = vals.mean(axis=-1) * TWO_PI ** (n - q)
    return out if out.shape else float(out)


def pair_radial_angle_density(state: StateSpec, basis: ModeBasis):
    """Two-body density reduced to (r1, r2, dtheta), as a callable.

    Returns W with integral over [0,inf)^2 x [0, 2 pi) equal to 1, i.e. the
    joint pdf of the two radii and the angle difference.  For the dipole
    basis the density is averaged over global rotations first (the reduction
    any rotation-invariant observable sees).
    """
    row, z_scaled = _scaled_row(state, 2)
    c20, c11, c02 = row[2], row[1], row[0]

    if isinstance(basis, VortexPair):
        ell = basis.ell
        curly = c11 / z_scaled

        def w_vortex(r1, r2, dth):
            p1 = 2.0 / math.factorial(ell) * r1 ** (2 * ell + 1) * np.exp(-r1 * r1)
            p2 = 2.0 / math.factorial(ell) * r2 ** (2 * ell + 1) * np.exp(-r2 * r2)
            ang = (1.0 + 2.0 * curly * np.cos(2.0 * ell * dth)) / TWO_PI
            return p1 * p2 * ang

        return w_vortex

    if isinstance(basis, DipolePair):
        def w_dipole(r1, r2, dth):
            # rotation-averaged: <cos^2 a cos^2 b> = (2 + cos 2 dth)/8 etc.
            ang = ((c20 + c02) * (2.0 + np.cos(2.0 * dth)) / 8.0 + c11 / 2.0) / z_scaled
            rad = (2.0**2) * r1**3 * r2**3 * np.exp(-r1 * r1 - r2 * r2)
            return rad * ang * (4.0 / TWO_PI)

        return w_dipole

    def w_mixedlg(r1, r2, dth):
        u1, u2 = r1 * r1, r2 * r2
        a1, a2 = u1, u2                      # |phi_a|^2 scaled by pi e^{r^2}
        b1, b2 = (1 - u1) ** 2, (1 - u2) ** 2
        # phi_b is signed: the interference term carries (1-u1)(1-u2), not
        # the root of the squares
        cross = 2.0 * r1 * r2 * (1 - u1) * (1 - u2) * np.cos(dth)
        bracket = c20 * a1 * a2 + c02 * b1 * b2 + c11 * (a1 * b2 + a2 * b1 + cross)
        return 4.0 * r1 * r2 * np.exp(-u1 - u2) * bracket / (z_scaled * TWO_PI)

    return w_mixedlg


def _pair_expectation(state, basis, func, n_rad, n_ang, r_max=7.0):
    """Integral of func(r1, r2, dtheta) against the reduced pair density."""
    x, wx = np.polynomial.legendre.leggauss(n_rad)
    r = 0.5 * r_max * (x + 1.0)
    wr = 0.5 * r_max * wx
    dth = np.arange(n_ang) * (TWO_PI / n_ang)
    wd = TWO_PI / n_ang
    r1 = r[:, None, None]
    r2 = r[None, :, None]
    dd = dth[None, None, :]
    dens = pair_radial_angle_density(state, basis)(r1, r2, dd)
    vals = func(r1, r2, dd)
    return float(np.einsum("ijk,i,j->", dens * vals, wr, wr) * wd)


def quadrature_oracle(dens, kernel, kind: str = "pair_rotinv",
                      tol: float = 1e-6, max_doublings: int = 4):
    """Expectation of an observable kernel under an exact density, by
    refinement-until-stable quadrature.

    kind = "pair_rotinv": dens is a SpatialDensity of order 2 and kernel maps
    (r1, r2, dtheta) arrays to values (covers every rotation-invariant pair
    observable, e.g. the pair distance).
    kind = "angular": dens is an AngularDensity of order q <= 3 and kernel
    maps (..., q) angle arrays to values.

    Doubles the grid until two successive refinements differ by less than
    `tol`; raises QuadratureNotConverged past `max_doublings`.
    """
    if kind == "pair_rotinv":
        if not isinstance(dens, SpatialDensity) or dens.order != 2:
            raise ValidationError("pair_rotinv needs an order-2 spatial density")
        n_rad, n_ang = 24, 32
        prev = _pair_expectation(dens.state, dens.basis, kernel, n_rad, n_ang)
        for _ in range(max_doublings):
            n_rad *= 2
            n_ang *= 2
            cur = _pair_expectation(dens.state, dens.basis, kernel, n_rad, n_ang)
            if abs(cur - prev) < tol:
                return cur
            prev = cur
        raise QuadratureNotConverged("pair expectation did not stabilize")

    if kind == "angular":
        if not isinstance(dens, AngularDensity) or dens.order > 3:
            raise ValidationError("angular quadrature supports order <= 3")
        q = dens.order
        m = 4 * dens.ell + 4
        prev = None
        for _ in range(max_doublings + 1):
            grid = np.arange(m) * (TWO_PI / m)
            mesh = np.stack(
                np.meshgrid(*([grid] * q), indexing="ij"), axis=-1
            ).reshape(-1, q)
            vals = theta_eval_sympoly(dens, mesh) * kernel(mesh)
            cur = float(vals.sum() * (TWO_PI / m) ** q)
            if prev is not None and abs(cur - prev) < tol:
                return cur
            prev = cur
            m *= 2
        raise QuadratureNotConverged("angular expectation did not stabilize")

    raise ValidationError(f"unknown quadrature kind {kind!r}")
