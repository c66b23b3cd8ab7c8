"""Two-mode spatial bases and geometry-conditioned one-body densities.

Each basis is a pair of orthonormal planar modes (phi_a, phi_b).  A shared
"geometry" (t, eta) fixes a classical field configuration
sqrt(t) phi_a + e^{-i eta'} sqrt(1-t) phi_b up to global phase and intensity;
conditioned on it, particles are independent draws from the one-body density

    |sqrt(t) phi_a(r) + sqrt(1-t) e^{-i eta'} phi_b(r)|^2.

eta conventions (see one_body_density):
- VortexPair: eta is a spatial orientation; the interference term is
  cos(2 ell (theta + eta)).  Rotating the frame by c while shifting eta by +c
  leaves the density invariant.
- DipolePair: eta is the relative phase between the two lobes and enters as
  cos(eta) on the cross term (eta = pi/2 gives the rotationally symmetric ring).
- MixedLG: eta is the relative phase, entering as cos(theta + eta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _core
from ._kernels_py import FrameRng, sample_point
from .errors import DegenerateState, ValidationError
from .states import StateSpec, mean_occupations

__all__ = [
    "VortexPair", "DipolePair", "MixedLG", "ModeBasis", "Geometry",
    "mode_a", "mode_b", "one_body_density", "sample_particle",
    "averaged_one_body", "parse_basis", "format_basis", "basis_code", "basis_ell",
]


@dataclass(frozen=True)
class VortexPair:
    """Counter-rotating vortex modes r^ell e^{-r^2/2} e^{+-i ell theta}."""

    ell: int = 1

    def __post_init__(self):
        if self.ell < 1:
            raise ValidationError("vortex charge ell must be >= 1")


@dataclass(frozen=True)
class DipolePair:
    """Orthogonal dipole (p_x, p_y) modes."""


@dataclass(frozen=True)
class MixedLG:
    """ell = 1 ring paired with the radially structured ell = 0 mode (1 - r^2)."""


ModeBasis = Union[VortexPair, DipolePair, MixedLG]


@dataclass(frozen=True)
class Geometry:
    """Shared single-frame configuration: mode split t, phase/orientation eta,
    total intensity s (None when not tracked)."""

    t: float
    eta: float
    basis: ModeBasis
    s: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValidationError("mode fraction t must lie in [0, 1]")


def _split_xy(points):
    pts = np.asarray(points, dtype=float)
    return pts[..., 0], pts[..., 1]


def mode_a(basis: ModeBasis, points):
    """phi_a evaluated at (..., 2) points; complex for the rotating bases."""
    x, y = _split_xy(points)
    r2 = x * x + y * y
    if isinstance(basis, VortexPair):
        ell = basis.ell
        radial = np.sqrt(r2) ** ell * np.exp(-r2 / 2) / math.sqrt(math.pi * math.factorial(ell))
        return radial * np.exp(1j * ell * np.arctan2(y, x))
    if isinstance(basis, DipolePair):
        return math.sqrt(2.0 / math.pi) * x * np.exp(-r2 / 2)
    if isinstance(basis, MixedLG):
        return np.sqrt(r2) * np.exp(-r2 / 2) / math.sqrt(math.pi) * np.exp(1j * np.arctan2(y, x))
    raise ValidationError(f"unsupported basis {type(basis).__name__}")


def mode_b(basis: ModeBasis, points):
    x, y = _split_xy(points)
    r2 = x * x + y * y
    if isinstance(basis, VortexPair):
        ell = basis.ell
        radial = np.sqrt(r2) ** ell * np.exp(-r2 / 2) / math.sqrt(math.pi * math.factorial(ell))
        return radial * np.exp(-1j * ell * np.arctan2(y, x))
    if isinstance(basis, DipolePair):
        return math.sqrt(2.0 / math.pi) * y * np.exp(-r2 / 2)
    if isinstance(basis, MixedLG):
        return (1.0 - r2) * np.exp(-r2 / 2) / math.sqrt(math.pi)
    raise ValidationError(f"unsupported basis {type(basis).__name__}")


def one_body_density(geom: Geometry, points):
    """Geometry-conditioned one-body density at (..., 2) points.

    Normalized to 1 over the plane for every (t, eta).
    """
    t, eta = geom.t, geom.eta
    cross = 2.0 * math.sqrt(t * (1.0 - t))
    x, y = _split_xy(points)
    r2 = x * x + y * y

    if isinstance(geom.basis, VortexPair):
        ell = geom.basis.ell
        radial = r2**ell * np.exp(-r2) / (math.pi * math.factorial(ell))
        theta = np.arctan2(y, x)
        return radial * (1.0 + cross * np.cos(2.0 * ell * (theta + eta)))

    if isinstance(geom.basis, DipolePair):
        quad = t * x * x + (1.0 - t) * y * y + cross * math.cos(eta) * x * y
        return (2.0 / math.pi) * np.exp(-r2) * quad

    if isinstance(geom.basis, MixedLG):
        om = 1.0 - r2
        theta = np.arctan2(y, x)
        bracket = t * r2 + (1.0 - t) * om * om \
            + cross * np.sqrt(r2) * om * np.cos(theta + eta)
        return np.exp(-r2) / math.pi * bracket

    raise ValidationError(f"unsupported basis {type(geom.basis).__name__}")


def basis_code(basis: ModeBasis) -> int:
    if isinstance(basis, VortexPair):
        return _core.BASIS_VORTEX
    if isinstance(basis, DipolePair):
        return _core.BASIS_DIPOLE
    if isinstance(basis, MixedLG):
        return _core.BASIS_MIXEDLG
    raise ValidationError(f"unsupported basis {type(basis).__name__}")


def basis_ell(basis: ModeBasis) -> int:
    """Vortex charge; 1 for the non-vortex bases (unused by their kernels)."""
    return basis.ell if isinstance(basis, VortexPair) else 1


def sample_particle(geom: Geometry, rng: FrameRng):
    """One exact draw from one_body_density(geom, .) via rejection sampling."""
    x, y, _ = sample_point(basis_code(geom.basis), basis_ell(geom.basis),
                           geom.t, geom.eta, rng)
    return np.array([x, y])


def averaged_one_body(state: StateSpec, basis: ModeBasis, points):
    """One-body density after averaging over geometries (or exactly, for any
    state: the order-1 reduced density), a mean-occupation-weighted mixture
    of |phi_a|^2 and |phi_b|^2."""
    na, nb = mean_occupations(state)
    tot = na + nb
    if tot == 0.0:
        raise DegenerateState("state has no particles")
    wa = np.abs(mode_a(basis, points)) ** 2
    wb = np.abs(mode_b(basis, points)) ** 2
    return (na * wa + nb * wb) / tot


def parse_basis(token: str) -> ModeBasis:
    """Parse a basis token: vortex:<ell> | dipole | mixedlg."""
    tok = token.strip().lower()
    if tok == "dipole":
        return DipolePair()
    if tok == "mixedlg":
        return MixedLG()
    if tok.startswith("vortex:"):
        try:
            ell = int(tok.split(":", 1)[1])
        except ValueError:
            raise ValidationError(f"bad vortex charge in {token!r}") from None
        return VortexPair(ell)
    if tok == "vortex":
        return VortexPair(1)
    raise ValidationError(f"unknown basis token {token!r}")


def format_basis(basis: ModeBasis) -> str:
    if isinstance(basis, VortexPair):
        return f"vortex:{basis.ell}"
    if isinstance(basis, DipolePair):
        return "dipole"
    if isinstance(basis, MixedLG):
        return "mixedlg"
    raise ValidationError(f"unsupported basis {type(basis).__name__}")
