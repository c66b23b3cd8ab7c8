"""Two-mode states and their normally ordered modal correlators.

A state enters the sampler and the joint densities only through the numbers
C[k, m] = <a+^k b+^m b^m a^k>: all distributions downstream are linear in
them.  Five families are supported:

- Fock(n1, n2):        C = n1!/(n1-k)! * n2!/(n2-m)!, zero past the occupations
- Thermal(nbar1, nbar2): C = k! m! nbar1^k nbar2^m
- RPCS(a1, a2):        phase-randomized coherent pair, C = a1^2k * a2^2m
- Coherent(alpha1, alpha2): C = |alpha1|^2k |alpha2|^2m  (same moduli as RPCS;
  the two differ only through the fixed relative phase used by the sampler)
- Mixture of Fock states: the weighted sum

The pair fraction curly_c = C[1,1] / (C[2,0] + 2 C[1,1] + C[0,2]) is the one
number the two-particle interference pattern depends on; z_norm(q) is the
q-th factorial moment of total particle number and normalizes the q-body
densities.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import DegenerateState, ValidationError

__all__ = [
    "Fock", "Thermal", "RPCS", "Coherent", "Mixture", "StateSpec",
    "correlator", "curly_c", "z_norm", "effective_weights", "w_thermal_t",
    "parse_state", "format_state", "mean_occupations", "is_classical",
    "correlator_rows",
]


@dataclass(frozen=True)
class Fock:
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ValidationError("Fock occupations must be non-negative")


@dataclass(frozen=True)
class Thermal:
    nbar1: float
    nbar2: float

    def __post_init__(self):
        if self.nbar1 < 0 or self.nbar2 < 0:
            raise ValidationError("thermal occupations must be non-negative")


@dataclass(frozen=True)
class RPCS:
    """Phase-randomized coherent state pair; a1, a2 are amplitude moduli."""

    a1: float
    a2: float

    def __post_init__(self):
        if self.a1 < 0 or self.a2 < 0:
            raise ValidationError("RPCS amplitude moduli must be non-negative")


@dataclass(frozen=True)
class Coherent:
    alpha1: complex
    alpha2: complex


@dataclass(frozen=True)
class Mixture:
    """Statistical mixture of two-mode Fock states: ((weight, Fock), ...)."""

    components: tuple

    def __post_init__(self):
        if not self.components:
            raise ValidationError("mixture needs at least one component")
        total = 0.0
        for w, comp in self.components:
            if not isinstance(comp, Fock):
                raise ValidationError("mixture components must be Fock states")
            if w <= 0:
                raise ValidationError("mixture weights must be positive")
            total += w
        if abs(total - 1.0) > 1e-9:
            # store normalized weights; callers may pass unnormalized ones
            object.__setattr__(
                self,
                "components",
                tuple((w / total, c) for w, c in self.components),
            )


StateSpec = Union[Fock, Thermal, RPCS, Coherent, Mixture]


def _falling(n: int, k: int) -> int:
    """n (n-1) ... (n-k+1), exactly; zero when k > n."""
    if k > n:
        return 0
    out = 1
    for i in range(k):
        out *= n - i
    return out


def correlator(state: StateSpec, k: int, m: int) -> float:
    """Normally ordered modal correlator C[k, m] = <a+^k b+^m b^m a^k>."""
    if k < 0 or m < 0:
        raise ValidationError("correlator orders must be non-negative")
    if isinstance(state, Fock):
        return float(_falling(state.n1, k) * _falling(state.n2, m))
    if isinstance(state, Thermal):
        return math.factorial(k) * math.factorial(m) * state.nbar1**k * state.nbar2**m
    if isinstance(state, RPCS):
        return state.a1 ** (2 * k) * state.a2 ** (2 * m)
    if isinstance(state, Coherent):
        return abs(state.alpha1) ** (2 * k) * abs(state.alpha2) ** (2 * m)
    if isinstance(state, Mixture):
        return float(
            sum(w * _falling(c.n1, k) * _falling(c.n2, m) for w, c in state.components)
        )
    raise ValidationError(f"unsupported state type {type(state).__name__}")


def curly_c(state: StateSpec) -> float:
    """Pair fraction C[1,1] / (C[2,0] + 2 C[1,1] + C[0,2]); in [0, 1/2]."""
    c11 = correlator(state, 1, 1)
    z2 = correlator(state, 2, 0) + 2.0 * c11 + correlator(state, 0, 2)
    if z2 == 0.0:
        raise DegenerateState("state has no two-particle component")
    return c11 / z2


def z_norm(state: StateSpec, q: int) -> float:
    """q-th factorial moment of total number, sum_k binom(q,k) C[k, q-k]."""
    if q < 0:
        raise ValidationError("order must be non-negative")
    return float(sum(math.comb(q, k) * correlator(state, k, q - k) for k in range(q + 1)))


def effective_weights(state: StateSpec, q: int):
    """Sector weights after conditioning on seeing q particles.

    For a Fock mixture, detecting a q-fold coincidence reweights component
    (n_a, n_b) by its q-th factorial moment (n_a + n_b)!/(n_a + n_b - q)!.
    Returns a normalized list of (weight, Fock); raises DegenerateState when
    no component holds q particles.
    """
    if isinstance(state, Fock):
        comps = ((1.0, state),)
    elif isinstance(state, Mixture):
        comps = state.components
    else:
        raise ValidationError("effective_weights applies to Fock states and mixtures")
    raw = [(w * _falling(c.n1 + c.n2, q), c) for w, c in comps]
    total = sum(w for w, _ in raw)
    if total == 0:
        raise DegenerateState(f"no mixture component holds {q} particles")
    return [(w / total, c) for w, c in raw if w > 0]


def w_thermal_t(nbar1: float, nbar2: float, order: int, t):
    """Density of the mode-imbalance fraction t for an imbalanced thermal state,
    tilted by a q-fold coincidence of the given order.

    W(t) ~ A(t)^-(order+2) with A(t) = t/nbar1 + (1-t)/nbar2, normalized on
    [0, 1] in closed form.  order = 0 is the bare (no-coincidence) geometry law;
    balanced occupations give the uniform density.  Vectorizes over t.
    """
    if nbar1 <= 0 or nbar2 <= 0:
        raise ValidationError("thermal occupations must be positive here")
    if order < 0:
        raise ValidationError("order must be non-negative")
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t > 1)):
        raise ValidationError("t must lie in [0, 1]")
    m = order + 2
    a = 1.0 / nbar2
    b = 1.0 / nbar1 - 1.0 / nbar2
    at = a + b * t
    if b == 0.0:
        norm = a ** (-m)
    else:
        norm = (a ** (1 - m) - (a + b) ** (1 - m)) / ((m - 1) * b)
    out = at ** (-float(m)) / norm
    return out if out.shape else float(out)


def mean_occupations(state: StateSpec):
    """(mean n_a, mean n_b); equals (C[1,0], C[0,1])."""
    return correlator(state, 1, 0), correlator(state, 0, 1)


def is_classical(state: StateSpec) -> bool:
    """True when the state has a positive phase-space density over amplitudes."""
    return isinstance(state, (Thermal, RPCS, Coherent))


def correlator_rows(state: StateSpec, qmax: int) -> np.ndarray:
    """Row-scaled correlator table rows[q][k] ~ C[k, q-k] for q = 0..qmax.

    Each row is divided by its maximum so that very large occupations stay
    inside float range; every consumer (sequential sampler, angular densities)
    is homogeneous in a row, so only within-row ratios matter.  Exact integer
    (or rational, for mixtures) arithmetic is used where the correlators are
    integers; the classical families go through log space.
    """
    rows = np.zeros((qmax + 1, qmax + 1))
    if isinstance(state, (Fock, Mixture)):
        comps = ((1, state),) if isinstance(state, Fock) else tuple(
            (Fraction(w), c) for w, c in state.components
        )
        for q in range(qmax + 1):
            vals = []
            for k in range(q + 1):
                tot = Fraction(0)
                for w, c in comps:
                    tot += w * _falling(c.n1, k) * _falling(c.n2, q - k)
                vals.append(tot)
            peak = max(vals)
            if peak > 0:
                rows[q, : q + 1] = [float(v / peak) for v in vals]
        return rows
    if isinstance(state, Thermal):
        ln1 = math.log(state.nbar1) if state.nbar1 > 0 else -math.inf
        ln2 = math.log(state.nbar2) if state.nbar2 > 0 else -math.inf
        logc = lambda k, m: math.lgamma(k + 1) + math.lgamma(m + 1) \
            + (k * ln1 if k else 0.0) + (m * ln2 if m else 0.0)
    elif isinstance(state, (RPCS, Coherent)):
        if isinstance(state, RPCS):
            i1, i2 = state.a1**2, state.a2**2
        else:
            i1, i2 = abs(state.alpha1) ** 2, abs(state.alpha2) ** 2
        ln1 = math.log(i1) if i1 > 0 else -math.inf
        ln2 = math.log(i2) if i2 > 0 else -math.inf
        logc = lambda k, m: (k * ln1 if k else 0.0) + (m * ln2 if m else 0.0)
    else:
        raise ValidationError(f"unsupported state type {type(state).__name__}")
    for q in range(qmax + 1):
        logs = np.array([logc(k, q - k) for k in range(q + 1)])
        peak = logs.max()
        if peak == -math.inf:
            continue
        rows[q, : q + 1] = np.exp(logs - peak)
    return rows


# ----- Text tokens -----------------------------------------------------------

_MIX_PART = re.compile(r"^([^*]+)\*(\d+),(\d+)$")


def _float(tok: str, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ValidationError(f"bad {what}: {tok!r}") from None


def _int(tok: str, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ValidationError(f"bad {what}: {tok!r}") from None


def parse_state(token: str) -> StateSpec:
    """Parse a state token.

    Grammar:
        fock:<n1>,<n2>
        thermal:<nbar1>,<nbar2>
        rpcs:<a1>,<a2>
        coherent:<re1>,<im1>,<re2>,<im2>
        mix:<w1>*<n1>,<n2>;<w2>*<n1>,<n2>;...
    """
    head, sep, rest = token.partition(":")
    if not sep:
        raise ValidationError(f"state token needs a family prefix: {token!r}")
    head = head.strip().lower()
    if head == "fock":
        parts = rest.split(",")
        if len(parts) != 2:
            raise ValidationError(f"fock takes two occupations: {token!r}")
        return Fock(_int(parts[0], "occupation"), _int(parts[1], "occupation"))
    if head == "thermal":
        parts = rest.split(",")
        if len(parts) != 2:
            raise ValidationError(f"thermal takes two occupations: {token!r}")
        return Thermal(_float(parts[0], "occupation"), _float(parts[1], "occupation"))
    if head == "rpcs":
        parts = rest.split(",")
        if len(parts) != 2:
            raise ValidationError(f"rpcs takes two amplitude moduli: {token!r}")
        return RPCS(_float(parts[0], "amplitude"), _float(parts[1], "amplitude"))
    if head == "coherent":
        parts = rest.split(",")
        if len(parts) != 4:
            raise ValidationError(f"coherent takes re1,im1,re2,im2: {token!r}")
        vals = [_float(p, "amplitude component") for p in parts]
        return Coherent(complex(vals[0], vals[1]), complex(vals[2], vals[3]))
    if head == "mix":
        comps = []
        for part in rest.split(";"):
            m = _MIX_PART.match(part.strip())
            if not m:
                raise ValidationError(f"bad mixture component {part!r} in {token!r}")
            comps.append(
                (_float(m.group(1), "weight"),
                 Fock(int(m.group(2)), int(m.group(3))))
            )
        return Mixture(tuple(comps))
    raise ValidationError(f"unknown state family {head!r}")


def format_state(state: StateSpec) -> str:
    """Inverse of parse_state, for manifests."""
    if isinstance(state, Fock):
        return f"fock:{state.n1},{state.n2}"
    if isinstance(state, Thermal):
        return f"thermal:{state.nbar1:.17g},{state.nbar2:.17g}"
    if isinstance(state, RPCS):
        return f"rpcs:{state.a1:.17g},{state.a2:.17g}"
    if isinstance(state, Coherent):
        a1, a2 = state.alpha1, state.alpha2
        return (f"coherent:{a1.real:.17g},{a1.imag:.17g},"
                f"{a2.real:.17g},{a2.imag:.17g}")
    if isinstance(state, Mixture):
        return "mix:" + ";".join(
            f"{w:.17g}*{c.n1},{c.n2}" for w, c in state.components
        )
    raise ValidationError(f"unsupported state type {type(state).__name__}")
