"""Pure-Python sampling kernels (reference implementation).

bosonsim._kernels is a Cython mirror of this module; bosonsim._core picks
whichever is importable.  Both implementations consume an identical per-frame
random stream, so their outputs are bit-identical: every test that checks the
compiled core does so by comparing against this file.

Determinism contract
--------------------
Each frame owns a splitmix64 stream seeded from (seed, frame_id) only, so a
frame's content does not depend on how frames are batched across workers.
The draw order per frame is fixed:

1. geometry (law-dependent):
   - LAW_FIXED:        no draws (t, eta, s all given)
   - LAW_RPCS:         eta = 2*pi*U                      (t, s given)
   - LAW_THERMAL_BAL:  t = U; eta = 2*pi*U; s = nbar * GammaInt(q+2)
   - LAW_THERMAL_IMB:  t = InvCdfT(U); eta = 2*pi*U; s = GammaInt(q+2)/A(t)
     with A(t) = t/nbar1 + (1-t)/nbar2 and InvCdfT the exact inverse CDF of
     the density proportional to A(t)^-(q+2) on [0, 1]
2. multiplicity: fixed (no draw) or M = Poisson(s)
3. per particle, in order, basis-dependent:
   - vortex:  r = sqrt(GammaInt(ell+1)); then rejection on the angle with the
     constant envelope 1 + 2*sqrt(t(1-t)): each trial draws th = 2*pi*U and
     v = U, accepting when v*(1+a) <= 1 + a*cos(2*ell*(th + eta))
   - dipole:  each trial draws u = GammaInt(2) (u = r^2 proposal from the
     ring density u*exp(-u)), th = 2*pi*U, v = U, accepting when
     v <= t*c^2 + (1-t)*s^2 + 2*sqrt(t(1-t))*cos(eta)*c*s  (c, s = cos, sin th)
   - mixedlg: each trial first draws the radial proposal from the mixture
     t * Gamma(2) + (1-t) * f2 with f2(u) = (1-u)^2 exp(-u) (f2 itself by
     rejection: component k in {1,2,3} with weights 1/5, 2/5, 2/5, then
     u = GammaInt(k), accept when v*(1+u)^2 <= (1-u)^2), then th = 2*pi*U
     and v = U, accepting when
     v * 2*(t*u + (1-t)*(1-u)^2) <= t*u + (1-t)*(1-u)^2
                                    + 2*sqrt(t(1-t))*sqrt(u)*(1-u)*cos(th+eta)

GammaInt(k) is the sum of k draws of -log1p(-U) (exact for integer shape).
The correlated (sequential) kernel documents its own order below.

All rejection loops raise SamplingStalled beyond REJECTION_CAP trials; the
envelopes used here accept with probability >= 1/2 on average, so the cap is
a safety contract, not a tuning parameter.
"""

import math

import numpy as np

from .errors import SamplingStalled

M64 = (1 << 64) - 1
GOLD = 0x9E3779B97F4A7C15
TWO_PI = 2.0 * math.pi
REJECTION_CAP = 1_000_000

# law codes (shared with the compiled kernel through bosonsim._core)
LAW_FIXED = 0
LAW_RPCS = 1
LAW_THERMAL_BAL = 2
LAW_THERMAL_IMB = 3

# basis codes
BASIS_VORTEX = 0
BASIS_DIPOLE = 1
BASIS_MIXEDLG = 2


def mix64(z):
    """splitmix64 output mix; the uint64 avalanche used for stream seeding."""
    z &= M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


def frame_state(seed, frame_id):
    """Initial splitmix64 state for one frame's stream."""
    seed = int(seed)      # accept numpy integers
    frame_id = int(frame_id)
    return mix64((seed & M64) ^ mix64((frame_id * GOLD + 0x1B873593) & M64))


class FrameRng:
    """splitmix64 stream for a single frame.

    Not a general-purpose RNG: it exists so that the compiled and fallback
    kernels, and any per-frame re-derivation in tests, see the same bits.
    """

    __slots__ = ("state",)

    def __init__(self, seed, frame_id):
        self.state = frame_state(seed, frame_id)

    def u64(self):
        self.state = (self.state + GOLD) & M64
        return mix64(self.state)

    def uniform(self):
        """Uniform on [0, 1) with 53 random bits."""
        return (self.u64() >> 11) * 2.0**-53

    def exponential(self):
        return -math.log1p(-self.uniform())

    def gamma_int(self, k):
        """Gamma(k, 1) for integer shape k, as a sum of exponentials."""
        total = 0.0
        for _ in range(k):
            total += -math.log1p(-self.uniform())
        return total

    def poisson(self, lam):
        if lam > 600.0:
            raise OverflowError("Poisson intensity too large for exact inversion")
        target = math.exp(-lam)
        k = 0
        p = 1.0
        while True:
            p *= self.uniform()
            if p <= target:
                return k
            k += 1


def _invcdf_t(u, nbar1, nbar2, order):
    """Exact inverse CDF of the density ~ (t/nbar1 + (1-t)/nbar2)^-(order+2)."""
    m = order + 2
    a = 1.0 / nbar2
    b = 1.0 / nbar1 - 1.0 / nbar2
    p = 1.0 - m  # exponent of the antiderivative, <= -1
    c0 = a**p
    c1 = (a + b) ** p
    x = c0 - u * (c0 - c1)
    return (x ** (1.0 / p) - a) / b


def _sample_geometry(rng, law):
    """Draw (t, eta, s) for one frame.  law = (code, t0, eta0, s0, nbar1, nbar2, q)."""
    code, t0, eta0, s0, nbar1, nbar2, qorder = law
    if code == LAW_FIXED:
        return t0, eta0, s0
    if code == LAW_RPCS:
        return t0, TWO_PI * rng.uniform(), s0
    if code == LAW_THERMAL_BAL:
        t = rng.uniform()
        eta = TWO_PI * rng.uniform()
        s = nbar1 * rng.gamma_int(int(qorder) + 2)
        return t, eta, s
    if code == LAW_THERMAL_IMB:
        t = _invcdf_t(rng.uniform(), nbar1, nbar2, int(qorder))
        eta = TWO_PI * rng.uniform()
        a_t = t / nbar1 + (1.0 - t) / nbar2
        s = rng.gamma_int(int(qorder) + 2) / a_t
        return t, eta, s
    raise ValueError(f"unknown geometry law code {code}")


def sample_point(basis_code, ell, t, eta, rng):
    """One particle position for a fixed geometry.  Returns (x, y, trials)."""
    if basis_code == BASIS_VORTEX:
        r = math.sqrt(rng.gamma_int(ell + 1))
        a = 2.0 * math.sqrt(t * (1.0 - t))
        env = 1.0 + a
        for trial in range(1, REJECTION_CAP + 1):
            th = TWO_PI * rng.uniform()
            v = rng.uniform()
            if v * env <= 1.0 + a * math.cos(2.0 * ell * (th + eta)):
                return r * math.cos(th), r * math.sin(th), trial
        raise SamplingStalled("vortex angle rejection exceeded cap")

    if basis_code == BASIS_DIPOLE:
        amp = 2.0 * math.sqrt(t * (1.0 - t)) * math.cos(eta)
        for trial in range(1, REJECTION_CAP + 1):
            u = rng.gamma_int(2)
            th = TWO_PI * rng.uniform()
            v = rng.uniform()
            c = math.cos(th)
            s_ = math.sin(th)
            q = t * c * c + (1.0 - t) * s_ * s_ + amp * c * s_
            if v <= q:
                r = math.sqrt(u)
                return r * c, r * s_, trial
        raise SamplingStalled("dipole rejection exceeded cap")

    if basis_code == BASIS_MIXEDLG:
        amp = 2.0 * math.sqrt(t * (1.0 - t))
        for trial in range(1, REJECTION_CAP + 1):
            if rng.uniform() < t:
                u = rng.gamma_int(2)
            else:
                for _ in range(REJECTION_CAP):
                    m = rng.uniform()
                    k = 1 if m < 0.2 else (2 if m < 0.6 else 3)
                    u = rng.gamma_int(k)
                    v = rng.uniform()
                    om = 1.0 - u
                    if v * (1.0 + u) * (1.0 + u) <= om * om:
                        break
                else:
                    raise SamplingStalled("mixedlg radial rejection exceeded cap")
            th = TWO_PI * rng.uniform()
            v = rng.uniform()
            om = 1.0 - u
            base = t * u + (1.0 - t) * om * om
            cross = amp * math.sqrt(u) * om * math.cos(th + eta)
            if v * 2.0 * base <= base + cross:
                r = math.sqrt(u)
                return r * math.cos(th), r * math.sin(th), trial
        raise SamplingStalled("mixedlg rejection exceeded cap")

    raise ValueError(f"unknown basis code {basis_code}")


def uniform_stream(seed, frame_id, n):
    """First n uniforms of one frame's stream (cross-backend diagnostic)."""
    rng = FrameRng(seed, frame_id)
    return np.array([rng.uniform() for _ in range(n)])


def sample_classical_batch(seed, frame_start, n_frames, law, basis_code, ell,
                           n_points, poisson_mult):
    """Generate frames [frame_start, frame_start + n_frames) for one geometry law.

    Returns (t, eta, s, counts, points, trials, accepts): per-frame geometry
    arrays, per-frame point counts, the stacked points of shape (sum counts, 2),
    and total angle-rejection trial/accept counters.
    """
    t_arr = np.empty(n_frames)
    eta_arr = np.empty(n_frames)
    s_arr = np.empty(n_frames)
    counts = np.empty(n_frames, dtype=np.int64)
    chunks = []
    trials_total = 0
    accepts_total = 0
    for i in range(n_frames):
        rng = FrameRng(seed, frame_start + i)
        t, eta, s = _sample_geometry(rng, law)
        t_arr[i] = t
        eta_arr[i] = eta
        s_arr[i] = s
        m = rng.poisson(s) if poisson_mult else n_points
        counts[i] = m
        pts = np.empty((m, 2))
        for j in range(m):
            x, y, trials = sample_point(basis_code, ell, t, eta, rng)
            pts[j, 0] = x
            pts[j, 1] = y
            trials_total += trials
            accepts_total += 1
        chunks.append(pts)
    points = np.concatenate(chunks) if chunks else np.empty((0, 2))
    return t_arr, eta_arr, s_arr, counts, points, trials_total, accepts_total


def sample_fock_frame(rng, ell, q, ctab):
    """One correlated frame of q particles by sequential conditionals.

    ctab[j][k] holds the order-j modal correlators of the state (row-scaled;
    only ratios within a row matter).  Draw order per particle j = 1..q:
    radius r = sqrt(GammaInt(ell+1)) first, then the angle by rejection
    against the envelope A + sqrt(B^2 + C^2) of the conditional
    A + B*cos(2*ell*th) + C*sin(2*ell*th); each trial draws th = 2*pi*U, v = U.
    The first particle goes through the same code path (its conditional is
    uniform, so the first trial always accepts).

    The elementary-symmetric state (e_k of the accepted phases) is kept as
    explicit re/im arrays with spelled-out complex arithmetic so that the
    compiled mirror produces the same bits; when the components outgrow 1e100
    the array is rescaled (every consumer is homogeneous in it).

    Returns (points, trials, min_margin) where min_margin is the smallest
    value of (A - sqrt(B^2+C^2))/A seen, a non-negativity witness for the
    conditional densities.
    """
    ek_re = [0.0] * (q + 1)
    ek_im = [0.0] * (q + 1)
    ek_re[0] = 1.0
    pts = np.empty((q, 2))
    trials_total = 0
    min_margin = 1.0
    for j in range(q):
        r = math.sqrt(rng.gamma_int(ell + 1))
        row = ctab[j + 1]
        a_coef = 0.0
        g_re = 0.0
        g_im = 0.0
        for k in range(j + 2):
            c = row[k]
            if c == 0.0:
                continue
            kr = ek_re[k] if k <= j else 0.0
            ki = ek_im[k] if k <= j else 0.0
            mr = ek_re[k - 1] if k >= 1 else 0.0
            mi = ek_im[k - 1] if k >= 1 else 0.0
            a_coef += c * ((kr * kr + ki * ki) + (mr * mr + mi * mi))
            # g += c * e_{k-1} * conj(e_k)
            g_re += c * (mr * kr + mi * ki)
            g_im += c * (mi * kr - mr * ki)
        b_coef = 2.0 * g_re
        c_coef = -2.0 * g_im
        amp = math.sqrt(b_coef * b_coef + c_coef * c_coef)
        margin = (a_coef - amp) / a_coef
        if margin < min_margin:
            min_margin = margin
        env = a_coef + amp
        th = 0.0
        for trial in range(1, REJECTION_CAP + 1):
            th = TWO_PI * rng.uniform()
            v = rng.uniform()
            val = a_coef + b_coef * math.cos(2.0 * ell * th) \
                + c_coef * math.sin(2.0 * ell * th)
            if v * env <= val:
                break
        else:
            raise SamplingStalled("sequential angle rejection exceeded cap")
        trials_total += trial
        zr = math.cos(2.0 * ell * th)
        zi = math.sin(2.0 * ell * th)
        for k in range(j + 1, 0, -1):
            er = ek_re[k - 1]
            ei = ek_im[k - 1]
            ek_re[k] = ek_re[k] + (zr * er - zi * ei)
            ek_im[k] = ek_im[k] + (zr * ei + zi * er)
        peak = 0.0
        for k in range(j + 2):
            ar = abs(ek_re[k])
            ai = abs(ek_im[k])
            if ar > peak:
                peak = ar
            if ai > peak:
                peak = ai
        if peak > 1e100:
            inv = 1.0 / peak
            for k in range(j + 2):
                ek_re[k] *= inv
                ek_im[k] *= inv
        pts[j, 0] = r * math.cos(th)
        pts[j, 1] = r * math.sin(th)
    return pts, trials_total, min_margin


def sample_fock_batch(seed, frame_start, n_frames, ell, q, ctab):
    """Correlated frames [frame_start, frame_start + n_frames), q points each.

    Returns (points, trials, accepts, min_margin) with points of shape
    (n_frames * q, 2).
    """
    points = np.empty((n_frames * q, 2))
    trials_total = 0
    min_margin = 1.0
    for i in range(n_frames):
        rng = FrameRng(seed, frame_start + i)
        pts, trials, margin = sample_fock_frame(rng, ell, q, ctab)
        points[i * q : (i + 1) * q] = pts
        trials_total += trials
        if margin < min_margin:
            min_margin = margin
    return points, trials_total, n_frames * q, min_margin
