# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernels.

Line-for-line mirror of bosonsim._kernels_py (the reference implementation);
see that module for the determinism contract and the per-frame draw order.
Every floating-point expression here is written with the same operations in
the same order as the pure-Python code, both call the same libm, and the
build disables floating-point contraction, so outputs are bit-identical.
Change the two files together or not at all.
"""

import numpy as np

from .errors import SamplingStalled

from libc.math cimport cos, exp, fabs, log1p, pow, sin, sqrt

ctypedef unsigned long long u64

cdef double TWO_PI = 2.0 * 3.14159265358979323846264338327950288
cdef double U53 = 1.0 / 9007199254740992.0      # 2.0**-53, exact
cdef u64 GOLD = 0x9E3779B97F4A7C15ULL
cdef int REJECTION_CAP = 1000000

LAW_FIXED = 0
LAW_RPCS = 1
LAW_THERMAL_BAL = 2
LAW_THERMAL_IMB = 3

BASIS_VORTEX = 0
BASIS_DIPOLE = 1
BASIS_MIXEDLG = 2


cdef inline u64 _mix64(u64 z):
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline u64 _frame_state(u64 seed, u64 frame_id):
    return _mix64(seed ^ _mix64(frame_id * GOLD + 0x1B873593ULL))


cdef inline u64 _next(u64* st):
    st[0] = st[0] + GOLD
    return _mix64(st[0])


cdef inline double _uniform(u64* st):
    return <double>(_next(st) >> 11) * U53


cdef inline double _gamma_int(u64* st, int k):
    cdef double total = 0.0
    cdef int i
    for i in range(k):
        total += -log1p(-_uniform(st))
    return total


cdef long _poisson(u64* st, double lam) except -2:
    if lam > 600.0:
        raise OverflowError("Poisson intensity too large for exact inversion")
    cdef double target = exp(-lam)
    cdef long k = 0
    cdef double p = 1.0
    while True:
        p *= _uniform(st)
        if p <= target:
            return k
        k += 1


cdef inline double _invcdf_t(double u, double nbar1, double nbar2, int order):
    cdef double m = order + 2
    cdef double a = 1.0 / nbar2
    cdef double b = 1.0 / nbar1 - 1.0 / nbar2
    cdef double p = 1.0 - m
    cdef double c0 = pow(a, p)
    cdef double c1 = pow(a + b, p)
    cdef double x = c0 - u * (c0 - c1)
    return (pow(x, 1.0 / p) - a) / b


cdef int _sample_geometry(u64* st, int code, double t0, double eta0, double s0,
                          double nbar1, double nbar2, int qorder,
                          double* t, double* eta, double* s) except -1:
    if code == LAW_FIXED:
        t[0] = t0; eta[0] = eta0; s[0] = s0
        return 0
    if code == LAW_RPCS:
        t[0] = t0; eta[0] = TWO_PI * _uniform(st); s[0] = s0
        return 0
    if code == LAW_THERMAL_BAL:
        t[0] = _uniform(st)
        eta[0] = TWO_PI * _uniform(st)
        s[0] = nbar1 * _gamma_int(st, qorder + 2)
        return 0
    if code == LAW_THERMAL_IMB:
        t[0] = _invcdf_t(_uniform(st), nbar1, nbar2, qorder)
        eta[0] = TWO_PI * _uniform(st)
        s[0] = _gamma_int(st, qorder + 2) / (t[0] / nbar1 + (1.0 - t[0]) / nbar2)
        return 0
    raise ValueError(f"unknown geometry law code {code}")


cdef long _sample_point(int basis_code, int ell, double t, double eta, u64* st,
                        double* x, double* y) except -1:
    cdef double r, a, env, th, v, amp, c, s_, q, u, m, om, base, cross
    cdef long trial
    cdef int k, inner
    if basis_code == 0:     # vortex
        r = sqrt(_gamma_int(st, ell + 1))
        a = 2.0 * sqrt(t * (1.0 - t))
        env = 1.0 + a
        for trial in range(1, REJECTION_CAP + 1):
            th = TWO_PI * _uniform(st)
            v = _uniform(st)
            if v * env <= 1.0 + a * cos(2.0 * ell * (th + eta)):
                x[0] = r * cos(th)
                y[0] = r * sin(th)
                return trial
        raise SamplingStalled("vortex angle rejection exceeded cap")

    if basis_code == 1:     # dipole
        amp = 2.0 * sqrt(t * (1.0 - t)) * cos(eta)
        for trial in range(1, REJECTION_CAP + 1):
            u = _gamma_int(st, 2)
            th = TWO_PI * _uniform(st)
            v = _uniform(st)
            c = cos(th)
            s_ = sin(th)
            q = t * c * c + (1.0 - t) * s_ * s_ + amp * c * s_
            if v <= q:
                r = sqrt(u)
                x[0] = r * c
                y[0] = r * s_
                return trial
        raise SamplingStalled("dipole rejection exceeded cap")

    if basis_code == 2:     # mixedlg
        amp = 2.0 * sqrt(t * (1.0 - t))
        for trial in range(1, REJECTION_CAP + 1):
            if _uniform(st) < t:
                u = _gamma_int(st, 2)
            else:
                inner = 0
                while inner < REJECTION_CAP:
                    m = _uniform(st)
                    k = 1 if m < 0.2 else (2 if m < 0.6 else 3)
                    u = _gamma_int(st, k)
                    v = _uniform(st)
                    om = 1.0 - u
                    if v * (1.0 + u) * (1.0 + u) <= om * om:
                        break
                    inner += 1
                else:
                    raise SamplingStalled("mixedlg radial rejection exceeded cap")
            th = TWO_PI * _uniform(st)
            v = _uniform(st)
            om = 1.0 - u
            base = t * u + (1.0 - t) * om * om
            cross = amp * sqrt(u) * om * cos(th + eta)
            if v * 2.0 * base <= base + cross:
                r = sqrt(u)
                x[0] = r * cos(th)
                y[0] = r * sin(th)
                return trial
        raise SamplingStalled("mixedlg rejection exceeded cap")

    raise ValueError(f"unknown basis code {basis_code}")


def uniform_stream(seed, frame_id, n):
    """First n uniforms of one frame stream (diagnostic / identity checks)."""
    out = np.empty(int(n))
    cdef double[::1] o = out
    cdef u64 st = _frame_state(<u64>(int(seed) & 0xFFFFFFFFFFFFFFFF),
                               <u64>(int(frame_id) & 0xFFFFFFFFFFFFFFFF))
    cdef Py_ssize_t i
    for i in range(o.shape[0]):
        o[i] = _uniform(&st)
    return out


def sample_classical_batch(seed, frame_start, n_frames, law, basis_code, ell,
                           n_points, poisson_mult):
    """Compiled twin of _kernels_py.sample_classical_batch (same contract)."""
    cdef int code = law[0]
    cdef double t0 = law[1], eta0 = law[2], s0 = law[3]
    cdef double nbar1 = law[4], nbar2 = law[5]
    cdef int qorder = law[6]
    cdef int bcode = basis_code, l = ell, npts = n_points
    cdef bint pois = bool(poisson_mult)
    cdef u64 seed64 = <u64>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef u64 start64 = <u64>(int(frame_start) & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t nf = n_frames

    t_arr = np.empty(nf)
    eta_arr = np.empty(nf)
    s_arr = np.empty(nf)
    counts = np.empty(nf, dtype=np.int64)
    cdef double[::1] tv = t_arr, ev = eta_arr, sv = s_arr
    cdef long long[::1] cv = counts

    cdef Py_ssize_t cap = nf * (8 if pois else npts) + 16
    pts_arr = np.empty((cap, 2))
    cdef double[:, ::1] pv = pts_arr

    cdef u64 st
    cdef double t, eta, s, x, y
    cdef long m, j, trials
    cdef long long trials_total = 0, accepts_total = 0
    cdef Py_ssize_t i, total = 0, newcap

    for i in range(nf):
        st = _frame_state(seed64, start64 + <u64>i)
        _sample_geometry(&st, code, t0, eta0, s0, nbar1, nbar2, qorder,
                         &t, &eta, &s)
        tv[i] = t
        ev[i] = eta
        sv[i] = s
        m = _poisson(&st, s) if pois else npts
        cv[i] = m
        if total + m > cap:
            newcap = cap * 2
            if newcap < total + m:
                newcap = total + m + 16
            new_arr = np.empty((newcap, 2))
            new_arr[:total] = pts_arr[:total]
            pts_arr = new_arr
            pv = pts_arr
            cap = newcap
        for j in range(m):
            trials = _sample_point(bcode, l, t, eta, &st, &x, &y)
            pv[total, 0] = x
            pv[total, 1] = y
            total += 1
            trials_total += trials
            accepts_total += 1
    return (t_arr, eta_arr, s_arr, counts, pts_arr[:total].copy(),
            trials_total, accepts_total)


def sample_fock_batch(seed, frame_start, n_frames, ell, q, ctab):
    """Compiled twin of _kernels_py.sample_fock_batch (same contract)."""
    ctab_c = np.ascontiguousarray(np.asarray(ctab, dtype=float))
    cdef double[:, ::1] rows = ctab_c
    cdef int l = ell, qq = q
    cdef u64 seed64 = <u64>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef u64 start64 = <u64>(int(frame_start) & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t nf = n_frames

    points = np.empty((nf * qq, 2))
    cdef double[:, ::1] pv = points
    ekr_arr = np.zeros(qq + 1)
    eki_arr = np.zeros(qq + 1)
    cdef double[::1] ek_re = ekr_arr, ek_im = eki_arr

    cdef u64 st
    cdef long long trials_total = 0
    cdef double min_margin = 1.0
    cdef Py_ssize_t i, row0
    cdef int j, k
    cdef long trial
    cdef double r, a_coef, g_re, g_im, c, kr, ki, mr, mi
    cdef double b_coef, c_coef, amp, margin, env, th, v, val
    cdef double zr, zi, er, ei, peak, ar, ai, inv
    cdef bint accepted

    for i in range(nf):
        st = _frame_state(seed64, start64 + <u64>i)
        for k in range(qq + 1):
            ek_re[k] = 0.0
            ek_im[k] = 0.0
        ek_re[0] = 1.0
        row0 = i * qq
        for j in range(qq):
            r = sqrt(_gamma_int(&st, l + 1))
            a_coef = 0.0
            g_re = 0.0
            g_im = 0.0
            for k in range(j + 2):
                c = rows[j + 1, k]
                if c == 0.0:
                    continue
                kr = ek_re[k] if k <= j else 0.0
                ki = ek_im[k] if k <= j else 0.0
                mr = ek_re[k - 1] if k >= 1 else 0.0
                mi = ek_im[k - 1] if k >= 1 else 0.0
                a_coef += c * ((kr * kr + ki * ki) + (mr * mr + mi * mi))
                g_re += c * (mr * kr + mi * ki)
                g_im += c * (mi * kr - mr * ki)
            b_coef = 2.0 * g_re
            c_coef = -2.0 * g_im
            amp = sqrt(b_coef * b_coef + c_coef * c_coef)
            margin = (a_coef - amp) / a_coef
            if margin < min_margin:
                min_margin = margin
            env = a_coef + amp
            th = 0.0
            accepted = False
            for trial in range(1, REJECTION_CAP + 1):
                th = TWO_PI * _uniform(&st)
                v = _uniform(&st)
                val = a_coef + b_coef * cos(2.0 * l * th) \
                    + c_coef * sin(2.0 * l * th)
                if v * env <= val:
                    accepted = True
                    break
            if not accepted:
                raise SamplingStalled("sequential angle rejection exceeded cap")
            trials_total += trial
            zr = cos(2.0 * l * th)
            zi = sin(2.0 * l * th)
            for k in range(j + 1, 0, -1):
                er = ek_re[k - 1]
                ei = ek_im[k - 1]
                ek_re[k] = ek_re[k] + (zr * er - zi * ei)
                ek_im[k] = ek_im[k] + (zr * ei + zi * er)
            peak = 0.0
            for k in range(j + 2):
                ar = fabs(ek_re[k])
                ai = fabs(ek_im[k])
                if ar > peak:
                    peak = ar
                if ai > peak:
                    peak = ai
            if peak > 1e100:
                inv = 1.0 / peak
                for k in range(j + 2):
                    ek_re[k] *= inv
                    ek_im[k] *= inv
            pv[row0 + j, 0] = r * cos(th)
            pv[row0 + j, 1] = r * sin(th)
    return points, trials_total, <long long>(nf * qq), min_margin
