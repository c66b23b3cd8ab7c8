"""Throughput comparison: compiled sampling core vs pure-Python fallback.

Run:  python benchmarks/bench_kernels.py [--frames N]
Both backends consume identical random streams, so the outputs being compared
are bit-identical; only the speed differs.
"""

import argparse
import time

import numpy as np

from bosonsim import _kernels_py as pure
from bosonsim.states import Fock, correlator_rows

try:
    from bosonsim import _kernels as compiled
except ImportError:
    compiled = None


def _time(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return time.perf_counter() - t0, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--frames", type=int, default=20000,
                    help="classical frames per backend (default 20000)")
    args = ap.parse_args()

    n = args.frames
    law = (pure.LAW_THERMAL_BAL, 0.0, 0.0, 0.0, 1.0, 1.0, 0)
    rows = [("case", "pure [us/frame]", "compiled [us/frame]", "speedup")]

    cases = [
        ("thermal / vortex l=1, 2 pts", law, pure.BASIS_VORTEX, 1),
        ("thermal / dipole, 2 pts", law, pure.BASIS_DIPOLE, 0),
        ("thermal / mixed LG, 2 pts", law, pure.BASIS_MIXEDLG, 1),
    ]
    for name, lw, bc, ell in cases:
        tp, outp = _time(pure.sample_classical_batch, 1, 0, n, lw, bc, ell, 2, False)
        if compiled is None:
            rows.append((name, f"{tp / n * 1e6:.2f}", "-", "-"))
            continue
        tc, outc = _time(compiled.sample_classical_batch, 1, 0, n, lw, bc, ell, 2, False)
        assert np.array_equal(outp[4], outc[4]), "backends diverged"
        rows.append((name, f"{tp / n * 1e6:.2f}", f"{tc / n * 1e6:.2f}",
                     f"{tp / tc:.0f}x"))

    for n1, n2, q in [(1, 1, 2), (5, 5, 10), (50, 50, 100)]:
        ctab = correlator_rows(Fock(n1, n2), q)
        nf = max(n // (q * q), 10)
        tp, outp = _time(pure.sample_fock_batch, 1, 0, nf, 1, q, ctab)
        name = f"fock({n1},{n2}) sequential, {q} pts"
        if compiled is None:
            rows.append((name, f"{tp / nf * 1e6:.1f}", "-", "-"))
            continue
        tc, outc = _time(compiled.sample_fock_batch, 1, 0, nf, 1, q, ctab)
        assert np.array_equal(outp[0], outc[0]), "backends diverged"
        rows.append((name, f"{tp / nf * 1e6:.1f}", f"{tc / nf * 1e6:.1f}",
                     f"{tp / tc:.0f}x"))

    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    for r in rows:
        print("  ".join(col.ljust(w) for col, w in zip(r, widths)).rstrip())
    if compiled is None:
        print("\ncompiled backend not built; showing pure-Python timings only")


if __name__ == "__main__":
    main()
