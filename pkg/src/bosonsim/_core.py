"""Kernel backend selection.

Prefers the compiled extension (bosonsim._kernels); falls back to the pure
Python reference (bosonsim._kernels_py) when the extension was not built.
Both expose the same batch API and produce bit-identical streams.
"""

import warnings

from . import _kernels_py

# Shared codes live in the reference module.
LAW_FIXED = _kernels_py.LAW_FIXED
LAW_RPCS = _kernels_py.LAW_RPCS
LAW_THERMAL_BAL = _kernels_py.LAW_THERMAL_BAL
LAW_THERMAL_IMB = _kernels_py.LAW_THERMAL_IMB
BASIS_VORTEX = _kernels_py.BASIS_VORTEX
BASIS_DIPOLE = _kernels_py.BASIS_DIPOLE
BASIS_MIXEDLG = _kernels_py.BASIS_MIXEDLG
REJECTION_CAP = _kernels_py.REJECTION_CAP

try:
    from . import _kernels as kernels

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - exercised only on broken installs
    kernels = _kernels_py
    BACKEND = "python"
    warnings.warn(
        "bosonsim compiled kernels unavailable; using the pure-Python fallback "
        "(correct but slow; documented runtime targets assume the compiled core)",
        RuntimeWarning,
        stacklevel=2,
    )

pyref = _kernels_py
