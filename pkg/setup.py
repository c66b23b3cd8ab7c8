from setuptools import Extension, setup
from Cython.Build import cythonize

# Compiled sampling core.  The package falls back to bosonsim._kernels_py at
# import time if this extension is absent, so a failed build is not fatal.
extensions = [
    Extension(
        "bosonsim._kernels",
        ["src/bosonsim/_kernels.pyx"],
        # -ffp-contract=off: no fused multiply-add; -fno-builtin-sin/cos: stop
        # gcc from pairing adjacent sin/cos calls into glibc sincos (1-ulp off
        # for some arguments).  Both keep the compiled kernels bit-identical
        # to the interpreted reference.
        extra_compile_args=[
            "-O3", "-ffp-contract=off", "-fno-builtin-sin", "-fno-builtin-cos",
        ],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
