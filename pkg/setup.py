import os

from setuptools import Extension, setup

# The compiled loop must produce bit-identical trajectories to the pure-Python
# fallback: no fast-math, no FP contraction (fused multiply-add changes
# rounding), and no builtin sin/cos handling (gcc otherwise merges sin/cos
# pairs into sincos, which rounds differently on some arguments).
EXTRA_COMPILE_ARGS = ["-O3", "-ffp-contract=off", "-fno-fast-math", "-fno-builtin"]

ext_modules = []
if os.environ.get("PSSIM_SKIP_EXT", "") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "pssim._speedups",
                    ["src/pssim/_speedups.pyx"],
                    extra_compile_args=EXTRA_COMPILE_ARGS,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # No Cython available: install pure-Python only, the import-time
        # backend selection falls back to pssim._loop.
        ext_modules = []

setup(ext_modules=ext_modules)
