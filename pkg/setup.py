"""Build script for the optional Cython iteration kernel.

The extension is optional: if Cython or a C compiler is missing the package
installs without it and ``rvsm.kernels`` falls back to the numpy loop.
"""
import os
import sys

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("RVSM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "rvsm._kernels",
                    ["src/rvsm/_kernels.pyx"],
                    extra_compile_args=["-O3"] if sys.platform != "win32" else ["/O2"],
                    libraries=["m"] if sys.platform != "win32" else [],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except Exception as exc:  # pragma: no cover - build environment dependent
        print(f"rvsm: building without compiled kernels ({exc})", file=sys.stderr)
        ext_modules = []

setup(ext_modules=ext_modules)
