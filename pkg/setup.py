"""Builds the optional compiled series kernels.

Without Cython or a compiler the package still installs and uses the numpy
fallback in ``aeroflat._kernels_py``.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("AEROFLAT_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "aeroflat._kernels",
                    ["src/aeroflat/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
