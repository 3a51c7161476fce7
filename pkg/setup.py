"""Optional Cython build of the hot kernels.

The package works without the extension; ``mlfrac._backend`` falls back to
the numpy implementation when ``mlfrac._kernels`` cannot be imported.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("MLFRAC_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "mlfrac._kernels",
                    ["src/mlfrac/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
