"""Build script for the compiled simulation kernels.

The package is fully functional without the extension (a pure-Python
backend is selected at import time); building it is strongly recommended
for ensemble-scale runs.  Floating-point contraction is disabled so the
compiled kernels produce bit-identical chains to the Python backend.
"""

import numpy as np
from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "urnflow._kernels",
        ["src/urnflow/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
)
