"""Build the optional compiled incidence kernel.

The package works without the extension (a pure-numpy fallback is selected at
import time); building it is what makes the large incidence runs fast.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fractinc._gridcount",
                ["src/fractinc/_gridcount.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off keeps the distance test bit-identical to
                # the numpy fallback (no fused multiply-add on the hot path).
                extra_compile_args=["-O3", "-fopenmp", "-ffp-contract=off"],
                extra_link_args=["-fopenmp"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
