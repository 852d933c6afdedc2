"""Build script for the compiled LSTM cell kernels.

The extension is optional: when Cython (or a C compiler) is unavailable the
package installs without it and falls back to the pure-numpy kernels at
import time.
"""

import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None and os.path.exists("src/seq2tree/kernels/_core.pyx"):
    import numpy

    ext_modules = cythonize(
        [
            Extension(
                "seq2tree.kernels._core",
                ["src/seq2tree/kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
