"""Build script: compiles the optional Cython barrier kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed cythonization only costs speed.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy as np
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "mimopower._barrier_c",
                ["src/mimopower/_barrier_c.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
