"""Build script: compiles the optional Cython propagation kernel.

If Cython or a C compiler is unavailable the build falls back to a pure
Python wheel; nvlev then selects the SciPy-based propagator at import.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/nvlev/_kernels.pyx",
        language_level="3",
        compiler_directives={"boundscheck": False, "wraparound": False, "cdivision": True},
    )
    include_dirs = [numpy.get_include()]
except ImportError:
    ext_modules = []
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
