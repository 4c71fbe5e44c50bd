"""Build the optional compiled kernels.

Falls back to a pure-Python install when Cython or a compiler is missing.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("blab._accel", ["src/blab/_accel.pyx"],
                   include_dirs=[numpy.get_include()],
                   extra_compile_args=["-O2", "-ffp-contract=off"],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
