"""Build the optional compiled kernels; the package works without them."""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("CYLBUBBLE_NO_EXT", "") not in ("1", "true", "yes"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("cylbubble._ckernels", ["src/cylbubble/_ckernels.pyx"],
                       include_dirs=[numpy.get_include()],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
