"""Build the optional Cython kernel extension.

If Cython or a C compiler is unavailable the package still installs; the
pure-numpy kernels in ``modrec._kernels_py`` are used instead.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("MODREC_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "modrec._kernels",
                    ["src/modrec/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
