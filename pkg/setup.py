"""Build script for the optional compiled kernels.

The package works without the extension (a NumPy fallback is selected at
import time), so the extension is marked optional: a missing compiler
degrades the install instead of failing it.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "bsac._kernels",
        ["src/bsac/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
