"""Build script: compiles the optional CSR kernel extension.

The package works without the extension (a numpy fallback is selected at
import time); building it is strongly recommended for anything beyond toy
sizes.
"""
import numpy as np
from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "deflamg._kernels",
        ["src/deflamg/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
