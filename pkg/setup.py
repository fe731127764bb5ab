"""Build the optional compiled core.

The Cython extension is optional: if compilation fails the package still
installs and falls back to the numpy implementation at import time.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("MLP_CURSE_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "mlp_curse._core",
                    ["src/mlp_curse/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-fno-fast-math"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
