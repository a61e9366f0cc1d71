"""Build script: compiles the optional Cython kernel core.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a failed compile downgrades to a warning
instead of aborting the install.
"""

import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("ASYNCDUAL_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "asyncdual._kernels_cy",
                    ["src/asyncdual/_kernels_cy.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except Exception as exc:  # pragma: no cover - depends on toolchain
        sys.stderr.write(
            "asyncdual: Cython extension unavailable (%s); "
            "installing with the pure-numpy kernels only\n" % exc
        )
        ext_modules = []

setup(ext_modules=ext_modules)
