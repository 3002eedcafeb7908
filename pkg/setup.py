"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (pure numpy fallback is selected
at import time), so a failed compile is downgraded to a warning.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "uvtc._kernels._core",
                ["src/uvtc/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # noqa: BLE001
    print(f"warning: skipping Cython extension build ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
