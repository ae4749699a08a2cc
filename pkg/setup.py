"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension (a pure-Python
twin of the kernels is selected at import time), so a failed build of
the .pyx module must not fail the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "oscarray._kernels",
                ["src/oscarray/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    sys.stderr.write(f"oscarray: skipping compiled kernels ({exc}); "
                     "the pure-Python fallback will be used\n")

setup(ext_modules=ext_modules)
