"""Build script: compiles the optional speed core.

The package works without the extension (a pure-Python backend is selected
at import time); the build therefore tolerates a missing compiler or a
missing Cython and falls back to a pure wheel.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "martinlab._engine._core",
                sources=["src/martinlab/_engine/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"martin-lab: building without the compiled core ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
