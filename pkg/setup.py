"""Build script: compiles the optional statevector gate kernels.

The package works without the extension (a NumPy fallback is selected at
import time), so any failure here is downgraded to a warning rather than
aborting the install.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "tthpo._statevec",
                ["src/tthpo/_statevec.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - exercised only on broken toolchains
    warnings.warn(
        "could not set up the compiled statevector kernels (%s); "
        "the pure NumPy fallback will be used" % exc
    )

setup(ext_modules=ext_modules)
