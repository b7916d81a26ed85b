"""Build script: compiles the optional Cython integrator kernel.

The package is fully functional without the extension (a pure-Python kernel
with identical semantics is selected at import time), so any failure here is
deliberately non-fatal: we fall back to a pure-Python install.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "blowprof._kernel",
                sources=["src/blowprof/_kernel.pyx"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - exercised only on broken toolchains
    print(f"warning: building without compiled kernel ({exc})")

setup(ext_modules=ext_modules)
