"""Build the optional Cython kernel; the package falls back to numpy without it."""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "finsler_lab.jets._ckernels",
                ["src/finsler_lab/jets/_ckernels.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
