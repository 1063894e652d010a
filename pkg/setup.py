import os

from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the numpy
# implementations when the extension is absent. Set VIZPIPE_NO_EXT=1 to
# skip the build entirely (e.g. on machines without a C compiler).
ext_modules = []
if os.environ.get("VIZPIPE_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "vizpipe.cnn._convext",
                    ["src/vizpipe/cnn/_convext.pyx"],
                    # -ffp-contract=off: no FMA fusion, keeps rounding
                    # behaviour aligned with the numpy fallback
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
