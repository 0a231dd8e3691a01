from setuptools import Extension, setup
from Cython.Build import cythonize

# The compiled kernel must match the pure-Python kernel bit for bit, so the
# build keeps strict IEEE double semantics: no fast-math, no FMA contraction.
extensions = [
    Extension(
        "jbfinite._kernel",
        ["src/jbfinite/_kernel.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
