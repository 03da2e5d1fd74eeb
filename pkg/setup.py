import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "atomrod._springs",
                ["src/atomrod/_springs.pyx"],
                include_dirs=[numpy.get_include()],
                # no -ffast-math: the numpy fallback must stay numerically
                # interchangeable with the compiled kernel
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # pure-Python install; atomrod.kernels falls back to the numpy backend
    ext_modules = []

setup(ext_modules=ext_modules)
