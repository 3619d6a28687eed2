import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the numpy fallback is used
    cythonize = None

openmp = [] if os.environ.get("WEIBULL_GOF_NO_OPENMP") else ["-fopenmp"]

extensions = []
if cythonize is not None and not os.environ.get("WEIBULL_GOF_PURE"):
    extensions = cythonize(
        [
            Extension(
                "weibull_gof._core",
                ["src/weibull_gof/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"] + openmp,
                extra_link_args=openmp,
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
