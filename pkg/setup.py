import os

import numpy
from setuptools import Extension, setup

if os.environ.get("MPSKMAX_SKIP_EXT"):
    # pure-python install; the package falls back to the numpy backend
    setup()
else:
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "mpskmax._kernel",
            ["src/mpskmax/_kernel.pyx"],
            include_dirs=[numpy.get_include()],
            extra_compile_args=["-O3"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    setup(
        ext_modules=cythonize(
            extensions,
            compiler_directives={"language_level": "3", "boundscheck": False,
                                 "wraparound": False, "cdivision": True},
        )
    )
