import os

from setuptools import Extension, setup

extensions = []
if os.environ.get("FLATBEAM_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        extensions = cythonize(
            [
                Extension(
                    "flatbeam._kernels._newmark",
                    ["src/flatbeam/_kernels/_newmark.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # no Cython: the pure-Python kernel is used
        extensions = []

setup(ext_modules=extensions)
