import os

import numpy as np
from setuptools import Extension, setup

# Set CTETRIS_NO_EXT=1 to install the pure-Python fallback only.
ext_modules = []
if not os.environ.get("CTETRIS_NO_EXT"):
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "ctetris._gs_ext",
            ["src/ctetris/_gs_ext.pyx"],
            include_dirs=[np.get_include()],
            # no -ffast-math: results must match the Python fallback bit for bit
            extra_compile_args=["-O3"],
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
