"""Build the optional Cython kernels; the package works without them."""

import os
import sys

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("GRAPHBLI_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        # fast-math lets gcc vectorise exp through glibc's libmvec; the LAP
        # kernel is built without it so its comparisons stay exact
        linux = sys.platform.startswith("linux")
        vec_flags = ["-ffast-math"] if linux else []
        vec_libs = ["mvec", "m"] if linux else []
        common = dict(include_dirs=[np.get_include()],
                      define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])
        ext_modules = cythonize(
            [Extension("graphbli._kernels._ckernels",
                       ["src/graphbli/_kernels/_ckernels.pyx"],
                       extra_compile_args=["-O3"], **common),
             Extension("graphbli._kernels._csinkhorn",
                       ["src/graphbli/_kernels/_csinkhorn.pyx"],
                       extra_compile_args=["-O3"] + vec_flags, libraries=vec_libs, **common)],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
