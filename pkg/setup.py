# Build the compiled convolution kernels with:
#
#   python setup.py build_ext --inplace
#
# or simply `pip install -e . --no-build-isolation`.  The package falls
# back to the pure-numpy kernels when the extension is not built.

from setuptools import Extension, setup

import numpy as np

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "netinv._convkernels",
                ["src/netinv/_convkernels.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
