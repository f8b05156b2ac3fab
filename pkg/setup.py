# Builds the compiled codec kernels. The package still works without the
# extension (a pure-Python fallback is selected at import), so a failed
# cythonize is not fatal for source checkouts; `pip install` builds it.
import numpy as np
from setuptools import setup, Extension
from Cython.Build import cythonize

extensions = [
    Extension(
        "crkit.kernels._fastcodec",
        sources=["src/crkit/kernels/_fastcodec.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
