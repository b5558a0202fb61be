import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "horizon_bench._kernels",
        ["src/horizon_bench/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        optional=True,  # without a compiler the numpy fallback is used
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
