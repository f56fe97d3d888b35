from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "mimoprec._kernels",
        ["src/mimoprec/_kernels.pyx"],
        extra_compile_args=["-O3"],
        # a failed compile leaves the numpy fallback in charge
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
