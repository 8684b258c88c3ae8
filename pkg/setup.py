from Cython.Build import cythonize
from setuptools import Extension, setup

# No -ffast-math: the compiled kernels must stay bit-identical to the
# pure-Python backend, which requires strict IEEE double semantics.
extensions = [
    Extension(
        "stomp._kernels._core",
        sources=["src/stomp/_kernels/_core.pyx"],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
