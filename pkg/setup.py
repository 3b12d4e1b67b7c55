"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a failed compile only costs speed.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the Cython kernels, but never fail the install over them."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain, ...
            print(f"WARNING: compiled kernels skipped ({exc}); "
                  "the numpy fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: building {ext.name} failed ({exc}); "
                  "the numpy fallback will be used")


def extension_modules():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"WARNING: {exc}; compiled kernels skipped")
        return []
    ext = Extension(
        "subsevo._kernels._native",
        sources=["src/subsevo/_kernels/_native.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=extension_modules(),
    cmdclass={"build_ext": optional_build_ext},
)
