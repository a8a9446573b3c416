from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [Extension("crdtkit._codec", ["src/crdtkit/_codec.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # Pure-Python fallback is selected at import time; the wheel still works.
    extensions = []

setup(ext_modules=extensions)
