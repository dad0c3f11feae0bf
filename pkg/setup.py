import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("possvm._smo", ["src/possvm/_smo.pyx"],
                   include_dirs=[np.get_include()],
                   extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError as exc:
    print(f"building without the compiled SMO core ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
