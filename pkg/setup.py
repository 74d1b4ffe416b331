"""Build hook for the optional compiled MLP kernels.

The package is fully functional without them: ``dsshare.agent.kernels``
falls back to the numpy implementation when the extension is missing.
Set ``DSSHARE_NO_EXT=1`` to skip compilation.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("DSSHARE_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "dsshare.agent._kernels",
                    ["src/dsshare/agent/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
