import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [Extension("snn._kernel", ["src/snn/_kernel.pyx"], include_dirs=[np.get_include()])]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
