"""Build script: compiles the evaluator hot kernel with Cython when available.

The pure-Python kernel ``fieldcalc/runtime/_kernel.py`` is the single source
of truth.  At build time it is copied verbatim to ``_ckernel.py`` and that
copy is compiled to an extension module, so the compiled twin can never drift
from the fallback.  If Cython or a C compiler is missing the package still
installs and runs on the pure backend.
"""

import os
import shutil
from pathlib import Path

from setuptools import setup

HERE = Path(__file__).parent.resolve()
os.chdir(HERE)
KERNEL = Path("src") / "fieldcalc" / "runtime" / "_kernel.py"
CKERNEL = Path("src") / "fieldcalc" / "runtime" / "_ckernel.py"

ext_modules = []
try:
    from Cython.Build import cythonize

    shutil.copyfile(KERNEL, CKERNEL)
    ext_modules = cythonize(
        [str(CKERNEL)],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
        },
        quiet=True,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
