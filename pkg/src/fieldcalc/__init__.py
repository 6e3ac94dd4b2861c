"""fieldcalc: a field-calculus toolchain.

Parser and macro expander for the calculus, a per-device big-step evaluator,
a whole-network small-step simulator, a static checker for the
self-stabilising fragment, a catalog of resilient building blocks (G/C/T and
alternates) and an experiment harness.
"""

__version__ = "0.1.0"

from .ast import Program, FunctionDecl  # noqa: F401
from .parser import parse, parse_expr  # noqa: F401
from .pretty import pp_expr, pp_program  # noqa: F401
from .expand import expand_functional_params  # noqa: F401
from .kinds import kind_check  # noqa: F401
