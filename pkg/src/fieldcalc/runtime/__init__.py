"""Runtime backend selection and the public evaluation API.

The evaluator kernel exists twice: ``_kernel`` (pure Python, always present)
and ``_ckernel`` (the same source compiled by Cython at build time).  The
compiled twin is preferred; set ``FIELDCALC_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from .. import ast as _ast

if os.environ.get("FIELDCALC_PURE") == "1":
    from . import _kernel as kernel
else:
    try:
        from . import _ckernel as kernel  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernel as kernel

from .values import (indented_tree, parse_tree, parse_value, render_number,
                     render_tree, render_value)

SensorSnapshot = kernel.SensorSnapshot
Code = kernel.Code
register_builtin = kernel.register_builtin
lex_cmp = kernel.lex_cmp
values_equal = kernel.values_equal


def backend_name() -> str:
    return kernel.backend_name()


def compile_program(program, main=None) -> Code:
    """Compile an expanded program (optionally overriding main) for evaluation."""
    return kernel.compile_program(program, _ast, main)


def evaluate(self_id, env, sensors, code, rep_seed=None):
    """Big-step evaluation of one firing; returns the value tree.

    ``env`` maps neighbour (and own) device ids to their stored value trees;
    accepts a dict or a list of ``(id, tree)`` pairs.
    """
    if isinstance(env, dict):
        env = list(env.items())
    return kernel.evaluate(self_id, env, sensors, code, rep_seed)


def tree_root(tree):
    return tree[0]


def align(env, selector):
    """Alignment helper π: ``selector`` is a 1-based child index or a branch
    literal (True/False).  Returns the projected environment as a dict."""
    if isinstance(env, dict):
        entries = sorted(env.items())
    else:
        entries = sorted(env)
    if selector is True or selector is False:
        out = kernel._proj_branch(entries, selector)
    else:
        i = int(selector) - 1
        if i < 0:
            return {}
        out = kernel._proj(entries, i)
    return dict(out)


__all__ = [
    "SensorSnapshot", "Code", "backend_name", "compile_program", "evaluate",
    "align", "tree_root", "register_builtin", "lex_cmp", "values_equal",
    "render_tree", "render_value", "render_number", "parse_tree",
    "parse_value", "indented_tree",
]
