"""Canonical text rendering and parsing of values and value trees.

The notation follows the paper: trees print as ``v⟨θ̄⟩`` (leaves as the bare
value), neighbouring fields as ``(δ0↦1, δ1↦2)``.  The renderer is canonical
(fields sorted by device id, integral floats without a decimal point) so
golden tests and CSV exports are byte-stable.
"""

from __future__ import annotations

import math

from ..ast import Constructor
from ..errors import FcSyntaxError


def render_number(x) -> str:
    if math.isinf(x):
        return "infinity" if x > 0 else "-infinity"
    if math.isnan(x):
        return "nan"
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def render_value(v) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, dict):
        inner = ", ".join(f"δ{k}↦{render_value(v[k])}" for k in sorted(v))
        return f"({inner})"
    if isinstance(v, tuple):
        return "(" + ", ".join(render_value(x) for x in v) + ")"
    if isinstance(v, (int, float)):
        return render_number(v)
    if isinstance(v, Constructor):
        if not v.args:
            return v.name
        return f"{v.name}({', '.join(render_value(a) for a in v.args)})"
    raise ValueError(f"unrenderable value {v!r}")


def render_tree(tree) -> str:
    root, children = tree
    if not children:
        return render_value(root)
    return f"{render_value(root)}⟨{', '.join(render_tree(c) for c in children)}⟩"


class _TreeParser:
    """Parser for the canonical tree/value notation (env files, tests)."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg):
        raise FcSyntaxError(f"{msg} at offset {self.pos} in {self.text!r}")

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def at(self, s: str) -> bool:
        return self.text.startswith(s, self.pos)

    def eat(self, s: str):
        if not self.at(s):
            self.error(f"expected {s!r}")
        self.pos += len(s)

    def parse_tree(self):
        root = self.parse_value()
        self.skip_ws()
        children = ()
        if self.at("⟨"):
            self.eat("⟨")
            kids = [self.parse_tree()]
            self.skip_ws()
            while self.at(","):
                self.eat(",")
                self.skip_ws()
                kids.append(self.parse_tree())
                self.skip_ws()
            self.eat("⟩")
            children = tuple(kids)
        return (root, children)

    def parse_value(self):
        self.skip_ws()
        if self.at("("):
            return self.parse_paren()
        for word, val in (("true", True), ("false", False),
                          ("-infinity", -math.inf), ("infinity", math.inf),
                          ("nan", math.nan)):
            if self.at(word):
                self.pos += len(word)
                return val
        return self.parse_number()

    def parse_number(self):
        start = self.pos
        if self.at("-"):
            self.pos += 1
        while (self.pos < len(self.text)
               and (self.text[self.pos].isdigit()
                    or self.text[self.pos] in ".eE+-")):
            if self.text[self.pos] in "+-" and self.text[self.pos - 1] not in "eE":
                break
            self.pos += 1
        if self.pos == start:
            self.error("expected a value")
        try:
            return float(self.text[start:self.pos])
        except ValueError:
            self.error(f"bad number {self.text[start:self.pos]!r}")

    def parse_paren(self):
        self.eat("(")
        self.skip_ws()
        if self.at(")"):  # empty neighbouring field
            self.eat(")")
            return {}
        if self.at("δ"):
            entries = {}
            while True:
                self.eat("δ")
                did = self.parse_int()
                self.skip_ws()
                self.eat("↦")
                entries[did] = self.parse_value()
                self.skip_ws()
                if self.at(","):
                    self.eat(",")
                    self.skip_ws()
                    continue
                break
            self.eat(")")
            return entries
        items = [self.parse_value()]
        self.skip_ws()
        while self.at(","):
            self.eat(",")
            items.append(self.parse_value())
            self.skip_ws()
        self.eat(")")
        return tuple(items)

    def parse_int(self) -> int:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            self.error("expected a device id")
        return int(self.text[start:self.pos])


def parse_tree(text: str):
    p = _TreeParser(text.strip())
    t = p.parse_tree()
    p.skip_ws()
    if p.pos != len(p.text):
        p.error("trailing input")
    return t


def parse_value(text: str):
    p = _TreeParser(text.strip())
    v = p.parse_value()
    p.skip_ws()
    if p.pos != len(p.text):
        p.error("trailing input")
    return v


def indented_tree(tree, indent: int = 0) -> str:
    """Multi-line indented rendering (trace dump format)."""
    root, children = tree
    line = "  " * indent + render_value(root)
    if not children:
        return line
    return "\n".join([line] + [indented_tree(c, indent + 1) for c in children])
