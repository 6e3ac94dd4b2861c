"""Concrete syntax: lexer and recursive-descent parser.

Surface syntax follows the paper-style listings::

    def distanceToWithObs(source, obstacle) {
      if (obstacle) { infinity } { distanceTo(source) }
    }
    // main expression is the trailing expression of the file
    distanceToWithObs(sns_source(), sns_obstacle())

Operator precedence (loosest to tightest): ``||``, ``&&``, comparisons
(``< <= = >= >``, non associative), ``+ -``, ``* /``, unary minus.
Comments run from ``//`` to end of line.
"""

from __future__ import annotations

import math
from typing import List, Optional, Tuple

from .ast import Call, Expr, FunctionDecl, If, Let, Lit, Nbr, Program, Rep, Var
from .errors import FcSyntaxError, MissingMain, UnknownConstruct

KEYWORDS = {"def", "rep", "nbr", "if", "let", "in", "true", "false", "infinity"}

_PUNCT = ["=>", "||", "&&", "<=", ">=", "<", ">", "=", "+", "-", "*", "/",
          "(", ")", "{", "}", ","]


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind      # 'num' | 'ident' | 'punct' | 'eof'
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.kind}:{self.text!r}"


def _lex(source: str) -> List[_Token]:
    toks = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source[i:i + 3] in ("1st", "2nd", "3rd") and not (
                i + 3 < n and (source[i + 3].isalnum() or source[i + 3] in "_'")):
            toks.append(_Token("ident", source[i:i + 3], line, col))
            i += 3
            col += 3
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise FcSyntaxError(f"bad number literal {text!r}", line, col)
            toks.append(_Token("num", text, line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_'"):
                j += 1
            word = source[i:j]
            # the aggregation builtins minHood+ / maxHood+ end in a plus
            if word in ("minHood", "maxHood") and j < n and source[j] == "+":
                j += 1
                word += "+"
            toks.append(_Token("ident", word, line, col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if source.startswith(p, i):
                toks.append(_Token("punct", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise FcSyntaxError(f"unexpected character {c!r}", line, col)
    toks.append(_Token("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, tokens: List[_Token]):
        self.toks = tokens
        self.pos = 0

    # -- token helpers -----------------------------------------------------
    def peek(self) -> _Token:
        return self.toks[self.pos]

    def next(self) -> _Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def at_punct(self, text) -> bool:
        t = self.peek()
        return t.kind == "punct" and t.text == text

    def at_kw(self, word) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.text == word

    def expect(self, text) -> _Token:
        t = self.next()
        if t.kind == "eof" or t.text != text:
            raise FcSyntaxError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def expect_ident(self) -> _Token:
        t = self.next()
        if t.kind != "ident":
            raise FcSyntaxError(f"expected identifier, found {t.text!r}", t.line, t.col)
        if t.text in KEYWORDS:
            raise UnknownConstruct(
                f"reserved word {t.text!r} used as identifier", t.line, t.col)
        return t

    # -- grammar -----------------------------------------------------------
    def program(self) -> Program:
        functions = []
        while self.at_kw("def"):
            functions.append(self.function_decl())
        main = None
        if self.peek().kind != "eof":
            main = self.expr()
        t = self.peek()
        if t.kind != "eof":
            raise FcSyntaxError(f"trailing input {t.text!r}", t.line, t.col)
        return Program(tuple(functions), main)

    def function_decl(self) -> FunctionDecl:
        self.expect("def")
        name = self.expect_ident().text
        self.expect("(")
        params = self.ident_list(")")
        fn_params: Tuple[str, ...] = ()
        if self.at_punct("("):
            self.next()
            fn_params = self.ident_list(")")
        self.expect("{")
        body = self.expr()
        self.expect("}")
        both = list(params) + list(fn_params)
        if len(set(both)) != len(both):
            raise FcSyntaxError(f"duplicate parameter in def {name}")
        return FunctionDecl(name, params, fn_params, body)

    def ident_list(self, closer) -> Tuple[str, ...]:
        names = []
        if not self.at_punct(closer):
            names.append(self.expect_ident().text)
            while self.at_punct(","):
                self.next()
                names.append(self.expect_ident().text)
        self.expect(closer)
        return tuple(names)

    def fn_arg_list(self, closer) -> Tuple[str, ...]:
        # functional arguments may be operators: foldHood(f, 0)(+)
        names = []
        while not self.at_punct(closer):
            t = self.peek()
            if t.kind == "punct" and t.text in self._PREFIX_OPS:
                self.next()
                names.append(t.text)
            else:
                names.append(self.expect_ident().text)
            if self.at_punct(","):
                self.next()
        self.expect(closer)
        return tuple(names)

    def expr(self) -> Expr:
        return self.or_expr()

    def or_expr(self) -> Expr:
        e = self.and_expr()
        while self.at_punct("||"):
            self.next()
            e = Call("||", (e, self.and_expr()))
        return e

    def and_expr(self) -> Expr:
        e = self.cmp_expr()
        while self.at_punct("&&"):
            self.next()
            e = Call("&&", (e, self.cmp_expr()))
        return e

    def cmp_expr(self) -> Expr:
        e = self.add_expr()
        t = self.peek()
        if t.kind == "punct" and t.text in ("<", "<=", "=", ">=", ">"):
            self.next()
            return Call(t.text, (e, self.add_expr()))
        return e

    def add_expr(self) -> Expr:
        e = self.mul_expr()
        while True:
            t = self.peek()
            if t.kind == "punct" and t.text in ("+", "-"):
                self.next()
                e = Call(t.text, (e, self.mul_expr()))
            else:
                return e

    def mul_expr(self) -> Expr:
        e = self.unary()
        while True:
            t = self.peek()
            if t.kind == "punct" and t.text in ("*", "/"):
                self.next()
                e = Call(t.text, (e, self.unary()))
            else:
                return e

    _PREFIX_OPS = ("+", "-", "*", "/", "<", "<=", "=", ">=", ">", "&&", "||")

    def unary(self) -> Expr:
        if self.at_punct("-"):
            # distinguish unary minus from the paper's prefix form  -(a, b)
            self.next()
            if self.at_punct("("):
                self.next()
                args = self.expr_list(")")
                if len(args) == 2:
                    return Call("-", tuple(args))
                if len(args) == 1:
                    e = args[0]
                    if isinstance(e, Lit) and isinstance(e.value, float):
                        return Lit(-e.value)
                    return Call("neg", (e,))
                raise FcSyntaxError("-(...) takes one or two arguments")
            e = self.unary()
            if isinstance(e, Lit) and isinstance(e.value, float):
                return Lit(-e.value)
            return Call("neg", (e,))
        return self.primary()

    def primary(self) -> Expr:
        t = self.peek()
        if t.kind == "num":
            self.next()
            return Lit(float(t.text))
        if t.kind == "punct" and t.text in self._PREFIX_OPS:
            # prefix form of a binary operator: +(x, 1)
            self.next()
            self.expect("(")
            args = self.expr_list(")")
            if len(args) != 2:
                raise FcSyntaxError(f"{t.text}(...) takes two arguments",
                                    t.line, t.col)
            return Call(t.text, tuple(args))
        if t.kind == "punct" and t.text == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind != "ident":
            raise FcSyntaxError(f"expected expression, found {t.text!r}", t.line, t.col)
        word = t.text
        if word == "true":
            self.next()
            return Lit(True)
        if word == "false":
            self.next()
            return Lit(False)
        if word == "infinity":
            self.next()
            return Lit(math.inf)
        if word == "let":
            self.next()
            name = self.expect_ident().text
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            body = self.expr()
            return Let(name, bound, body)
        if word == "if":
            self.next()
            self.expect("(")
            guard = self.expr()
            self.expect(")")
            self.expect("{")
            then = self.expr()
            self.expect("}")
            self.expect("{")
            orelse = self.expr()
            self.expect("}")
            return If(guard, then, orelse)
        if word == "nbr":
            self.next()
            self.expect("{")
            body = self.expr()
            self.expect("}")
            return Nbr(body)
        if word == "rep":
            self.next()
            self.expect("(")
            init = self.expr()
            self.expect(")")
            self.expect("{")
            if not self.at_punct("("):
                u = self.peek()
                raise UnknownConstruct(
                    "rep requires the lambda form (x) => e", u.line, u.col)
            self.next()
            var = self.expect_ident().text
            self.expect(")")
            self.expect("=>")
            update = self.expr()
            self.expect("}")
            return Rep(init, var, update)
        if word in ("def", "in"):
            raise UnknownConstruct(
                f"reserved word {word!r} cannot start an expression", t.line, t.col)
        # identifier: variable or call
        self.next()
        if self.at_punct("("):
            self.next()
            args = self.expr_list(")")
            fn_args: Tuple[str, ...] = ()
            if self.at_punct("("):
                self.next()
                fn_args = self.fn_arg_list(")")
            return Call(word, tuple(args), fn_args)
        return Var(word)

    def expr_list(self, closer) -> List[Expr]:
        out = []
        if not self.at_punct(closer):
            out.append(self.expr())
            while self.at_punct(","):
                self.next()
                out.append(self.expr())
        self.expect(closer)
        return out


def parse(source: str, require_main: bool = True) -> Program:
    """Parse a source file into a :class:`Program`.

    With ``require_main`` (the default, matching the CLI) a file holding only
    function declarations raises :class:`MissingMain`.
    """
    p = _Parser(_lex(source)).program()
    if require_main and p.main is None:
        raise MissingMain("program has no main expression")
    return p


def parse_expr(source: str) -> Expr:
    """Parse a single expression (test helper and REPL-ish entry point)."""
    parser = _Parser(_lex(source))
    e = parser.expr()
    t = parser.peek()
    if t.kind != "eof":
        raise FcSyntaxError(f"trailing input {t.text!r}", t.line, t.col)
    return e
