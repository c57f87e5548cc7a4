"""Recursive-descent parser for textual STL specifications.

Grammar (whitespace insignificant)::

    formula   := or_f
    or_f      := and_f ("or" and_f)*
    and_f     := until_f ("and" until_f)*
    until_f   := unary ("U" interval? until_f)?          # right-associative
    unary     := "true" | "not" unary
               | ("F" | "G") interval? unary
               | comparison
               | "(" formula ")"
    comparison:= expr (">" | ">=") expr                  # lhs - rhs > 0
    interval  := "[" number "," (number | "inf") "]"
    expr      := term (("+" | "-") term)*
    term      := factor (("*" | "/") factor)*
    factor    := "-" factor | number | name | fn "(" expr ("," expr)* ")" | "(" expr ")"

A parenthesised group is tried as a comparison first, so both
``F (1 - ttc > 0)`` and ``F (1 - ttc) > 0`` denote the same formula.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .formula import (
    FUNCTIONS,
    Always,
    And,
    BinOp,
    Call,
    Const,
    Eventually,
    Neg,
    Not,
    Or,
    Predicate,
    Signal,
    StlError,
    TrueF,
    Until,
)

KEYWORDS = {"true", "not", "and", "or", "U", "F", "G"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>>=|≥|[()\[\],+\-−*/>])
    """,
    re.VERBOSE,
)

_CANONICAL = {"−": "-", "≥": ">="}


class StlSyntaxError(StlError):
    def __init__(self, message, line, column):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise StlSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            chunk = m.group()
            newlines = chunk.count("\n")
            if newlines:
                line += newlines
                line_start = pos + chunk.rindex("\n") + 1
        else:
            tok = _CANONICAL.get(m.group(), m.group())
            tokens.append(_Token(kind, tok, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return StlSyntaxError(message, tok.line, tok.column)

    def at(self, text):
        return self.tok.text == text and self.tok.kind in ("op", "name")

    def expect(self, text):
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    # formulas

    def formula(self):
        left = self.and_f()
        while self.at("or"):
            self.i += 1
            left = Or(left, self.and_f())
        return left

    def and_f(self):
        left = self.until_f()
        while self.at("and"):
            self.i += 1
            left = And(left, self.until_f())
        return left

    def until_f(self):
        left = self.unary()
        if self.at("U"):
            self.i += 1
            a, b = self.interval() if self.at("[") else (0.0, math.inf)
            return Until(left, self.until_f(), a, b)
        return left

    def unary(self):
        tok = self.tok
        if self.at("true"):
            self.i += 1
            return TrueF()
        if self.at("not"):
            self.i += 1
            return Not(self.unary())
        if self.at("F") or self.at("G"):
            self.i += 1
            a, b = self.interval() if self.at("[") else (0.0, math.inf)
            arg = self.unary()
            return Eventually(arg, a, b) if tok.text == "F" else Always(arg, a, b)
        start = self.i
        try:
            return self.comparison()
        except StlSyntaxError as exc:
            if not self.at_index(start, "("):
                raise
            first_error = exc
        self.i = start + 1
        try:
            inner = self.formula()
            self.expect(")")
        except StlSyntaxError as second_error:
            # report whichever reading got further into the input
            key = lambda e: (e.line, e.column)  # noqa: E731
            raise max(first_error, second_error, key=key) from None
        return inner

    def at_index(self, index, text):
        return self.tokens[index].text == text and self.tokens[index].kind == "op"

    def comparison(self):
        lhs = self.expr()
        if not (self.at(">") or self.at(">=")):
            found = self.tok.text or "end of input"
            raise self.error(f"expected comparison '>' or '>=', found {found!r}")
        strict = self.tok.text == ">"
        self.i += 1
        rhs = self.expr()
        if isinstance(rhs, Const) and rhs.value == 0:
            return Predicate(lhs, strict)
        return Predicate(BinOp("-", lhs, rhs), strict)

    def interval(self):
        open_tok = self.expect("[")
        a = self.number()
        self.expect(",")
        if self.tok.kind == "name" and self.tok.text == "inf":
            self.i += 1
            b = math.inf
        else:
            b = self.number()
        self.expect("]")
        if a > b:
            raise self.error(f"malformed interval [{a}, {b}]: lower bound exceeds upper", open_tok)
        return a, b

    def number(self):
        tok = self.tok
        if tok.kind != "number":
            raise self.error(f"expected a number, found {tok.text or 'end of input'!r}")
        self.i += 1
        return float(tok.text)

    # arithmetic

    def expr(self):
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.factor()
        while self.at("*") or self.at("/"):
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.factor())
        return left

    def factor(self):
        tok = self.tok
        if self.at("-"):
            self.i += 1
            return Neg(self.factor())
        if tok.kind == "number":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "name":
            if tok.text in KEYWORDS:
                raise self.error(f"keyword {tok.text!r} cannot appear in an arithmetic expression")
            self.i += 1
            if self.at("("):
                return self.call(tok)
            return Signal(tok.text)
        if self.at("("):
            self.i += 1
            inner = self.expr()
            self.expect(")")
            return inner
        raise self.error(f"unexpected {tok.text or 'end of input'!r} in expression")

    def call(self, name_tok):
        if name_tok.text not in FUNCTIONS:
            raise self.error(f"unknown function {name_tok.text!r}", name_tok)
        min_args, max_args = FUNCTIONS[name_tok.text]
        self.expect("(")
        args = [self.expr()]
        while self.at(","):
            self.i += 1
            args.append(self.expr())
        self.expect(")")
        if len(args) < min_args or (max_args is not None and len(args) > max_args):
            raise self.error(f"wrong number of arguments to {name_tok.text!r}", name_tok)
        return Call(name_tok.text, tuple(args))


def parse_formula(text: str):
    """Parse an STL specification string into a formula AST."""
    parser = _Parser(text)
    phi = parser.formula()
    if parser.tok.kind != "eof":
        raise parser.error(f"unexpected trailing input {parser.tok.text!r}")
    return phi
