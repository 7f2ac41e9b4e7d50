"""Small recursive-descent parser for arithmetic expressions.

The parser is ring-agnostic: it evaluates as it goes, calling ``num`` for
integer literals and ``atom`` for identifiers.  Division is delegated to the
operands, so it works for scalars and for polynomials with constant divisors.
"""
from __future__ import annotations

import re

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\*\*|[-+*/^()]))")


class ParseError(ValueError):
    pass


def tokenize(text: str) -> list[tuple[str, str]]:
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character at {pos} in {text!r}")
        if m.group(1) is not None:
            out.append(("num", m.group(1)))
        elif m.group(2) is not None:
            out.append(("id", m.group(2)))
        else:
            op = m.group(3)
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens, num, atom):
        self.toks = tokens
        self.i = 0
        self.num = num
        self.atom = atom

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            raise ParseError(f"expected {value!r}, got {tok[1]!r}")
        self.i += 1
        return tok

    def expr(self):
        # leading sign binds to the first term
        sign = None
        if self.peek() in (("op", "-"), ("op", "+")):
            sign = self.take()[1]
        val = self.term()
        if sign == "-":
            val = -val
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self):
        val = self.factor()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.factor()
            val = val * rhs if op == "*" else val / rhs
        return val

    def factor(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.factor()
        base = self.primary()
        if self.peek() == ("op", "^"):
            self.take()
            kind, tok = self.take()
            if kind != "num":
                raise ParseError("exponent must be a non-negative integer")
            return base ** int(tok)
        return base

    def primary(self):
        kind, tok = self.peek()
        if kind == "num":
            self.take()
            return self.num(int(tok))
        if kind == "id":
            self.take()
            return self.atom(tok)
        if tok == "(":
            self.take()
            val = self.expr()
            self.take(")")
            return val
        raise ParseError(f"unexpected token {tok!r}")


def evaluate(text: str, num, atom):
    tokens = tokenize(text)
    if not tokens:
        raise ParseError("empty expression")
    p = _Parser(tokens, num, atom)
    val = p.expr()
    if p.i != len(tokens):
        raise ParseError(f"trailing input in {text!r}")
    return val
