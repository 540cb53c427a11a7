"""Recursive-descent parser for the expression grammar.

    expr   := term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := rational | ident | ident '^' uint | 'exp' '(' expr ')' | '(' expr ')'

A leading sign is accepted on any term. The argument of ``exp`` must reduce
to a homogeneous linear form in even variables with rational coefficients.
"""

from __future__ import annotations

import re
from fractions import Fraction

from artifact.symalg.expr import GradedExpr
from artifact.symalg.table import UnknownVariable, VariableTable


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9_]*)|(\S))")


def _tokenize(text: str):
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        if m.group(1) is not None:
            out.append(("int", m.group(1), m.start(1)))
        elif m.group(2) is not None:
            out.append(("ident", m.group(2), m.start(2)))
        elif m.group(3) is not None:
            out.append(("op", m.group(3), m.start(3)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, table: VariableTable, diagnostics):
        self.toks = _tokenize(text)
        self.i = 0
        self.table = table
        self.diag = diagnostics

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op):
        t = self.take()
        if t[0] != "op" or t[1] != op:
            raise ParseError(f"expected {op!r}, found {t[1] or 'end of input'!r}", t[2])
        return t

    def expr(self) -> GradedExpr:
        out = None
        first = True
        while True:
            t = self.peek()
            sign = 1
            if t[0] == "op" and t[1] in "+-":
                self.take()
                sign = -1 if t[1] == "-" else 1
            elif not first:
                break
            term = self.term()
            term = -term if sign < 0 else term
            out = term if out is None else out + term
            first = False
        return out

    def term(self) -> GradedExpr:
        out = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            out = out * self.factor()
        return out

    def factor(self) -> GradedExpr:
        t = self.take()
        kind, val, pos = t
        if kind == "int":
            num = int(val)
            if self.peek()[0] == "op" and self.peek()[1] == "/":
                self.take()
                d = self.take()
                if d[0] != "int":
                    raise ParseError("expected denominator", d[2])
                if int(d[1]) == 0:
                    raise ParseError("zero denominator", d[2])
                return GradedExpr.constant(self.table, Fraction(num, int(d[1])))
            return GradedExpr.constant(self.table, num)
        if kind == "ident":
            if val == "exp" and self.peek()[0] == "op" and self.peek()[1] == "(":
                self.take()
                arg = self.expr()
                self.expect(")")
                return _exp_of(arg, pos)
            try:
                var = self.table[val]
            except UnknownVariable:
                raise ParseError(f"unknown identifier {val!r}", pos) from None
            e = GradedExpr.variable(self.table, var)
            if self.peek()[0] == "op" and self.peek()[1] == "^":
                self.take()
                k = self.take()
                if k[0] != "int" or int(k[1]) < 1:
                    raise ParseError("exponent must be an integer >= 1", k[2])
                k = int(k[1])
                if var.parity:
                    if k >= 2:
                        if self.diag is not None:
                            self.diag.append(f"odd variable {val} raised to power {k}; result is zero")
                        return e.zero()
                    return e
                return e ** k
            return e
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos)


def _exp_of(arg: GradedExpr, pos: int) -> GradedExpr:
    lin = {}
    for (e, o, l), c in arg.terms.items():
        if o or l or len(e) != 1 or e[0][1] != 1 or not c.is_scalar():
            raise ParseError("exp argument must be a linear form in even variables", pos)
        lin[e[0][0]] = c.body
    return GradedExpr.exponential(arg.table, lin)


def parse_expr(text: str, table: VariableTable, diagnostics: list | None = None) -> GradedExpr:
    """Parse ``text`` into normal form. Odd powers >= 2 give zero and a diagnostic."""
    p = _Parser(text, table, diagnostics)
    if p.peek()[0] == "end":
        raise ParseError("empty expression", 0)
    e = p.expr()
    t = p.peek()
    if t[0] != "end":
        raise ParseError(f"unexpected {t[1]!r}", t[2])
    return e
