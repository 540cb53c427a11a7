"""Normal-form graded expressions.

A term is ``c * E * O * exp(l)`` where ``c`` is a Grassmann constant, ``E``
a monomial in even variables, ``O`` an ascending product of distinct odd
variables and ``l`` a linear form in even variables. Terms are keyed by
``(evens, odds, lin)`` with variables referred to by table id:

    evens: ((id, exponent), ...) ascending in id
    odds:  (id, ...) strictly ascending
    lin:   ((id, Fraction), ...) ascending, nonzero coefficients
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Mapping

from artifact._kernel import merge_sign
from artifact.superalgebra.errors import ParityError
from artifact.superalgebra.grassmann import GrassmannNumber
from artifact.symalg.table import Var, VariableTable

EMPTY_KEY = ((), (), ())


class TableMismatch(ValueError):
    pass


def _merge_evens(a, b):
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i][0] < b[j][0]:
            out.append(a[i])
            i += 1
        elif b[j][0] < a[i][0]:
            out.append(b[j])
            j += 1
        else:
            out.append((a[i][0], a[i][1] + b[j][1]))
            i += 1
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out)


def _merge_lin(a, b):
    if not a:
        return b
    if not b:
        return a
    acc = dict(a)
    for k, v in b:
        s = acc.get(k, 0) + v
        if s:
            acc[k] = s
        else:
            acc.pop(k, None)
    return tuple(sorted(acc.items()))


class GradedExpr:
    """Immutable polynomial-times-exponential expression over a variable table."""

    __slots__ = ("table", "terms", "_hash")

    def __init__(self, table: VariableTable, terms: Mapping | None = None, *, _trusted: bool = False):
        self.table = table
        self._hash = None
        if _trusted:
            self.terms = terms
        else:
            self.terms = {k: c for k, c in (terms or {}).items() if c}

    # constructors -----------------------------------------------------------
    @classmethod
    def constant(cls, table: VariableTable, c=0) -> "GradedExpr":
        g = c if isinstance(c, GrassmannNumber) else GrassmannNumber.scalar(table.n, c)
        return cls(table, {EMPTY_KEY: g} if g else {}, _trusted=True)

    @classmethod
    def variable(cls, table: VariableTable, v: Var) -> "GradedExpr":
        one = GrassmannNumber.scalar(table.n, 1)
        if v.kind == "grassmann-constant":
            return cls(table, {EMPTY_KEY: GrassmannNumber.generator(table.n, v.generator)}, _trusted=True)
        if v.parity:
            return cls(table, {((), (v.id,), ()): one}, _trusted=True)
        return cls(table, {(((v.id, 1),), (), ()): one}, _trusted=True)

    @classmethod
    def exponential(cls, table: VariableTable, lin: Mapping[int, Fraction]) -> "GradedExpr":
        key = ((), (), tuple(sorted((k, Fraction(v)) for k, v in lin.items() if v)))
        return cls(table, {key: GrassmannNumber.scalar(table.n, 1)}, _trusted=True)

    def _new(self, terms) -> "GradedExpr":
        return GradedExpr(self.table, terms, _trusted=True)

    def zero(self) -> "GradedExpr":
        return self._new({})

    def one(self) -> "GradedExpr":
        return GradedExpr.constant(self.table, 1)

    # coercion ---------------------------------------------------------------
    def _coerce(self, other) -> "GradedExpr":
        if isinstance(other, GradedExpr):
            if other.table is not self.table:
                raise TableMismatch("expressions belong to different variable tables")
            return other
        if isinstance(other, (int, Rational, GrassmannNumber)):
            return GradedExpr.constant(self.table, other)
        return NotImplemented

    # arithmetic ---------------------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if not o.terms:
            return self
        t = dict(self.terms)
        for k, c in o.terms.items():
            v = t.get(k)
            if v is None:
                t[k] = c
            else:
                v = v + c
                if v:
                    t[k] = v
                else:
                    del t[k]
        return self._new(t)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return self._new({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Rational)) and not isinstance(other, GrassmannNumber):
            f = Fraction(other)
            if not f:
                return self.zero()
            return self._new({k: c * f for k, c in self.terms.items()})
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        out: dict = {}
        for k1, c1 in self.terms.items():
            e1, o1, l1 = k1
            flip = len(o1) & 1
            for k2, c2 in o.terms.items():
                e2, o2, l2 = k2
                sign, odds = merge_sign(o1, o2)
                if not sign:
                    continue
                c = c1 * (c2.involution() if flip else c2)
                if not c:
                    continue
                if sign < 0:
                    c = -c
                key = (_merge_evens(e1, e2), odds, _merge_lin(l1, l2))
                prev = out.get(key)
                if prev is None:
                    out[key] = c
                else:
                    s = prev + c
                    if s:
                        out[key] = s
                    else:
                        del out[key]
        return self._new(out)

    def __rmul__(self, other):
        if isinstance(other, (int, Rational)) and not isinstance(other, GrassmannNumber):
            return self.__mul__(other)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        out = self.one()
        for _ in range(k):
            out = out * self
        return out

    # comparison -----------------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, GradedExpr):
            return self.table is other.table and self.terms == other.terms
        if isinstance(other, (int, Rational, GrassmannNumber)):
            return self.terms == GradedExpr.constant(self.table, other).terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(k == EMPTY_KEY for k in self.terms)

    def constant_value(self) -> GrassmannNumber:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self.terms.get(EMPTY_KEY, GrassmannNumber.scalar(self.table.n, 0))

    # grading ----------------------------------------------------------------------
    @staticmethod
    def _term_parity(key, c) -> int | None:
        pc = c.parity
        if pc is None:
            return None
        return (pc + len(key[1])) & 1

    @property
    def parity(self) -> int | None:
        p = None
        for k, c in self.terms.items():
            q = self._term_parity(k, c)
            if q is None:
                return None
            if p is None:
                p = q
            elif p != q:
                return None
        return p or 0

    def require_parity(self) -> int:
        p = self.parity
        if p is None:
            raise ParityError(f"mixed-parity expression {self}")
        return p

    def variables(self) -> set[int]:
        out = set()
        for e, o, l in self.terms:
            out.update(i for i, _ in e)
            out.update(o)
            out.update(i for i, _ in l)
        return out

    def depends_on(self, v) -> bool:
        return self.table[v].id in self.variables()

    def degree_in(self, ids: Iterable[int]) -> int:
        ids = set(ids)
        best = 0
        for e, o, _ in self.terms:
            d = sum(k for i, k in e if i in ids) + sum(1 for i in o if i in ids)
            best = max(best, d)
        return best

    def has_exp_in(self, ids: Iterable[int]) -> bool:
        ids = set(ids)
        return any(i in ids for _, _, l in self.terms for i, _ in l)

    def has_exp(self) -> bool:
        return any(l for _, _, l in self.terms)

    # calculus -------------------------------------------------------------------------
    def derivative(self, v, side: str = "left") -> "GradedExpr":
        """Graded partial derivative acting from the left (default) or the right."""
        var = self.table[v]
        vid = var.id
        out: dict = {}

        def put(key, c):
            prev = out.get(key)
            if prev is None:
                out[key] = c
            else:
                s = prev + c
                if s:
                    out[key] = s
                else:
                    del out[key]

        if var.parity == 0:
            for (e, o, l), c in self.terms.items():
                for pos, (i, k) in enumerate(e):
                    if i == vid:
                        ne = e[:pos] + ((i, k - 1),) + e[pos + 1:] if k > 1 else e[:pos] + e[pos + 1:]
                        put((ne, o, l), c * k)
                        break
                for i, a in l:
                    if i == vid:
                        put((e, o, l), c * a)
                        break
        else:
            for (e, o, l), c in self.terms.items():
                if vid not in o:
                    continue
                pos = o.index(vid)
                no = o[:pos] + o[pos + 1:]
                if side == "left":
                    cc = c.involution()
                    if pos & 1:
                        cc = -cc
                else:
                    cc = -c if (len(o) - 1 - pos) & 1 else c
                put((e, no, l), cc)
        return self._new(out)

    def d(self, v) -> "GradedExpr":
        return self.derivative(v, "left")

    def subs(self, mapping: Mapping) -> "GradedExpr":
        """Substitute variables (name, Var or id keys) by expressions."""
        if not mapping:
            return self
        smap: dict[int, GradedExpr] = {}
        for k, v in mapping.items():
            var = self.table[k]
            smap[var.id] = self._coerce(v)
        relevant = set(smap)
        if not (self.variables() & relevant):
            return self
        table = self.table
        one = GrassmannNumber.scalar(table.n, 1)
        result = self.zero()
        cache_pow: dict[tuple[int, int], GradedExpr] = {}

        def power(i, k):
            key = (i, k)
            if key not in cache_pow:
                cache_pow[key] = smap[i] ** k
            return cache_pow[key]

        for (e, o, l), c in self.terms.items():
            keep_e = tuple((i, k) for i, k in e if i not in smap)
            factor = self._new({(keep_e, (), ()): c})
            for i, k in e:
                if i in smap:
                    factor = factor * power(i, k)
            for i in o:
                if i in smap:
                    factor = factor * smap[i]
                else:
                    factor = factor * self._new({((), (i,), ()): one})
            if l:
                factor = factor * self._exp_subs(l, smap)
            result = result + factor
        return result

    def _exp_subs(self, lin, smap) -> "GradedExpr":
        if not any(i in smap for i, _ in lin):
            return self._new({((), (), lin): GrassmannNumber.scalar(self.table.n, 1)})
        acc: dict[int, Fraction] = {}
        for i, a in lin:
            if i not in smap:
                acc[i] = acc.get(i, 0) + a
                continue
            for (e, o, l), c in smap[i].terms.items():
                if o or l or len(e) != 1 or e[0][1] != 1 or not c.is_scalar():
                    raise ValueError("substitution inside exp must be a homogeneous linear form in even variables")
                j = e[0][0]
                acc[j] = acc.get(j, 0) + a * c.body
        return GradedExpr.exponential(self.table, acc)

    def map_coefficients(self, fn: Callable[[GrassmannNumber], GrassmannNumber]) -> "GradedExpr":
        return self._new({k: v for k, v in ((k, fn(c)) for k, c in self.terms.items()) if v})

    def filter_terms(self, pred) -> "GradedExpr":
        return self._new({k: c for k, c in self.terms.items() if pred(k, c)})

    # printing -------------------------------------------------------------------------
    def sorted_items(self):
        def sk(item):
            (e, o, l), _ = item
            deg = sum(k for _, k in e) + len(o)
            return (deg, e, o, l)
        return sorted(self.terms.items(), key=sk)

    def to_string(self) -> str:
        if not self.terms:
            return "0"
        tb = self.table
        names = tb.generator_names
        pieces = []
        for (e, o, l), c in self.sorted_items():
            factors = []
            for i, k in e:
                factors.append(tb[i].name if k == 1 else f"{tb[i].name}^{k}")
            factors.extend(tb[i].name for i in o)
            if l:
                factors.append(f"exp({_lin_str(tb, l)})")
            neg = False
            if c.is_scalar():
                r = c.body
                neg = r < 0
                mag = -r if neg else r
                if mag != 1 or not factors:
                    factors.insert(0, str(mag))
            else:
                factors.insert(0, "(" + c.to_string(names) + ")")
            pieces.append((neg, "*".join(factors)))
        out = ("-" if pieces[0][0] else "") + pieces[0][1]
        for neg, body in pieces[1:]:
            out += (" - " if neg else " + ") + body
        return out

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"GradedExpr({self.to_string()!r})"


def _lin_str(tb: VariableTable, lin) -> str:
    parts = []
    for i, a in lin:
        name = tb[i].name
        mag = abs(a)
        body = name if mag == 1 else f"{mag}*{name}"
        parts.append((a < 0, body))
    out = ("-" if parts[0][0] else "") + parts[0][1]
    for neg, body in parts[1:]:
        out += (" - " if neg else " + ") + body
    return out


def as_expr(table: VariableTable, x) -> GradedExpr:
    if isinstance(x, GradedExpr):
        return x
    if isinstance(x, str):
        return table.parse(x)
    return GradedExpr.constant(table, x)
