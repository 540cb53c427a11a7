"""Exact elements of the Grassmann algebra over N generators."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

from artifact._kernel import mask_sign, mul_terms
from artifact.superalgebra.errors import GeneratorCountMismatch, ParityError, ZeroBody

MAX_GENERATORS = 60


def _popcount(m: int) -> int:
    return bin(m).count("1")


def subset_to_mask(subset: Iterable[int], n: int) -> tuple[int, int]:
    """Mask of an index list (1-based) and the sign to bring it into ascending order."""
    idx = list(subset)
    mask = 0
    sign = 1
    for i in idx:
        if not 1 <= i <= n:
            raise IndexError(f"generator index {i} out of range 1..{n}")
        bit = 1 << (i - 1)
        s = mask_sign(mask, bit)
        if s == 0:
            return 0, 0
        sign *= s
        mask |= bit
    return mask, sign


def mask_to_subset(mask: int) -> tuple[int, ...]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


class GrassmannNumber:
    """Sparse map from ascending generator subsets to rational coefficients.

    Internally subsets are bitmasks, generator ``i`` (1-based) living at bit
    ``i - 1``. Instances are immutable; arithmetic returns new objects.
    """

    __slots__ = ("_n", "_terms", "_hash", "_inv")

    def __init__(self, n: int, terms: Mapping[int, object] | None = None, *, _trusted: bool = False):
        if not 0 <= n <= MAX_GENERATORS:
            raise ValueError(f"generator count must lie in 0..{MAX_GENERATORS}")
        self._n = n
        self._hash = None
        self._inv = None
        if _trusted:
            self._terms = terms
            return
        clean = {}
        limit = 1 << n
        for m, c in (terms or {}).items():
            if not 0 <= m < limit:
                raise IndexError(f"monomial mask {m} exceeds {n} generators")
            c = Fraction(c)
            if c:
                clean[m] = c
        self._terms = clean

    # construction helpers -------------------------------------------------
    @classmethod
    def scalar(cls, n: int, value=0) -> "GrassmannNumber":
        value = Fraction(value)
        return cls(n, {0: value} if value else {}, _trusted=True)

    @classmethod
    def generator(cls, n: int, i: int) -> "GrassmannNumber":
        if not 1 <= i <= n:
            raise IndexError(f"generator index {i} out of range 1..{n}")
        return cls(n, {1 << (i - 1): Fraction(1)}, _trusted=True)

    @classmethod
    def from_subsets(cls, n: int, data: Mapping[tuple, object]) -> "GrassmannNumber":
        """Build from {(i, j, ...): coeff}; unsorted index tuples pick up reordering signs."""
        acc: dict[int, Fraction] = {}
        for subset, c in data.items():
            mask, sign = subset_to_mask(subset, n)
            if sign == 0:
                continue
            acc[mask] = acc.get(mask, Fraction(0)) + sign * Fraction(c)
        return cls(n, acc)

    # basic properties -----------------------------------------------------
    @property
    def generator_count(self) -> int:
        return self._n

    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return {mask_to_subset(m): c for m, c in sorted(self._terms.items())}

    def mask_terms(self) -> dict[int, Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    @property
    def body(self) -> Fraction:
        return self._terms.get(0, Fraction(0))

    def is_scalar(self) -> bool:
        return all(m == 0 for m in self._terms)

    @property
    def parity(self) -> int | None:
        """0 or 1, None for mixed elements; zero counts as even."""
        p = None
        for m in self._terms:
            q = _popcount(m) & 1
            if p is None:
                p = q
            elif p != q:
                return None
        return p or 0

    def require_parity(self) -> int:
        p = self.parity
        if p is None:
            raise ParityError(f"mixed-parity Grassmann number {self}")
        return p

    def split(self) -> tuple["GrassmannNumber", "GrassmannNumber"]:
        """(body, soul) with body + soul == self."""
        b = self.body
        body = GrassmannNumber(self._n, {0: b} if b else {}, _trusted=True)
        soul = GrassmannNumber(self._n, {m: c for m, c in self._terms.items() if m}, _trusted=True)
        return body, soul

    def soul(self) -> "GrassmannNumber":
        return self.split()[1]

    def coeff(self, subset: Iterable[int]) -> Fraction:
        mask, sign = subset_to_mask(subset, self._n)
        if sign == 0:
            return Fraction(0)
        return sign * self._terms.get(mask, Fraction(0))

    def even_part(self) -> "GrassmannNumber":
        return GrassmannNumber(self._n, {m: c for m, c in self._terms.items() if not _popcount(m) & 1}, _trusted=True)

    def odd_part(self) -> "GrassmannNumber":
        return GrassmannNumber(self._n, {m: c for m, c in self._terms.items() if _popcount(m) & 1}, _trusted=True)

    def involution(self) -> "GrassmannNumber":
        """Grade involution: even part minus odd part."""
        if self._inv is None:
            t = {m: (-c if _popcount(m) & 1 else c) for m, c in self._terms.items()}
            self._inv = GrassmannNumber(self._n, t, _trusted=True)
        return self._inv

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "GrassmannNumber":
        if isinstance(other, GrassmannNumber):
            if other._n != self._n:
                raise GeneratorCountMismatch(f"{self._n} vs {other._n} generators")
            return other
        if isinstance(other, (int, Rational)):
            return GrassmannNumber.scalar(self._n, other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        t = dict(self._terms)
        for m, c in o._terms.items():
            v = t.get(m, 0) + c
            if v:
                t[m] = v
            else:
                t.pop(m, None)
        return GrassmannNumber(self._n, t, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannNumber(self._n, {m: -c for m, c in self._terms.items()}, _trusted=True)

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
                return GrassmannNumber(self._n, {}, _trusted=True)
            return GrassmannNumber(self._n, {m: c * f for m, c in self._terms.items()}, _trusted=True)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return GrassmannNumber(self._n, mul_terms(self._terms, o._terms), _trusted=True)

    def __rmul__(self, other):
        # scalars commute with everything
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, GrassmannNumber):
            return self * other.inverse()
        f = Fraction(other)
        return self * (1 / f)

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = GrassmannNumber.scalar(self._n, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def inverse(self) -> "GrassmannNumber":
        """Body inverse times the terminating geometric series in the soul."""
        x0 = self.body
        if not x0:
            raise ZeroBody(f"cannot invert {self}: body is zero")
        inv0 = 1 / x0
        s = self.soul() * inv0
        term = GrassmannNumber.scalar(self._n, 1)
        acc = term
        for _ in range(self._n):
            term = -(term * s)
            if not term:
                break
            acc = acc + term
        return acc * inv0

    def conjugate(self) -> "GrassmannNumber":
        """Complex conjugation with real generators: (z1...zk)* = zk...z1."""
        t = {}
        for m, c in self._terms.items():
            k = _popcount(m)
            t[m] = -c if (k * (k - 1) // 2) & 1 else c
        return GrassmannNumber(self._n, t, _trusted=True)

    # comparisons ----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, GrassmannNumber):
            return self._n == other._n and self._terms == other._terms
        if isinstance(other, (int, Rational)):
            f = Fraction(other)
            return self._terms == ({0: f} if f else {})
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._n, frozenset(self._terms.items())))
        return self._hash

    # printing -------------------------------------------------------------
    def to_string(self, names: Mapping[int, str] | None = None) -> str:
        if not self._terms:
            return "0"
        parts = []
        for mask in sorted(self._terms, key=lambda m: (_popcount(m), mask_to_subset(m))):
            c = self._terms[mask]
            sub = mask_to_subset(mask)
            gens = "*".join((names or {}).get(i, f"z{i}") for i in sub)
            mag = abs(c)
            if not gens:
                body = str(mag)
            elif mag == 1:
                body = gens
            else:
                body = f"{mag}*{gens}"
            parts.append(("-" if c < 0 else "+", body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sgn, body in parts[1:]:
            out += f" {sgn} {body}"
        return out

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"GrassmannNumber({self._n}, {self.to_string()!r})"

    def to_json(self) -> dict[str, str]:
        """{"1,2": "5/3", "": "3"}; keys are comma-joined subsets."""
        return {",".join(map(str, s)): str(c) for s, c in self.terms.items()}

    @classmethod
    def from_json(cls, n: int, data: Mapping[str, str]) -> "GrassmannNumber":
        parsed = {}
        for key, val in data.items():
            subset = tuple(int(x) for x in key.split(",") if x.strip())
            parsed[subset] = Fraction(val)
        return cls.from_subsets(n, parsed)


def gr_mul(x: GrassmannNumber, y: GrassmannNumber) -> GrassmannNumber:
    if x.generator_count != y.generator_count:
        raise GeneratorCountMismatch(f"{x.generator_count} vs {y.generator_count} generators")
    return x * y


def gr_inverse(x: GrassmannNumber) -> GrassmannNumber:
    return x.inverse()


def body_soul_split(x: GrassmannNumber) -> tuple[GrassmannNumber, GrassmannNumber]:
    return x.split()


def gr_coeff(x: GrassmannNumber, subset: Iterable[int]) -> Fraction:
    return x.coeff(subset)


def gr_conjugate(x: GrassmannNumber) -> GrassmannNumber:
    return x.conjugate()

