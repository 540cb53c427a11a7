"""Graded variable tables.

A table owns every symbol an expression may mention: phase-space pairs,
their jet towers, time, multipliers, ghosts and the Grassmann constants
shared with the superalgebra layer. Variables are identified by a small
integer id assigned in declaration order; that order fixes the canonical
ordering of odd factors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

KINDS = ("position", "momentum", "jet", "time", "ghost", "antighost",
         "auxiliary", "grassmann-constant", "matter")

IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class UnknownVariable(KeyError):
    pass


class JetOrderOverflow(ValueError):
    pass


@dataclass(frozen=True)
class Var:
    name: str
    parity: int
    kind: str
    id: int
    base: int | None = None       # position id for jets and momenta
    order: int = 0                # jet order (0 for the position itself)
    ghost_number: int = 0
    generator: int | None = None  # Grassmann generator index for constants


def jet_name(base: str, n: int) -> str:
    if n == 0:
        return base
    if n == 1:
        return f"{base}_dot"
    if n == 2:
        return f"{base}_ddot"
    return f"{base}_d{n}"


def default_momentum_name(name: str) -> str:
    m = re.fullmatch(r"q(\d+)", name)
    if m:
        return f"p{m.group(1)}"
    return f"p_{name}"


class VariableTable:
    """Ordered registry of graded variables."""

    def __init__(self, grassmann_generators: int = 0, max_jet_order: int = 4,
                 generator_names: list[str] | None = None, time_name: str = "t"):
        self.n = grassmann_generators
        self.max_jet_order = max_jet_order
        self._vars: list[Var] = []
        self._by_name: dict[str, Var] = {}
        self._jets: dict[tuple[int, int], int] = {}
        self._momentum: dict[int, int] = {}
        self._position_of_momentum: dict[int, int] = {}
        self.positions: list[int] = []
        self.time = self._add(time_name, 0, "time")
        names = generator_names or [f"z{i}" for i in range(1, grassmann_generators + 1)]
        if len(names) != grassmann_generators:
            raise ValueError("generator_names length must equal grassmann_generators")
        self.generator_names = {i + 1: nm for i, nm in enumerate(names)}
        for i, nm in enumerate(names, start=1):
            self._add(nm, 1, "grassmann-constant", generator=i)

    # registration ---------------------------------------------------------
    def _add(self, name: str, parity: int, kind: str, **extra) -> Var:
        if not IDENT.match(name):
            raise ValueError(f"invalid identifier {name!r}")
        if name in self._by_name:
            raise ValueError(f"duplicate variable {name!r}")
        if kind not in KINDS:
            raise ValueError(f"unknown variable kind {kind!r}")
        v = Var(name, int(parity) & 1, kind, len(self._vars), **extra)
        self._vars.append(v)
        self._by_name[name] = v
        return v

    def add(self, name: str, parity: int = 0, kind: str = "auxiliary", ghost_number: int = 0) -> Var:
        return self._add(name, parity, kind, ghost_number=ghost_number)

    def add_position(self, name: str, parity: int = 0, momentum: str | None = None,
                     with_jets: bool = True, with_momentum: bool = True) -> Var:
        q = self._add(name, parity, "position", order=0)
        self.positions.append(q.id)
        self._jets[(q.id, 0)] = q.id
        if with_jets:
            for k in range(1, self.max_jet_order + 1):
                self.jet(q, k)
        if with_momentum:
            p = self._add(momentum or default_momentum_name(name), parity, "momentum", base=q.id)
            self._momentum[q.id] = p.id
            self._position_of_momentum[p.id] = q.id
        return q

    def jet(self, q: Var | str | int, k: int) -> Var:
        q = self[q]
        if q.kind == "jet":
            k += q.order
            q = self._vars[q.base]
        if q.kind != "position":
            raise ValueError(f"{q.name} has no jet tower")
        if k > self.max_jet_order:
            raise JetOrderOverflow(f"jet order {k} of {q.name} exceeds maximum {self.max_jet_order}")
        key = (q.id, k)
        if key not in self._jets:
            v = self._add(jet_name(q.name, k), q.parity, "jet", base=q.id, order=k)
            self._jets[key] = v.id
        return self._vars[self._jets[key]]

    def ensure_jet_order(self, k: int) -> None:
        if k > self.max_jet_order:
            self.max_jet_order = k
        for qid in self.positions:
            for j in range(1, k + 1):
                self.jet(qid, j)

    # lookup ---------------------------------------------------------------
    def __getitem__(self, key) -> Var:
        if isinstance(key, Var):
            return key
        if isinstance(key, int):
            return self._vars[key]
        try:
            return self._by_name[key]
        except KeyError:
            raise UnknownVariable(key) from None

    def __contains__(self, name) -> bool:
        return name in self._by_name

    def __iter__(self):
        return iter(self._vars)

    def __len__(self):
        return len(self._vars)

    def momentum(self, q) -> Var:
        return self._vars[self._momentum[self[q].id]]

    def has_momentum(self, q) -> bool:
        return self[q].id in self._momentum

    def position_of(self, p) -> Var:
        return self._vars[self._position_of_momentum[self[p].id]]

    def jet_base(self, v) -> tuple[Var, int] | None:
        v = self[v]
        if v.kind == "position":
            return v, 0
        if v.kind == "jet":
            return self._vars[v.base], v.order
        return None

    def pairs(self) -> list[tuple[Var, Var]]:
        return [(self._vars[q], self._vars[self._momentum[q]]) for q in self.positions if q in self._momentum]

    def phase_ids(self) -> set[int]:
        out = set()
        for q, p in self.pairs():
            out.add(q.id)
            out.add(p.id)
        return out

    def of_kind(self, kind: str) -> list[Var]:
        return [v for v in self._vars if v.kind == kind]

    def fresh(self, stem: str, parity: int = 0, kind: str = "auxiliary") -> Var:
        """New variable named stem, stem_1, stem_2, ... whichever is free."""
        name = stem
        i = 1
        while name in self._by_name:
            name = f"{stem}_{i}"
            i += 1
        return self._add(name, parity, kind)

    # expression helpers -----------------------------------------------------
    def var(self, name):
        from artifact.symalg.expr import GradedExpr
        return GradedExpr.variable(self, self[name])

    def const(self, c=0):
        from artifact.symalg.expr import GradedExpr
        return GradedExpr.constant(self, c)

    def parse(self, text: str, diagnostics: list | None = None):
        from artifact.symalg.parser import parse_expr
        return parse_expr(text, self, diagnostics)
