"""Graded expressions over a variable table, with a parser and jet calculus."""

from artifact.symalg.expr import GradedExpr, TableMismatch, as_expr
from artifact.symalg.jet import (euler_lagrange, extract_total_derivative, hermitian_conjugate,
                                 jet_order, prolong, total_time_derivative)
from artifact.symalg.parser import ParseError, parse_expr
from artifact.symalg.table import (JetOrderOverflow, UnknownVariable, Var, VariableTable,
                                   default_momentum_name, jet_name)


def left_derivative(F: GradedExpr, v) -> GradedExpr:
    return F.derivative(v, "left")


def right_derivative(F: GradedExpr, v) -> GradedExpr:
    return F.derivative(v, "right")


__all__ = [
    "GradedExpr", "TableMismatch", "as_expr", "euler_lagrange", "extract_total_derivative",
    "hermitian_conjugate", "jet_order", "prolong", "total_time_derivative", "ParseError",
    "parse_expr", "JetOrderOverflow", "UnknownVariable", "Var", "VariableTable",
    "default_momentum_name", "jet_name", "left_derivative", "right_derivative",
]
