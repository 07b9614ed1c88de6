"""Query tree for the supported SPARQL subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from ..rdf.terms import Term, TriplePattern, Variable


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class BinOp:
    op: str  # one of = != < > <= >= && ||
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    arg: "Expr"


@dataclass(frozen=True)
class Call:
    name: str  # lower-cased builtin name
    args: tuple["Expr", ...]


Expr = Union[Term, Variable, BinOp, Not, Call]


def expression_variables(expr: Expr) -> frozenset[str]:
    if isinstance(expr, Variable):
        return frozenset((expr.name,))
    if isinstance(expr, BinOp):
        return expression_variables(expr.left) | expression_variables(expr.right)
    if isinstance(expr, Not):
        return expression_variables(expr.arg)
    if isinstance(expr, Call):
        out = frozenset()
        for a in expr.args:
            out |= expression_variables(a)
        return out
    return frozenset()


def conjunction(exprs: list[Expr]) -> Expr:
    out = exprs[0]
    for e in exprs[1:]:
        out = BinOp("&&", out, e)
    return out


# -- graph patterns ----------------------------------------------------------


@dataclass(frozen=True)
class BGP:
    patterns: tuple[TriplePattern, ...] = ()


@dataclass(frozen=True)
class Join:
    left: "GraphPattern"
    right: "GraphPattern"


@dataclass(frozen=True)
class Union_:
    left: "GraphPattern"
    right: "GraphPattern"


@dataclass(frozen=True)
class LeftJoin:
    """OPTIONAL; ``condition`` holds a FILTER written inside the optional group."""

    left: "GraphPattern"
    right: "GraphPattern"
    condition: Optional[Expr] = None


@dataclass(frozen=True)
class Filter:
    inner: "GraphPattern"
    expr: Expr


GraphPattern = Union[BGP, Join, Union_, LeftJoin, Filter]


def iter_patterns(node: GraphPattern) -> Iterator[TriplePattern]:
    """Triple patterns of a graph pattern in textual order."""
    if isinstance(node, BGP):
        yield from node.patterns
    elif isinstance(node, Filter):
        yield from iter_patterns(node.inner)
    else:
        yield from iter_patterns(node.left)
        yield from iter_patterns(node.right)


def pattern_variables(node: GraphPattern) -> list[str]:
    """In-scope variables in order of first appearance."""
    seen: dict[str, None] = {}
    for tp in iter_patterns(node):
        for n in tp:
            if isinstance(n, Variable):
                seen.setdefault(n.name)
    return list(seen)


# -- query -------------------------------------------------------------------


@dataclass(frozen=True)
class Count:
    var: Optional[str]  # None means COUNT(*)
    distinct: bool = False


@dataclass(frozen=True)
class OrderCondition:
    var: str
    descending: bool = False


@dataclass
class Query:
    form: str  # "SELECT" or "ASK"
    pattern: GraphPattern
    projection: Optional[list[str]] = None  # None means *
    distinct: bool = False
    limit: Optional[int] = None
    offset: Optional[int] = None
    order_by: list[OrderCondition] = field(default_factory=list)
    group_by: Optional[list[str]] = None
    aggregates: dict[str, Count] = field(default_factory=dict)  # alias -> aggregate
    prefixes: dict[str, str] = field(default_factory=dict)

    @property
    def patterns(self) -> list[TriplePattern]:
        return list(iter_patterns(self.pattern))

    def result_variables(self) -> list[str]:
        if self.form == "ASK":
            return []
        if self.projection is not None:
            return list(self.projection)
        if self.group_by is not None:
            return list(self.group_by)
        return pattern_variables(self.pattern)
