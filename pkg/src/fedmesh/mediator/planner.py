"""Query plans: exclusive groups, join ordering, filter placement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Union

from ..rdf.terms import TriplePattern
from ..sparql.ast import (
    BGP, BinOp, Expr, Filter, GraphPattern, Join, LeftJoin, Query, Union_, conjunction,
    expression_variables,
)
from .sources import SourceEntry, SourceMap


@dataclass
class PatternNode:
    pattern: TriplePattern
    sources: tuple[str, ...]

    @property
    def patterns(self) -> tuple[TriplePattern, ...]:
        return (self.pattern,)

    @property
    def variables(self) -> frozenset[str]:
        return self.pattern.variables


@dataclass
class ExclusiveGroup:
    """Patterns answerable only by ``endpoint``; shipped as one subquery."""

    patterns: tuple[TriplePattern, ...]
    endpoint: str
    filters: list[Expr] = field(default_factory=list)

    @property
    def sources(self) -> tuple[str, ...]:
        return (self.endpoint,)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset().union(*(tp.variables for tp in self.patterns))


@dataclass
class EmptyNode:
    """A basic graph pattern with an unanswerable pattern; yields no rows."""

    patterns: tuple[TriplePattern, ...]


@dataclass
class JoinNode:
    children: list["PlanNode"]


@dataclass
class UnionNode:
    left: "PlanNode"
    right: "PlanNode"


@dataclass
class LeftJoinNode:
    left: "PlanNode"
    right: "PlanNode"
    condition: Optional[Expr] = None


@dataclass
class FilterNode:
    inner: "PlanNode"
    expr: Expr


@dataclass
class ModifierNode:
    """Root: grouping, ordering, projection, DISTINCT and slicing from ``query``."""

    child: "PlanNode"
    query: Query


Leaf = Union[PatternNode, ExclusiveGroup]
PlanNode = Union[PatternNode, ExclusiveGroup, EmptyNode, JoinNode, UnionNode,
                 LeftJoinNode, FilterNode, ModifierNode]


@dataclass
class QueryPlan:
    root: ModifierNode
    sources: SourceMap

    @property
    def query(self) -> Query:
        return self.root.query

    def patterns(self) -> list[TriplePattern]:
        return list(plan_patterns(self.root))

    def nodes(self) -> Iterator[PlanNode]:
        return walk(self.root)


def walk(node: PlanNode) -> Iterator[PlanNode]:
    yield node
    if isinstance(node, JoinNode):
        for c in node.children:
            yield from walk(c)
    elif isinstance(node, (UnionNode, LeftJoinNode)):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, FilterNode):
        yield from walk(node.inner)
    elif isinstance(node, ModifierNode):
        yield from walk(node.child)


def plan_patterns(node: PlanNode) -> Iterator[TriplePattern]:
    for n in walk(node):
        if isinstance(n, (PatternNode, ExclusiveGroup, EmptyNode)):
            yield from n.patterns


def form_exclusive_groups(patterns: Sequence[TriplePattern], entries: Sequence[SourceEntry],
                          enabled: bool = True) -> list[PlanNode]:
    """Group the patterns of one BGP whose only source is the same member.

    A group needs at least two patterns; a lone single-source pattern stays
    a :class:`PatternNode` (it costs one request either way).  An empty
    relevant set makes the whole BGP an :class:`EmptyNode`.
    """
    if any(not e.relevant for e in entries):
        return [EmptyNode(tuple(patterns))]
    by_source: dict[str, list[int]] = {}
    for i, e in enumerate(entries):
        if len(e.relevant) == 1:
            by_source.setdefault(e.relevant[0], []).append(i)
    nodes: list[PlanNode] = []
    emitted = set()
    for i, (tp, e) in enumerate(zip(patterns, entries)):
        members = by_source.get(e.relevant[0]) if len(e.relevant) == 1 else None
        if enabled and members and len(members) >= 2:
            if e.relevant[0] not in emitted:
                emitted.add(e.relevant[0])
                nodes.append(ExclusiveGroup(tuple(patterns[j] for j in members), e.relevant[0]))
        else:
            nodes.append(PatternNode(tp, e.relevant))
    return nodes


def free_variables(node: Leaf, bound: set[str]) -> int:
    """Unbound variable count; a group scores by its best pattern."""
    return min(len(tp.variables - bound) for tp in node.patterns)


def reorder_joins(nodes: Sequence[PlanNode]) -> list[PlanNode]:
    """Greedy order by ascending free-variable count, ties kept in query order."""
    remaining = list(nodes)
    if any(isinstance(n, EmptyNode) for n in remaining):
        return remaining
    ordered = []
    bound: set[str] = set()
    while remaining:
        best = min(range(len(remaining)), key=lambda i: (free_variables(remaining[i], bound), i))
        node = remaining.pop(best)
        ordered.append(node)
        bound |= node.variables
    return ordered


def _conjuncts(expr: Expr) -> list[Expr]:
    if isinstance(expr, BinOp) and expr.op == "&&":
        return _conjuncts(expr.left) + _conjuncts(expr.right)
    return [expr]


def push_filters(join: JoinNode, expr: Expr) -> Optional[Expr]:
    """Move conjuncts that only touch one exclusive group's variables into that group.

    Returns the part of ``expr`` that must still be evaluated by the mediator.
    """
    groups = [c for c in join.children if isinstance(c, ExclusiveGroup)]
    rest = []
    for part in _conjuncts(expr):
        used = expression_variables(part)
        target = next((g for g in groups if used and used <= g.variables), None)
        if target is None:
            rest.append(part)
        else:
            target.filters.append(part)
    return conjunction(rest) if rest else None


def _certain_variables(node: GraphPattern) -> frozenset[str]:
    """Variables bound in every solution of ``node`` (BGPs and left joins only)."""
    if isinstance(node, BGP):
        return frozenset().union(*(tp.variables for tp in node.patterns))
    if isinstance(node, LeftJoin):
        return _certain_variables(node.left)
    return frozenset()


def _sink_filter(node: LeftJoin, parts: list[Expr]) -> LeftJoin:
    if isinstance(node.left, LeftJoin):
        left = _sink_filter(node.left, parts)
    else:
        left = Filter(node.left, conjunction(parts))
    return LeftJoin(left, node.right, node.condition)


def _push_through_optional(node: Filter) -> GraphPattern:
    """Filter(LeftJoin(P, Q), e) becomes LeftJoin(Filter(P, e), Q) when P always binds e's variables."""
    certain = _certain_variables(node.inner)
    down, keep = [], []
    for part in _conjuncts(node.expr):
        used = expression_variables(part)
        (down if used and used <= certain else keep).append(part)
    if not down:
        return node
    inner = _sink_filter(node.inner, down)
    return Filter(inner, conjunction(keep)) if keep else inner


def build_plan(query: Query, sources: SourceMap, exclusive_groups: bool = True) -> QueryPlan:
    position = 0

    def build(node: GraphPattern) -> PlanNode:
        nonlocal position
        if isinstance(node, BGP):
            entries = sources.entries[position:position + len(node.patterns)]
            position += len(node.patterns)
            if not node.patterns:
                return JoinNode([])
            return JoinNode(reorder_joins(form_exclusive_groups(node.patterns, entries, exclusive_groups)))
        if isinstance(node, Filter) and isinstance(node.inner, LeftJoin):
            node = _push_through_optional(node)
            if not isinstance(node, Filter):
                return build(node)
        if isinstance(node, Filter):
            inner = build(node.inner)
            remaining: Optional[Expr] = node.expr
            if isinstance(node.inner, BGP) and isinstance(inner, JoinNode):
                remaining = push_filters(inner, node.expr)
            return inner if remaining is None else FilterNode(inner, remaining)
        if isinstance(node, Join):
            left = build(node.left)
            right = build(node.right)
            return JoinNode([left, right])
        if isinstance(node, Union_):
            left = build(node.left)
            return UnionNode(left, build(node.right))
        if isinstance(node, LeftJoin):
            left = build(node.left)
            return LeftJoinNode(left, build(node.right), node.condition)
        raise TypeError(f"unknown graph pattern {node!r}")

    root = ModifierNode(build(query.pattern), query)
    return QueryPlan(root, sources)
