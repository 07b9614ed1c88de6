"""Single-store query evaluation.

This is both the query engine behind in-process and HTTP endpoints and the
centralized reference that federated answers are compared against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..rdf.store import BindingRow, Store
from ..rdf.terms import XSD_INTEGER, Term, TriplePattern, literal
from .ast import BGP, Filter, GraphPattern, Join, LeftJoin, Query, Union_
from .expressions import order_key, holds


@dataclass
class SolutionSeq:
    variables: list[str]
    rows: list[BindingRow] = field(default_factory=list)
    boolean: Optional[bool] = None  # set for ASK results

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def distinct_rows(self) -> set[frozenset]:
        return {frozenset(r.items()) for r in self.rows}

    def row_multiset(self) -> dict[frozenset, int]:
        out: dict[frozenset, int] = {}
        for r in self.rows:
            k = frozenset(r.items())
            out[k] = out.get(k, 0) + 1
        return out


# -- row algebra (shared with the mediator) ----------------------------------


def compatible(a: BindingRow, b: BindingRow) -> bool:
    if len(a) > len(b):
        a, b = b, a
    for k, v in a.items():
        w = b.get(k)
        if w is not None and w != v:
            return False
    return True


def _always_bound(rows: list[BindingRow]) -> set[str]:
    if not rows:
        return set()
    common = set(rows[0])
    for r in rows[1:]:
        common.intersection_update(r)
        if not common:
            break
    return common


def _index(rows: list[BindingRow], keys: list[str]) -> dict[tuple, list[BindingRow]]:
    idx: dict[tuple, list[BindingRow]] = {}
    for r in rows:
        idx.setdefault(tuple(r[k] for k in keys), []).append(r)
    return idx


def join_rows(left: list[BindingRow], right: list[BindingRow]) -> list[BindingRow]:
    """Compatible-merge join; hashes on variables bound in every row of both sides."""
    if not left or not right:
        return []
    keys = sorted(_always_bound(left) & _always_bound(right))
    out = []
    if keys:
        idx = _index(right, keys)
        for l in left:
            for r in idx.get(tuple(l[k] for k in keys), ()):
                if compatible(l, r):
                    out.append({**l, **r})
    else:
        for l in left:
            for r in right:
                if compatible(l, r):
                    out.append({**l, **r})
    return out


def left_join_rows(left: list[BindingRow], right: list[BindingRow], condition=None) -> list[BindingRow]:
    keys = sorted(_always_bound(left) & _always_bound(right)) if right else []
    idx = _index(right, keys) if keys else None
    out = []
    for l in left:
        candidates = idx.get(tuple(l[k] for k in keys), ()) if idx is not None else right
        matched = False
        for r in candidates:
            if compatible(l, r):
                merged = {**l, **r}
                if condition is None or holds(condition, merged):
                    out.append(merged)
                    matched = True
        if not matched:
            out.append(l)
    return out


def filter_rows(rows: Iterable[BindingRow], expr) -> list[BindingRow]:
    return [r for r in rows if holds(expr, r)]


# -- pattern evaluation ------------------------------------------------------


def evaluate_bgp(patterns: Iterable[TriplePattern], store: Store,
                 seed: Optional[list[BindingRow]] = None) -> list[BindingRow]:
    """Index nested loops, most selective pattern first."""
    remaining = list(patterns)
    rows = seed if seed is not None else [{}]
    bound: set[str] = set().union(*(r.keys() for r in rows)) if rows else set()
    counts = {i: store.count(tp) for i, tp in enumerate(remaining)}
    order = list(range(len(remaining)))
    while order and rows:
        connected = [i for i in order if remaining[i].variables & bound]
        pool = connected or order
        i = min(pool, key=lambda j: (counts[j], j))
        order.remove(i)
        tp = remaining[i]
        new_rows = []
        for r in rows:
            inst = tp.bind(r)
            for m in store.match(inst):
                if m:
                    new_rows.append({**r, **m})
                else:
                    new_rows.append(r)
        rows = new_rows
        bound |= tp.variables
    return rows


def evaluate_pattern(node: GraphPattern, store: Store) -> list[BindingRow]:
    if isinstance(node, BGP):
        return evaluate_bgp(node.patterns, store)
    if isinstance(node, Join):
        return join_rows(evaluate_pattern(node.left, store), evaluate_pattern(node.right, store))
    if isinstance(node, Union_):
        return evaluate_pattern(node.left, store) + evaluate_pattern(node.right, store)
    if isinstance(node, LeftJoin):
        return left_join_rows(evaluate_pattern(node.left, store),
                              evaluate_pattern(node.right, store), node.condition)
    if isinstance(node, Filter):
        return filter_rows(evaluate_pattern(node.inner, store), node.expr)
    raise TypeError(f"unknown graph pattern {node!r}")


# -- solution modifiers ------------------------------------------------------


def _row_key(row: BindingRow) -> frozenset:
    return frozenset(row.items())


def aggregate_rows(rows: list[BindingRow], query: Query) -> list[BindingRow]:
    keys = query.group_by or []
    groups: dict[tuple, list[BindingRow]] = {}
    for r in rows:
        groups.setdefault(tuple(r.get(k) for k in keys), []).append(r)
    if not keys and not groups:
        groups[()] = []
    out = []
    for key, members in groups.items():
        res: BindingRow = {k: v for k, v in zip(keys, key) if v is not None}
        for alias, agg in query.aggregates.items():
            if agg.var is None:
                n = len({_row_key(m) for m in members}) if agg.distinct else len(members)
            else:
                vals = [m[agg.var] for m in members if agg.var in m]
                n = len(set(vals)) if agg.distinct else len(vals)
            res[alias] = literal(str(n), XSD_INTEGER)
        out.append(res)
    return out


def order_rows(rows: list[BindingRow], conditions) -> list[BindingRow]:
    rows = list(rows)
    for cond in reversed(conditions):
        rows.sort(key=lambda r: order_key(r.get(cond.var)), reverse=cond.descending)
    return rows


def distinct(rows: list[BindingRow]) -> list[BindingRow]:
    seen = set()
    out = []
    for r in rows:
        k = _row_key(r)
        if k not in seen:
            seen.add(k)
            out.append(r)
    return out


def apply_modifiers(rows: list[BindingRow], query: Query) -> SolutionSeq:
    """Grouping, ordering, projection, DISTINCT, OFFSET, LIMIT, in that order."""
    if query.form == "ASK":
        return SolutionSeq([], [], boolean=bool(rows))
    if query.group_by is not None or query.aggregates:
        rows = aggregate_rows(rows, query)
    if query.order_by:
        rows = order_rows(rows, query.order_by)
    variables = query.result_variables()
    wanted = set(variables)
    rows = [{k: v for k, v in r.items() if k in wanted} for r in rows]
    if query.distinct:
        rows = distinct(rows)
    start = query.offset or 0
    stop = None if query.limit is None else start + query.limit
    if start or stop is not None:
        rows = rows[start:stop]
    return SolutionSeq(variables, rows)


def evaluate(query: Query, store: Store) -> SolutionSeq:
    rows = evaluate_pattern(query.pattern, store)
    return apply_modifiers(rows, query)
