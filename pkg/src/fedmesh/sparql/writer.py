"""Render a :class:`Query` back to SPARQL text (absolute IRIs, no prefixes)."""

from __future__ import annotations

from ..rdf.terms import Term, Variable, escape_string
from .ast import BGP, BinOp, Call, Filter, GraphPattern, Join, LeftJoin, Not, Query, Union_

_CALL_NAMES = {"isiri": "isIRI", "isuri": "isURI", "isliteral": "isLiteral",
               "isblank": "isBlank", "sameterm": "sameTerm"}


def expr_to_sparql(expr) -> str:
    if isinstance(expr, (Term, Variable)):
        return expr.n3()
    if isinstance(expr, BinOp):
        if expr.op in ("&&", "||"):
            # flatten left-nested chains so long conjunctions do not nest parentheses
            parts = [expr.right]
            left = expr.left
            while isinstance(left, BinOp) and left.op == expr.op:
                parts.append(left.right)
                left = left.left
            parts.append(left)
            return "(" + f" {expr.op} ".join(expr_to_sparql(p) for p in reversed(parts)) + ")"
        return f"({expr_to_sparql(expr.left)} {expr.op} {expr_to_sparql(expr.right)})"
    if isinstance(expr, Not):
        return f"(!{expr_to_sparql(expr.arg)})"
    if isinstance(expr, Call):
        args = ", ".join(expr_to_sparql(a) for a in expr.args)
        return f"{_CALL_NAMES.get(expr.name, expr.name.upper())}({args})"
    raise TypeError(f"cannot render {expr!r}")


def pattern_to_sparql(node: GraphPattern) -> str:
    """Render a graph pattern as a braced group."""
    if isinstance(node, BGP):
        return "{ " + "".join(tp.n3() + " . " for tp in node.patterns) + "}"
    if isinstance(node, Join):
        return "{ " + pattern_to_sparql(node.left) + " " + pattern_to_sparql(node.right) + " }"
    if isinstance(node, Union_):
        return "{ " + pattern_to_sparql(node.left) + " UNION " + pattern_to_sparql(node.right) + " }"
    if isinstance(node, LeftJoin):
        right = node.right if node.condition is None else Filter(node.right, node.condition)
        return "{ " + pattern_to_sparql(node.left) + " OPTIONAL " + pattern_to_sparql(right) + " }"
    if isinstance(node, Filter):
        return "{ " + pattern_to_sparql(node.inner) + " FILTER " + expr_to_sparql(node.expr) + " }"
    raise TypeError(f"cannot render {node!r}")


def query_to_sparql(query: Query) -> str:
    where = pattern_to_sparql(query.pattern)
    if query.form == "ASK":
        return f"ASK {where}"
    parts = ["SELECT"]
    if query.distinct:
        parts.append("DISTINCT")
    if query.projection is None:
        parts.append("*")
    else:
        for v in query.projection:
            agg = query.aggregates.get(v)
            if agg is None:
                parts.append("?" + v)
            else:
                arg = "*" if agg.var is None else "?" + agg.var
                d = "DISTINCT " if agg.distinct else ""
                parts.append(f"(COUNT({d}{arg}) AS ?{v})")
    parts.append("WHERE " + where)
    if query.group_by is not None:
        parts.append("GROUP BY " + " ".join("?" + v for v in query.group_by))
    if query.order_by:
        parts.append("ORDER BY " + " ".join(
            f"DESC(?{c.var})" if c.descending else f"?{c.var}" for c in query.order_by))
    if query.limit is not None:
        parts.append(f"LIMIT {query.limit}")
    if query.offset is not None:
        parts.append(f"OFFSET {query.offset}")
    return " ".join(parts)
