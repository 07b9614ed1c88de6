"""Naive reference evaluator used as a test oracle.

Deliberately simple: no indexes, no join ordering, every pattern is matched
by scanning the full triple list, and expressions are interpreted directly.
It shares only the query tree types with the package.
"""

from __future__ import annotations

import re
from decimal import Decimal, InvalidOperation

from fedmesh.rdf.terms import Term, Variable
from fedmesh.sparql.ast import BGP, BinOp, Call, Filter, Join, LeftJoin, Not, Union_

XSD = "http://www.w3.org/2001/XMLSchema#"
NUMERIC = {XSD + t for t in ("integer", "decimal", "double", "float", "int", "long")}


class _Err(Exception):
    pass


def _unify(tp, triple, row):
    out = dict(row)
    for node, term in zip(tp, triple):
        if isinstance(node, Variable):
            if node.name in out and out[node.name] != term:
                return None
            out[node.name] = term
        elif node != term:
            return None
    return out


def _compatible(a, b):
    return all(b.get(k, v) == v for k, v in a.items())


def _num(t):
    if isinstance(t, Term) and t.kind == "literal" and t.datatype in NUMERIC:
        try:
            return Decimal(t.lexical)
        except InvalidOperation:
            raise _Err()
    return None


def _value(expr, row):
    if isinstance(expr, Variable):
        if expr.name not in row:
            raise _Err()
        return row[expr.name]
    if isinstance(expr, Term):
        return expr
    return _bool_term(_truth(expr, row))


def _bool_term(b):
    return Term("literal", "true" if b else "false", XSD + "boolean")


def _ebv(t):
    if t.kind != "literal":
        raise _Err()
    if t.datatype == XSD + "boolean":
        return t.lexical in ("true", "1")
    n = _num(t)
    if n is not None:
        return n != 0
    if t.datatype in (None, XSD + "string") and t.language is None:
        return t.lexical != ""
    raise _Err()


def _cmp(op, a, b):
    na, nb = _num(a), _num(b)
    if na is not None and nb is not None:
        x, y = na, nb
    elif op in ("=", "!="):
        return (a == b) == (op == "=")
    elif (a.kind == b.kind == "literal" and a.datatype == b.datatype
          and a.language == b.language and na is None and nb is None):
        x, y = a.lexical, b.lexical
    else:
        raise _Err()
    return {"=": x == y, "!=": x != y, "<": x < y, ">": x > y, "<=": x <= y, ">=": x >= y}[op]


def _truth(expr, row):
    """True/False, raising _Err on a type error."""
    if isinstance(expr, BinOp):
        if expr.op in ("&&", "||"):
            vals = []
            for side in (expr.left, expr.right):
                try:
                    vals.append(_truth(side, row))
                except _Err:
                    vals.append(None)
            if expr.op == "&&":
                if False in vals:
                    return False
                if None in vals:
                    raise _Err()
                return True
            if True in vals:
                return True
            if None in vals:
                raise _Err()
            return False
        return _cmp(expr.op, _value(expr.left, row), _value(expr.right, row))
    if isinstance(expr, Not):
        return not _truth(expr.arg, row)
    if isinstance(expr, Call):
        name, args = expr.name, expr.args
        if name == "bound":
            return args[0].name in row
        if name in ("isiri", "isuri"):
            return _value(args[0], row).kind == "iri"
        if name == "isliteral":
            return _value(args[0], row).kind == "literal"
        if name == "isblank":
            return _value(args[0], row).kind == "bnode"
        if name == "sameterm":
            return _value(args[0], row) == _value(args[1], row)
        if name == "regex":
            text = _value(args[0], row)
            if text.kind != "literal":
                raise _Err()
            flags = re.I if len(args) > 2 and "i" in _value(args[2], row).lexical else 0
            return re.search(_value(args[1], row).lexical, text.lexical, flags) is not None
        raise NotImplementedError(name)
    return _ebv(_value(expr, row))


def holds(expr, row):
    try:
        return _truth(expr, row)
    except _Err:
        return False


def eval_pattern(node, triples):
    if isinstance(node, BGP):
        rows = [{}]
        for tp in node.patterns:
            rows = [r2 for r in rows for t in triples if (r2 := _unify(tp, t, r)) is not None]
        return rows
    if isinstance(node, Join):
        left, right = eval_pattern(node.left, triples), eval_pattern(node.right, triples)
        return [{**a, **b} for a in left for b in right if _compatible(a, b)]
    if isinstance(node, Union_):
        return eval_pattern(node.left, triples) + eval_pattern(node.right, triples)
    if isinstance(node, LeftJoin):
        left, right = eval_pattern(node.left, triples), eval_pattern(node.right, triples)
        out = []
        for a in left:
            ext = [{**a, **b} for b in right if _compatible(a, b)]
            if node.condition is not None:
                ext = [m for m in ext if holds(node.condition, m)]
            out.extend(ext or [a])
        return out
    if isinstance(node, Filter):
        return [r for r in eval_pattern(node.inner, triples) if holds(node.expr, r)]
    raise TypeError(node)


def sort_key(t):
    if t is None:
        return (0,)
    if t.kind == "bnode":
        return (1, t.lexical)
    if t.kind == "iri":
        return (2, t.lexical)
    n = _num(t)
    if n is not None:
        return (3, 0, n)
    return (3, 1, t.lexical, t.datatype or "", t.language or "")


def evaluate(query, triples):
    """Rows after all solution modifiers (list of dicts), or a bool for ASK."""
    triples = list(triples)
    rows = eval_pattern(query.pattern, triples)
    if query.form == "ASK":
        return bool(rows)
    if query.group_by is not None or query.aggregates:
        groups = {}
        for r in rows:
            key = tuple(r.get(v) for v in (query.group_by or []))
            groups.setdefault(key, []).append(r)
        if not groups and not query.group_by:
            groups[()] = []
        rows = []
        for key, members in groups.items():
            out = {v: t for v, t in zip(query.group_by or [], key) if t is not None}
            for alias, agg in query.aggregates.items():
                if agg.var is None:
                    vals = [tuple(sorted(m.items())) for m in members]
                else:
                    vals = [m[agg.var] for m in members if agg.var in m]
                n = len(set(vals)) if agg.distinct else len(vals)
                out[alias] = Term("literal", str(n), XSD + "integer")
            rows.append(out)
    for cond in reversed(query.order_by):
        rows.sort(key=lambda r: sort_key(r.get(cond.var)), reverse=cond.descending)
    names = query.result_variables()
    rows = [{k: v for k, v in r.items() if k in names} for r in rows]
    if query.distinct:
        seen, out = set(), []
        for r in rows:
            k = frozenset(r.items())
            if k not in seen:
                seen.add(k)
                out.append(r)
        rows = out
    start = query.offset or 0
    end = None if query.limit is None else start + query.limit
    return rows[start:end]


def multiset(rows):
    out = {}
    for r in rows:
        k = frozenset(r.items())
        out[k] = out.get(k, 0) + 1
    return out
