"""FILTER expression evaluation and the total term order used by ORDER BY.

Type errors raise :class:`ExprError`; callers treat an error as "not true"
so the row is dropped instead of aborting the query.
"""

from __future__ import annotations

import re
from decimal import Decimal, InvalidOperation
from functools import lru_cache
from typing import Optional

from ..rdf.terms import (
    BNODE, IRI, LITERAL, XSD, XSD_BOOLEAN, XSD_DECIMAL, XSD_DOUBLE, XSD_STRING,
    NUMERIC_TYPES, Term, Variable, iri, literal,
)
from .ast import BinOp, Call, Expr, Not

TRUE = literal("true", XSD_BOOLEAN)
FALSE = literal("false", XSD_BOOLEAN)
RDF_LANGSTRING = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString"


class ExprError(Exception):
    pass


def numeric_value(term: Term):
    """Python number for a numeric literal, or None if not numeric/ill-formed."""
    if term.kind != LITERAL or term.datatype not in NUMERIC_TYPES:
        return None
    lex = term.lexical.strip()
    try:
        if term.datatype in (XSD_DOUBLE, XSD + "float"):
            return float(lex)
        if term.datatype == XSD_DECIMAL:
            return Decimal(lex)
        return int(lex)
    except (ValueError, InvalidOperation):
        return None


def _is_string(term: Term) -> bool:
    return term.kind == LITERAL and term.language is None and term.datatype in (None, XSD_STRING)


def _bool(value: bool) -> Term:
    return TRUE if value else FALSE


def ebv(term: Term) -> bool:
    """Effective boolean value."""
    if term.kind != LITERAL:
        raise ExprError("no boolean value for non-literal")
    if term.datatype == XSD_BOOLEAN:
        return term.lexical in ("true", "1")
    if term.datatype in NUMERIC_TYPES:
        v = numeric_value(term)
        return bool(v) and v == v
    if term.datatype in (None, XSD_STRING) or term.language is not None:
        return term.lexical != ""
    raise ExprError(f"no boolean value for {term.n3()}")


def _compare(op: str, a: Term, b: Term) -> bool:
    na, nb = numeric_value(a), numeric_value(b)
    if na is not None and nb is not None:
        x, y = na, nb
    elif _is_string(a) and _is_string(b):
        x, y = a.lexical, b.lexical
    elif (a.kind == LITERAL and a.datatype == XSD_BOOLEAN
          and b.kind == LITERAL and b.datatype == XSD_BOOLEAN):
        x, y = ebv(a), ebv(b)
    elif op in ("=", "!="):
        if a == b:
            return op == "="
        if (a.kind == LITERAL and b.kind == LITERAL
                and (a.datatype not in (None, XSD_STRING) or b.datatype not in (None, XSD_STRING))
                and a.language is None and b.language is None):
            raise ExprError("cannot compare literals of unknown datatypes")
        return op == "!="
    else:
        raise ExprError(f"cannot order {a.n3()} and {b.n3()}")
    if op == "=":
        return x == y
    if op == "!=":
        return x != y
    if op == "<":
        return x < y
    if op == ">":
        return x > y
    if op == "<=":
        return x <= y
    return x >= y


@lru_cache(maxsize=256)
def _regex(pattern: str, flags: str) -> re.Pattern:
    f = 0
    for ch in flags:
        if ch == "i":
            f |= re.IGNORECASE
        elif ch == "s":
            f |= re.DOTALL
        elif ch == "m":
            f |= re.MULTILINE
        elif ch == "x":
            f |= re.VERBOSE
        else:
            raise ExprError(f"bad regex flag {ch!r}")
    try:
        return re.compile(pattern, f)
    except re.error as exc:
        raise ExprError(str(exc)) from None


def evaluate_expr(expr: Expr, row: dict[str, Term]) -> Term:
    if isinstance(expr, Variable):
        try:
            return row[expr.name]
        except KeyError:
            raise ExprError(f"unbound variable ?{expr.name}") from None
    if isinstance(expr, Term):
        return expr
    if isinstance(expr, Not):
        return _bool(not ebv(evaluate_expr(expr.arg, row)))
    if isinstance(expr, BinOp):
        if expr.op in ("&&", "||"):
            return _logical(expr, row)
        return _bool(_compare(expr.op, evaluate_expr(expr.left, row), evaluate_expr(expr.right, row)))
    if isinstance(expr, Call):
        return _call(expr, row)
    raise ExprError(f"unknown expression {expr!r}")


def _logical(expr: BinOp, row) -> Term:
    # errors only propagate when the other operand cannot decide the result
    try:
        left: Optional[bool] = ebv(evaluate_expr(expr.left, row))
    except ExprError:
        left = None
    short = expr.op == "||"
    if left is short:
        return _bool(short)
    right = ebv(evaluate_expr(expr.right, row))
    if left is None:
        if right is short:
            return _bool(short)
        raise ExprError("error in logical operand")
    return _bool(right)


def _call(expr: Call, row) -> Term:
    name, args = expr.name, expr.args
    if name == "bound":
        return _bool(args[0].name in row)
    vals = [evaluate_expr(a, row) for a in args]
    if name == "regex":
        text, pat = vals[0], vals[1]
        flags = vals[2].lexical if len(vals) > 2 else ""
        if text.kind != LITERAL or text.datatype not in (None, XSD_STRING) or not _is_string(pat):
            raise ExprError("regex expects string arguments")
        return _bool(_regex(pat.lexical, flags).search(text.lexical) is not None)
    v = vals[0]
    if name == "str":
        if v.kind == BNODE:
            raise ExprError("str of a blank node")
        return literal(v.lexical)
    if name == "lang":
        if v.kind != LITERAL:
            raise ExprError("lang of a non-literal")
        return literal(v.language or "")
    if name == "datatype":
        if v.kind != LITERAL:
            raise ExprError("datatype of a non-literal")
        if v.language:
            return iri(RDF_LANGSTRING)
        return iri(v.datatype or XSD_STRING)
    if name in ("isiri", "isuri"):
        return _bool(v.kind == IRI)
    if name == "isliteral":
        return _bool(v.kind == LITERAL)
    if name == "isblank":
        return _bool(v.kind == BNODE)
    if name == "sameterm":
        return _bool(vals[0] == vals[1])
    raise ExprError(f"unknown function {name}")


def holds(expr: Expr, row: dict[str, Term]) -> bool:
    """True iff the expression's effective boolean value is true (errors -> False)."""
    try:
        return ebv(evaluate_expr(expr, row))
    except ExprError:
        return False




_KIND_RANK = {BNODE: 1, IRI: 2, LITERAL: 3}


def order_key(term: Optional[Term]) -> tuple:
    """Total order: unbound < blank nodes < IRIs < literals.

    Numeric literals sort before other literals and compare by value among
    themselves; everything else compares by lexical form (code point order,
    which equals UTF-8 byte order).
    """
    if term is None:
        return (0,)
    rank = _KIND_RANK[term.kind]
    if rank != 3:
        return (rank, term.lexical)
    v = numeric_value(term)
    if v is not None and v == v:
        return (3, 0, v, term.lexical, term.datatype)
    return (3, 1, term.lexical, term.datatype or "", term.language or "")
