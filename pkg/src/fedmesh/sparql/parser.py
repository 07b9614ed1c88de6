"""Recursive-descent parser for the SPARQL subset.

Supported: SELECT/ASK, PREFIX/BASE, basic graph patterns (with ``;`` and
``,`` abbreviations and ``a``), UNION, OPTIONAL, FILTER, DISTINCT, LIMIT,
OFFSET, ORDER BY, GROUP BY and COUNT.  Constructs outside the subset raise
:class:`UnsupportedFeature` naming the construct.

Blank node labels (``_:x``) in a query denote that exact node rather than a
fresh variable; mediators rely on this to ship bound blank nodes to members.
"""

from __future__ import annotations

import re
from typing import Optional

from ..rdf.terms import (
    XSD, XSD_BOOLEAN, XSD_DECIMAL, XSD_DOUBLE, XSD_INTEGER, Term, TermError,
    TriplePattern, Variable, bnode, iri, literal,
)
from .ast import (
    BGP, BinOp, Call, Count, Filter, GraphPattern, Join, LeftJoin, Not,
    OrderCondition, Query, Union_, conjunction,
)

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"


class SparqlSyntaxError(ValueError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} at line {line}, column {col}")
        self.position = pos
        self.line = line
        self.column = col


class UnsupportedFeature(ValueError):
    def __init__(self, construct: str):
        super().__init__(f"unsupported SPARQL feature: {construct}")
        self.construct = construct


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\x00-\x20]*>)
  | (?P<string>\"\"\"(?:[^"\\]|\\.|"(?!""))*\"\"\"|'''(?:[^'\\]|\\.|'(?!''))*'''
              |"(?:[^"\\\n\r]|\\.)*"|'(?:[^'\\\n\r]|\\.)*')
  | (?P<var>[?$][A-Za-z0-9_]+)
  | (?P<bnode>_:[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?)
  | (?P<lang>@[a-zA-Z]+(?:-[a-zA-Z0-9]+)*)
  | (?P<number>[+-]?(?:\d+\.\d*[eE][+-]?\d+|\.\d+[eE][+-]?\d+|\d+[eE][+-]?\d+|\d*\.\d+|\d+))
  | (?P<pname>(?:[A-Za-z](?:[\w\-.]*[\w\-])?)?:(?:[\w:%](?:[\w\-.:%]*[\w\-:%])?)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<punct>\^\^|&&|\|\||!=|<=|>=|[{}()\[\].;,*=<>!/|^+?\-])
    """,
    re.VERBOSE,
)

_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
_ESCAPE_RE = re.compile(r"\\(?:u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8})|(.))", re.S)

_UNSUPPORTED_KEYWORDS = {
    "SERVICE": "SERVICE", "VALUES": "VALUES", "BIND": "BIND", "MINUS": "MINUS",
    "GRAPH": "GRAPH", "FROM": "FROM", "CONSTRUCT": "CONSTRUCT query form",
    "DESCRIBE": "DESCRIBE query form", "HAVING": "HAVING", "SUM": "SUM aggregate",
    "AVG": "AVG aggregate", "MIN": "MIN aggregate", "MAX": "MAX aggregate",
    "SAMPLE": "SAMPLE aggregate", "GROUP_CONCAT": "GROUP_CONCAT aggregate",
    "INSERT": "SPARQL Update", "DELETE": "SPARQL Update", "LOAD": "SPARQL Update",
    "CLEAR": "SPARQL Update", "EXISTS": "EXISTS", "NOT": "NOT EXISTS",
}

_FUNCTIONS = {
    "regex": (2, 3), "bound": (1, 1), "str": (1, 1), "lang": (1, 1),
    "datatype": (1, 1), "isiri": (1, 1), "isuri": (1, 1), "isliteral": (1, 1),
    "isblank": (1, 1), "sameterm": (2, 2),
}


class Token:
    __slots__ = ("kind", "value", "pos")

    def __init__(self, kind: str, value: str, pos: int):
        self.kind = kind
        self.value = value
        self.pos = pos

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.value!r})"


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SparqlSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


def _unescape(body: str) -> str:
    def sub(m):
        if m.group(3) is not None:
            return _ESCAPES.get(m.group(3), m.group(3))
        return chr(int(m.group(1) or m.group(2), 16))

    return _ESCAPE_RE.sub(sub, body)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}
        self.base = ""

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = tok.value or "end of input"
        raise SparqlSyntaxError(f"{message} (found {found!r})", self.text, tok.pos)

    def is_kw(self, *words: str) -> bool:
        return self.tok.kind == "name" and self.tok.value.upper() in {w.upper() for w in words}

    def is_punct(self, *values: str) -> bool:
        return self.tok.kind == "punct" and self.tok.value in values

    def expect_kw(self, word: str) -> Token:
        if not self.is_kw(word):
            self.error(f"expected {word}")
        return self.advance()

    def expect_punct(self, value: str) -> Token:
        if not self.is_punct(value):
            self.error(f"expected {value!r}")
        return self.advance()

    def check_unsupported(self):
        if self.tok.kind == "name" and self.tok.value.upper() in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedFeature(_UNSUPPORTED_KEYWORDS[self.tok.value.upper()])

    # query

    def query(self) -> Query:
        self.prologue()
        self.check_unsupported()
        if self.is_kw("SELECT"):
            q = self.select()
        elif self.is_kw("ASK"):
            self.advance()
            self.check_unsupported()
            if self.is_kw("WHERE"):
                self.advance()
            q = Query("ASK", self.group())
            self.modifiers(q)
        else:
            self.error("expected SELECT or ASK")
        if self.tok.kind != "eof":
            self.check_unsupported()
            self.error("unexpected trailing input")
        q.prefixes = dict(self.prefixes)
        self.validate(q)
        return q

    def prologue(self):
        while True:
            if self.is_kw("PREFIX"):
                self.advance()
                t = self.advance()
                if t.kind != "pname" or not t.value.endswith(":") or t.value.count(":") != 1:
                    self.error("expected prefix name", t)
                ref = self.advance()
                if ref.kind != "iri":
                    self.error("expected IRI", ref)
                self.prefixes[t.value[:-1]] = self.resolve(ref.value[1:-1])
            elif self.is_kw("BASE"):
                self.advance()
                ref = self.advance()
                if ref.kind != "iri":
                    self.error("expected IRI", ref)
                self.base = ref.value[1:-1]
            else:
                return

    def resolve(self, ref: str) -> str:
        if self.base and not re.match(r"[A-Za-z][A-Za-z0-9+.\-]*:", ref):
            return self.base + ref
        return ref

    def select(self) -> Query:
        self.expect_kw("SELECT")
        distinct = False
        if self.is_kw("DISTINCT", "REDUCED"):
            distinct = self.advance().value.upper() == "DISTINCT"
        projection: Optional[list[str]] = []
        aggregates: dict[str, Count] = {}
        if self.is_punct("*"):
            self.advance()
            projection = None
        else:
            while True:
                if self.tok.kind == "var":
                    projection.append(self.advance().value[1:])
                elif self.is_punct("("):
                    alias, agg = self.aggregate()
                    projection.append(alias)
                    aggregates[alias] = agg
                else:
                    break
            if not projection:
                self.check_unsupported()
                self.error("expected projection")
        self.check_unsupported()
        if self.is_kw("WHERE"):
            self.advance()
        q = Query("SELECT", self.group(), projection=projection, distinct=distinct,
                  aggregates=aggregates)
        self.modifiers(q)
        return q

    def aggregate(self) -> tuple[str, Count]:
        self.expect_punct("(")
        self.check_unsupported()
        if not self.is_kw("COUNT"):
            self.error("expected COUNT aggregate")
        self.advance()
        self.expect_punct("(")
        distinct = False
        if self.is_kw("DISTINCT"):
            self.advance()
            distinct = True
        if self.is_punct("*"):
            self.advance()
            var = None
        elif self.tok.kind == "var":
            var = self.advance().value[1:]
        else:
            raise UnsupportedFeature("COUNT over an expression")
        self.expect_punct(")")
        self.expect_kw("AS")
        if self.tok.kind != "var":
            self.error("expected variable after AS")
        alias = self.advance().value[1:]
        self.expect_punct(")")
        return alias, Count(var, distinct)

    def modifiers(self, q: Query):
        if self.is_kw("GROUP"):
            self.advance()
            self.expect_kw("BY")
            q.group_by = []
            while self.tok.kind == "var":
                q.group_by.append(self.advance().value[1:])
            if not q.group_by:
                if self.is_punct("("):
                    raise UnsupportedFeature("GROUP BY expression")
                self.error("expected GROUP BY variable")
        self.check_unsupported()
        if self.is_kw("ORDER"):
            self.advance()
            self.expect_kw("BY")
            while True:
                if self.tok.kind == "var":
                    q.order_by.append(OrderCondition(self.advance().value[1:]))
                elif self.is_kw("ASC", "DESC"):
                    desc = self.advance().value.upper() == "DESC"
                    self.expect_punct("(")
                    if self.tok.kind != "var":
                        raise UnsupportedFeature("ORDER BY expression")
                    q.order_by.append(OrderCondition(self.advance().value[1:], desc))
                    self.expect_punct(")")
                elif self.is_punct("("):
                    raise UnsupportedFeature("ORDER BY expression")
                else:
                    break
            if not q.order_by:
                self.error("expected ORDER BY condition")
        while self.is_kw("LIMIT", "OFFSET"):
            word = self.advance().value.upper()
            t = self.advance()
            if t.kind != "number" or not t.value.isdigit():
                self.error(f"expected non-negative integer after {word}", t)
            if word == "LIMIT":
                q.limit = int(t.value)
            else:
                q.offset = int(t.value)

    def validate(self, q: Query):
        if q.form == "SELECT" and (q.group_by is not None or q.aggregates):
            if q.projection is None:
                raise SparqlSyntaxError("SELECT * is not allowed with GROUP BY", self.text, 0)
            keys = set(q.group_by or ())
            for v in q.projection:
                if v not in q.aggregates and v not in keys:
                    raise SparqlSyntaxError(
                        f"projected variable ?{v} is neither grouped nor aggregated", self.text, 0)

    # graph patterns

    def group(self) -> GraphPattern:
        self.expect_punct("{")
        acc: Optional[GraphPattern] = None
        pending: list[TriplePattern] = []
        filters = []

        def flush():
            nonlocal acc, pending
            if pending:
                bgp = BGP(tuple(pending))
                acc = bgp if acc is None else Join(acc, bgp)
                pending = []

        while not self.is_punct("}"):
            self.check_unsupported()
            if self.tok.kind == "eof":
                self.error("unterminated group")
            if self.is_punct("{"):
                if self.peek().kind == "name" and self.peek().value.upper() == "SELECT":
                    raise UnsupportedFeature("subquery")
                node = self.group()
                while self.is_kw("UNION"):
                    self.advance()
                    node = Union_(node, self.group())
                flush()
                acc = node if acc is None else Join(acc, node)
            elif self.is_kw("OPTIONAL"):
                self.advance()
                inner = self.group()
                flush()
                cond = None
                if isinstance(inner, Filter):
                    inner, cond = inner.inner, inner.expr
                acc = LeftJoin(acc if acc is not None else BGP(), inner, cond)
            elif self.is_kw("FILTER"):
                self.advance()
                filters.append(self.constraint())
            elif self.is_punct("."):
                self.advance()
            else:
                pending.extend(self.triples_same_subject())
                if not self.is_punct(".", "}"):
                    if self.is_kw("OPTIONAL", "FILTER") or self.is_punct("{"):
                        continue
                    self.check_unsupported()
                    self.error("expected '.' or '}'")
        self.advance()
        flush()
        node = acc if acc is not None else BGP()
        if filters:
            node = Filter(node, conjunction(filters))
        return node

    def triples_same_subject(self) -> list[TriplePattern]:
        subj = self.node(position="subject")
        out = []
        while True:
            pred = self.verb()
            while True:
                out.append(TriplePattern(subj, pred, self.node(position="object")))
                if not self.is_punct(","):
                    break
                self.advance()
            if not self.is_punct(";"):
                break
            while self.is_punct(";"):
                self.advance()
            if self.is_punct(".", "}") or self.is_kw("OPTIONAL", "FILTER"):
                break
        return out

    def verb(self):
        if self.is_punct("^", "(", "!"):
            raise UnsupportedFeature("property paths")
        if self.tok.kind == "name" and self.tok.value == "a":
            self.advance()
            pred = iri(RDF_TYPE)
        elif self.tok.kind == "var":
            pred = Variable(self.advance().value[1:])
        elif self.tok.kind in ("iri", "pname"):
            pred = self.iri_ref()
        elif self.tok.kind in ("bnode", "string", "number"):
            # never matches, but bound joins may instantiate a predicate variable this way
            pred = self.node(position="predicate")
        else:
            self.error("expected predicate")
        if self.is_punct("/", "|", "*", "+", "?"):
            raise UnsupportedFeature("property paths")
        return pred

    def node(self, position: str):
        t = self.tok
        if t.kind == "var":
            self.advance()
            return Variable(t.value[1:])
        if t.kind in ("iri", "pname"):
            return self.iri_ref()
        if t.kind == "bnode":
            self.advance()
            return bnode(t.value[2:])
        if self.is_punct("["):
            raise UnsupportedFeature("anonymous blank nodes")
        if self.is_punct("("):
            raise UnsupportedFeature("RDF collections")
        if t.kind in ("string", "number") or self.is_kw("true", "false"):
            return self.literal_term()
        self.check_unsupported()
        self.error(f"expected {position}")

    def iri_ref(self) -> Term:
        t = self.advance()
        try:
            if t.kind == "iri":
                return iri(self.resolve(t.value[1:-1]))
            prefix, _, local = t.value.partition(":")
            if prefix not in self.prefixes:
                self.error(f"undeclared prefix {prefix!r}", t)
            local = re.sub(r"\\(.)", r"\1", local)
            return iri(self.prefixes[prefix] + local)
        except TermError as exc:
            self.error(str(exc), t)

    def literal_term(self) -> Term:
        t = self.advance()
        if t.kind == "number":
            v = t.value
            if "e" in v.lower():
                return literal(v, XSD_DOUBLE)
            if "." in v:
                return literal(v, XSD_DECIMAL)
            return literal(v, XSD_INTEGER)
        if t.kind == "name":
            return literal(t.value.lower(), XSD_BOOLEAN)
        body = t.value[3:-3] if t.value[:3] in ('"""', "'''") else t.value[1:-1]
        lex = _unescape(body)
        if self.tok.kind == "lang":
            return literal(lex, language=self.advance().value[1:])
        if self.is_punct("^^"):
            self.advance()
            if self.tok.kind not in ("iri", "pname"):
                self.error("expected datatype IRI")
            return literal(lex, self.iri_ref().lexical)
        return literal(lex)

    # expressions

    def constraint(self):
        if self.is_punct("("):
            self.advance()
            e = self.expression()
            self.expect_punct(")")
            return e
        if self.tok.kind == "name":
            return self.call()
        self.check_unsupported()
        self.error("expected filter constraint")

    def expression(self):
        e = self.and_expr()
        while self.is_punct("||"):
            self.advance()
            e = BinOp("||", e, self.and_expr())
        return e

    def and_expr(self):
        e = self.relational()
        while self.is_punct("&&"):
            self.advance()
            e = BinOp("&&", e, self.relational())
        return e

    def relational(self):
        e = self.unary()
        if self.is_punct("=", "!=", "<", ">", "<=", ">="):
            op = self.advance().value
            e = BinOp(op, e, self.unary())
        elif self.is_kw("IN"):
            raise UnsupportedFeature("IN")
        if self.is_punct("+", "-", "*", "/"):
            raise UnsupportedFeature("arithmetic expressions")
        return e

    def unary(self):
        if self.is_punct("!"):
            self.advance()
            return Not(self.unary())
        if self.is_punct("-", "+"):
            raise UnsupportedFeature("arithmetic expressions")
        return self.primary()

    def primary(self):
        t = self.tok
        if self.is_punct("("):
            self.advance()
            e = self.expression()
            self.expect_punct(")")
            return e
        if t.kind == "var":
            self.advance()
            return Variable(t.value[1:])
        if t.kind in ("iri", "pname"):
            return self.iri_ref()
        if t.kind in ("string", "number") or self.is_kw("true", "false"):
            return self.literal_term()
        if t.kind == "name":
            return self.call()
        self.error("expected expression")

    def call(self) -> Call:
        self.check_unsupported()
        t = self.advance()
        name = t.value.lower()
        if name not in _FUNCTIONS:
            raise UnsupportedFeature(f"function {t.value}")
        self.expect_punct("(")
        args = []
        if not self.is_punct(")"):
            args.append(self.expression())
            while self.is_punct(","):
                self.advance()
                args.append(self.expression())
        self.expect_punct(")")
        lo, hi = _FUNCTIONS[name]
        if not lo <= len(args) <= hi:
            self.error(f"wrong number of arguments to {t.value}", t)
        if name == "bound" and not isinstance(args[0], Variable):
            self.error("BOUND expects a variable", t)
        return Call(name, tuple(args))


def parse_query(text: str) -> Query:
    """Parse query text into a :class:`Query`; prefixed names are expanded."""
    return _Parser(text).query()
