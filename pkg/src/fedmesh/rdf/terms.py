"""RDF terms, triples and triple patterns.

Terms are plain named tuples so that hashing and equality stay in C; the
helper constructors (:func:`iri`, :func:`literal`, :func:`bnode`) perform the
validation that the tuple type itself cannot.
"""

from __future__ import annotations

import re
from typing import NamedTuple, Optional, Union

IRI = "iri"
LITERAL = "literal"
BNODE = "bnode"

XSD = "http://www.w3.org/2001/XMLSchema#"
XSD_STRING = XSD + "string"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_DOUBLE = XSD + "double"
XSD_BOOLEAN = XSD + "boolean"

NUMERIC_TYPES = frozenset(
    XSD + t
    for t in (
        "integer", "decimal", "double", "float", "int", "long", "short", "byte",
        "nonNegativeInteger", "positiveInteger", "negativeInteger",
        "nonPositiveInteger", "unsignedInt", "unsignedLong", "unsignedShort",
        "unsignedByte",
    )
)


class TermError(ValueError):
    pass


class Term(NamedTuple):
    kind: str
    lexical: str
    datatype: Optional[str] = None
    language: Optional[str] = None

    @property
    def is_iri(self) -> bool:
        return self.kind == IRI

    @property
    def is_literal(self) -> bool:
        return self.kind == LITERAL

    @property
    def is_bnode(self) -> bool:
        return self.kind == BNODE

    @property
    def is_numeric(self) -> bool:
        return self.kind == LITERAL and self.datatype in NUMERIC_TYPES

    def n3(self) -> str:
        """Render in N-Triples / SPARQL syntax."""
        if self.kind == IRI:
            return f"<{self.lexical}>"
        if self.kind == BNODE:
            return f"_:{self.lexical}"
        text = '"' + escape_string(self.lexical) + '"'
        if self.language:
            return f"{text}@{self.language}"
        if self.datatype:
            return f"{text}^^<{self.datatype}>"
        return text

    def __str__(self) -> str:
        return self.n3()


class Variable(NamedTuple):
    name: str

    def n3(self) -> str:
        return "?" + self.name

    def __str__(self) -> str:
        return self.n3()


Node = Union[Term, Variable]


_SPACE = re.compile(r"\s")


def iri(value: str) -> Term:
    if not value or _SPACE.search(value):
        raise TermError(f"invalid IRI: {value!r}")
    return Term(IRI, value)


def literal(value: str, datatype: Optional[str] = None, language: Optional[str] = None) -> Term:
    if datatype is not None and language is not None:
        raise TermError("a literal cannot carry both a datatype and a language tag")
    if language is not None:
        language = language.lower()
    return Term(LITERAL, value, datatype, language)


def bnode(label: str) -> Term:
    if not label:
        raise TermError("empty blank node label")
    return Term(BNODE, label)


def typed(value: object) -> Term:
    """Build a literal from a Python value (int, float, bool or str)."""
    if isinstance(value, bool):
        return literal("true" if value else "false", XSD_BOOLEAN)
    if isinstance(value, int):
        return literal(str(value), XSD_INTEGER)
    if isinstance(value, float):
        return literal(repr(value), XSD_DOUBLE)
    return literal(str(value))


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def escape_string(value: str) -> str:
    return "".join(_ESCAPES.get(c, c) for c in value)


class Triple(NamedTuple):
    subject: Term
    predicate: Term
    object: Term

    @classmethod
    def checked(cls, s: Term, p: Term, o: Term) -> "Triple":
        if s.kind == LITERAL:
            raise TermError(f"literal in subject position: {s.n3()}")
        if p.kind != IRI:
            raise TermError(f"predicate must be an IRI: {p.n3()}")
        return cls(s, p, o)

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."


class TriplePattern(NamedTuple):
    subject: Node
    predicate: Node
    object: Node

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(n.name for n in self if isinstance(n, Variable))

    @property
    def is_ground(self) -> bool:
        return not any(isinstance(n, Variable) for n in self)

    def bind(self, row: dict[str, Term]) -> "TriplePattern":
        """Substitute the variables bound in ``row``."""
        return TriplePattern(*(row.get(n.name, n) if isinstance(n, Variable) else n for n in self))

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()}"

    def __str__(self) -> str:
        return self.n3()


def pattern(s: Node | str, p: Node | str, o: Node | str) -> TriplePattern:
    """Shorthand: strings starting with ``?`` become variables, others IRIs."""

    def conv(x):
        if isinstance(x, str):
            return Variable(x[1:]) if x.startswith("?") else iri(x)
        return x

    return TriplePattern(conv(s), conv(p), conv(o))
