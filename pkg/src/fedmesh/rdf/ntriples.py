"""N-Triples reading and writing."""

from __future__ import annotations

import hashlib
import io
import re
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional, Union

from .store import Store
from .terms import Term, Triple, TermError, bnode, iri, literal

_IRI = r'<((?:[^<>"{}|^`\\\x00-\x20]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*)>'
_BNODE = r"_:([A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?)"
_LITERAL = r'"((?:[^"\\\n\r]|\\.)*)"(?:\^\^' + _IRI + r"|@([a-zA-Z]+(?:-[a-zA-Z0-9]+)*))?"

_SUBJECT = re.compile(r"[ \t]*(?:" + _IRI + "|" + _BNODE + ")")
_PREDICATE = re.compile(r"[ \t]+" + _IRI)
_OBJECT = re.compile(r"[ \t]*(?:" + _IRI + "|" + _BNODE + "|" + _LITERAL + ")")
_END = re.compile(r"[ \t]*\.[ \t]*(?:#.*)?$")
_BLANK = re.compile(r"[ \t]*(?:#.*)?$")

_UNESCAPE = re.compile(r"\\(?:u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8})|(.))")
_SIMPLE = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


class NTriplesError(ValueError):
    def __init__(self, line: int, fragment: str, reason: str = "malformed statement"):
        super().__init__(f"line {line}: {reason} near {fragment!r}")
        self.line = line
        self.fragment = fragment


def _unescape(text: str) -> str:
    if "\\" not in text:
        return text

    def sub(m):
        if m.group(3) is not None:
            if m.group(3) not in _SIMPLE:
                raise ValueError(f"bad escape \\{m.group(3)}")
            return _SIMPLE[m.group(3)]
        return chr(int(m.group(1) or m.group(2), 16))

    return _UNESCAPE.sub(sub, text)


def _parse_line(line: str, lineno: int, scope: str) -> Optional[Triple]:
    if _BLANK.match(line):
        return None

    def fail(pos, reason="malformed statement"):
        raise NTriplesError(lineno, line[pos : pos + 40].strip() or line.strip(), reason)

    m = _SUBJECT.match(line)
    if not m:
        fail(0, "expected subject")
    s = iri(_unescape(m.group(1))) if m.group(1) is not None else bnode(scope + m.group(2))
    pos = m.end()
    m = _PREDICATE.match(line, pos)
    if not m:
        fail(pos, "expected predicate")
    p = iri(_unescape(m.group(1)))
    pos = m.end()
    m = _OBJECT.match(line, pos)
    if not m:
        fail(pos, "expected object")
    o_iri, o_bnode, lex, dt, lang = m.groups()
    if o_iri is not None:
        o = iri(_unescape(o_iri))
    elif o_bnode is not None:
        o = bnode(scope + o_bnode)
    else:
        o = literal(_unescape(lex), _unescape(dt) if dt else None, lang)
    pos = m.end()
    if not _END.match(line, pos):
        fail(pos, "expected '.'")
    return Triple(s, p, o)


def parse_ntriples(
    source: Union[str, bytes, IO[bytes], IO[str]], document: Optional[str] = None
) -> Iterator[Triple]:
    """Yield triples from N-Triples text in input order.

    ``document`` scopes blank node labels: when given, every label is
    prefixed with it so that graphs from different files never share nodes.
    """
    if isinstance(source, bytes):
        source = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str):
        source = io.StringIO(source)
    scope = f"{document}_" if document else ""
    for lineno, line in enumerate(source, 1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.rstrip("\r\n")
        try:
            t = _parse_line(line, lineno, scope)
        except (TermError, ValueError) as exc:
            if isinstance(exc, NTriplesError):
                raise
            raise NTriplesError(lineno, line.strip()[:40], str(exc)) from None
        if t is not None:
            yield t


def serialize_ntriples(triples: Iterable[Triple]) -> str:
    return "".join(t.n3() + "\n" for t in triples)


def document_id(path: Union[str, Path]) -> str:
    """Stable blank-node scope for a file, derived from its resolved path."""
    return "d" + hashlib.sha1(str(Path(path).resolve()).encode()).hexdigest()[:10]


def load_ntriples(paths: Iterable[Union[str, Path]], store: Optional[Store] = None) -> Store:
    store = Store() if store is None else store
    for path in paths:
        with open(path, "rb") as fh:
            store.update(parse_ntriples(fh, document=document_id(path)))
    return store
