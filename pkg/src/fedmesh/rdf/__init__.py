from .ntriples import NTriplesError, load_ntriples, parse_ntriples, serialize_ntriples
from .store import BindingRow, Store, merge_stores
from .terms import (
    BNODE, IRI, LITERAL, Term, TermError, Triple, TriplePattern, Variable,
    bnode, iri, literal, pattern, typed,
)

__all__ = [
    "BNODE", "IRI", "LITERAL", "BindingRow", "NTriplesError", "Store", "Term",
    "TermError", "Triple", "TriplePattern", "Variable", "bnode", "iri", "literal",
    "load_ntriples", "merge_stores", "parse_ntriples", "pattern", "serialize_ntriples",
    "typed",
]
