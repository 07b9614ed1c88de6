"""SPARQL 1.1 Query Results JSON format."""

from __future__ import annotations

import json
from typing import Union

from ..rdf.terms import BNODE, IRI, Term, bnode, iri, literal
from .evaluate import SolutionSeq

MEDIA_TYPE = "application/sparql-results+json"


def term_to_json(term: Term) -> dict:
    if term.kind == IRI:
        return {"type": "uri", "value": term.lexical}
    if term.kind == BNODE:
        return {"type": "bnode", "value": term.lexical}
    out = {"type": "literal", "value": term.lexical}
    if term.language:
        out["xml:lang"] = term.language
    elif term.datatype:
        out["datatype"] = term.datatype
    return out


def term_from_json(obj: dict) -> Term:
    kind = obj["type"]
    if kind == "uri":
        return iri(obj["value"])
    if kind == "bnode":
        return bnode(obj["value"])
    if kind in ("literal", "typed-literal"):
        return literal(obj["value"], obj.get("datatype"), obj.get("xml:lang"))
    raise ValueError(f"unknown binding type {kind!r}")


def results_to_dict(results: SolutionSeq) -> dict:
    if results.boolean is not None:
        return {"head": {}, "boolean": results.boolean}
    return {
        "head": {"vars": list(results.variables)},
        "results": {
            "bindings": [{k: term_to_json(v) for k, v in row.items()} for row in results.rows]
        },
    }


def serialize_results(results: SolutionSeq) -> bytes:
    return json.dumps(results_to_dict(results), ensure_ascii=False).encode("utf-8")


def parse_results(data: Union[bytes, str, dict]) -> SolutionSeq:
    doc = data if isinstance(data, dict) else json.loads(data)
    if "boolean" in doc:
        return SolutionSeq([], [], boolean=bool(doc["boolean"]))
    variables = list(doc.get("head", {}).get("vars", []))
    rows = [
        {k: term_from_json(v) for k, v in b.items()}
        for b in doc.get("results", {}).get("bindings", [])
    ]
    return SolutionSeq(variables, rows)
