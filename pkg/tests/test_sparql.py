import pytest
from hypothesis import given, settings, strategies as st

from fedmesh.rdf import Store, Triple, Variable, bnode, iri, literal, typed
from fedmesh.sparql import (
    SolutionSeq, SparqlSyntaxError, UnsupportedFeature, evaluate, order_key, parse_query,
    parse_results, query_to_sparql, serialize_results,
)

import oracle
from conftest import EX, ex

PREFIX = f"PREFIX : <{EX}>\n"


def test_parse_basic_select():
    q = parse_query(PREFIX + "SELECT ?s ?o WHERE { ?s :p ?o ; a :T . ?s :q 1, \"x\"@en }")
    assert q.form == "SELECT" and q.result_variables() == ["s", "o"]
    assert len(q.patterns) == 4
    rdf_type = iri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type")
    assert q.patterns[1].predicate == rdf_type
    assert q.patterns[2].object == typed(1)
    assert q.patterns[3].object == literal("x", language="en")


def test_parse_modifiers_and_aggregates():
    q = parse_query(PREFIX + "SELECT DISTINCT ?g (COUNT(DISTINCT ?s) AS ?n) WHERE { ?s :g ?g } "
                    "GROUP BY ?g ORDER BY DESC(?n) ?g LIMIT 5 OFFSET 2")
    assert q.distinct and q.limit == 5 and q.offset == 2
    assert q.group_by == ["g"]
    assert q.aggregates["n"].distinct and q.aggregates["n"].var == "s"
    assert [c.descending for c in q.order_by] == [True, False]


def test_parse_ask_and_base():
    q = parse_query("BASE <http://b/> ASK { <x> <p> ?o }")
    assert q.form == "ASK"
    assert q.patterns[0].subject == iri("http://b/x")


def test_blank_node_labels_are_ground_terms():
    q = parse_query("SELECT * WHERE { _:n1 <http://p> ?o }")
    assert q.patterns[0].subject == bnode("n1")


@pytest.mark.parametrize("text, construct", [
    ("SELECT * WHERE { ?s ?p ?o MINUS { ?s ?p 1 } }", "MINUS"),
    ("SELECT * WHERE { SERVICE <http://x> { ?s ?p ?o } }", "SERVICE"),
    ("CONSTRUCT { ?s ?p ?o } WHERE { ?s ?p ?o }", "CONSTRUCT query form"),
    ("SELECT * WHERE { ?s ?p ?o } VALUES ?s { <http://a> }", "VALUES"),
    ("SELECT (SUM(?o) AS ?x) WHERE { ?s ?p ?o }", "SUM aggregate"),
    ("SELECT * WHERE { ?s ?p ?o BIND(1 AS ?x) }", "BIND"),
    ("SELECT * FROM <http://g> WHERE { ?s ?p ?o }", "FROM"),
    ("SELECT * WHERE { ?s ?p ?o FILTER(nosuchfn(?s)) }", "function nosuchfn"),
])
def test_unsupported_features_are_named(text, construct):
    with pytest.raises(UnsupportedFeature) as info:
        parse_query(text)
    assert info.value.construct == construct


@pytest.mark.parametrize("text", [
    "SELECT * WHERE { ?s ?p }",
    "SELECT * WHERE { ?s ?p ?o ",
    "SELECT * WHERE { ?s x:p ?o }",
    "SELECT ?s WHERE { ?s ?p ?o } LIMIT -1",
    "SELECT * WHERE { ?s ?p ?o } garbage",
])
def test_syntax_errors_carry_a_position(text):
    with pytest.raises(SparqlSyntaxError) as info:
        parse_query(text)
    assert info.value.line >= 1 and info.value.column >= 1


def _store():
    t = []
    for i in range(6):
        t.append(Triple(ex(f"e{i}"), ex("val"), typed(i)))
        t.append(Triple(ex(f"e{i}"), ex("name"), literal(f"n{i}")))
        if i % 2:
            t.append(Triple(ex(f"e{i}"), ex("next"), ex(f"e{(i + 1) % 6}")))
    return Store(t)


def test_optional_filter_union_semantics():
    store = _store()
    q = parse_query(PREFIX + "SELECT ?s ?n WHERE { ?s :val ?v OPTIONAL { ?s :next ?n } FILTER(?v >= 2) }")
    rows = evaluate(q, store).rows
    assert len(rows) == 4
    assert sum("n" in r for r in rows) == 2
    q = parse_query(PREFIX + "SELECT ?s WHERE { { ?s :val 1 } UNION { ?s :val 2 } }")
    assert {r["s"] for r in evaluate(q, store).rows} == {ex("e1"), ex("e2")}


def test_filter_errors_drop_rows():
    store = _store()
    q = parse_query(PREFIX + "SELECT ?s WHERE { ?s :name ?n FILTER(?n > 3) }")
    assert evaluate(q, store).rows == []
    q = parse_query(PREFIX + "SELECT ?s WHERE { ?s :name ?n FILTER(?n > 3 || regex(?n, \"^n1$\")) }")
    assert [r["s"] for r in evaluate(q, store).rows] == [ex("e1")]


def test_order_limit_offset_and_count():
    store = _store()
    q = parse_query(PREFIX + "SELECT ?v WHERE { ?s :val ?v } ORDER BY DESC(?v) LIMIT 2 OFFSET 1")
    assert [r["v"] for r in evaluate(q, store).rows] == [typed(4), typed(3)]
    q = parse_query(PREFIX + "SELECT (COUNT(*) AS ?n) WHERE { ?s :next ?o }")
    assert evaluate(q, store).rows == [{"n": typed(3)}]
    q = parse_query(PREFIX + "SELECT (COUNT(*) AS ?n) WHERE { ?s :missing ?o }")
    assert evaluate(q, store).rows == [{"n": typed(0)}]


def test_ask():
    store = _store()
    assert evaluate(parse_query(PREFIX + "ASK { :e1 :next ?o }"), store).boolean is True
    assert evaluate(parse_query(PREFIX + "ASK { :e0 :next ?o }"), store).boolean is False


def test_term_order():
    terms = [typed(10), literal("a"), ex("z"), bnode("b"), typed(2), None, literal("1.5", EX + "odd")]
    ordered = sorted(terms, key=order_key)
    assert ordered[0] is None and ordered[1] == bnode("b") and ordered[2] == ex("z")
    assert ordered.index(typed(2)) < ordered.index(typed(10))


def test_results_round_trip():
    seq = SolutionSeq(["a", "b"], [{"a": ex("x"), "b": literal("é", language="fr")},
                                   {"a": bnode("n"), "b": typed(3)}, {"a": literal("plain")}])
    back = parse_results(serialize_results(seq))
    assert back.variables == ["a", "b"] and back.rows == seq.rows
    assert parse_results(serialize_results(SolutionSeq([], [], boolean=True))).boolean is True


# -- randomized comparison with the naive evaluator ---------------------------

_SUBJ = [f":e{i}" for i in range(4)]
_PRED = [":p0", ":p1", ":p2"]
_OBJ = _SUBJ + ["0", "1", "2", '"a"', '"b"']
_VARS = ["?x", "?y", "?z"]


def _triple_text(s, p, o):
    return f"{s} {p} {o}"


@st.composite
def stores(draw):
    spec = draw(st.lists(st.tuples(st.sampled_from(_SUBJ), st.sampled_from(_PRED), st.sampled_from(_OBJ)),
                         max_size=25))
    text = PREFIX + "ASK { " + " . ".join(_triple_text(*t) for t in spec) + " }"
    return Store(Triple(*tp) for tp in parse_query(text).patterns) if spec else Store()


@st.composite
def patterns(draw):
    s = draw(st.sampled_from(_VARS + _SUBJ[:2]))
    p = draw(st.sampled_from(_PRED + ["?p"]))
    o = draw(st.sampled_from(_VARS + _OBJ[:1] + ["1"]))
    return _triple_text(s, p, o)


@st.composite
def queries(draw):
    bgp = " . ".join(draw(st.lists(patterns(), min_size=1, max_size=3)))
    body = bgp
    kind = draw(st.sampled_from(["plain", "optional", "union", "filter", "optfilter"]))
    if kind in ("optional", "optfilter"):
        body += " OPTIONAL { " + draw(patterns()) + " }"
    if kind == "union":
        body = "{ " + bgp + " } UNION { " + draw(patterns()) + " }"
    if kind in ("filter", "optfilter"):
        v = draw(st.sampled_from(_VARS))
        cond = draw(st.sampled_from([f"{v} = 1", f"{v} != :e0", f"{v} < 2", f"bound({v})",
                                     f"!bound({v}) || {v} > 0", f"isIRI({v})"]))
        body += f" FILTER({cond})"
    distinct = draw(st.booleans())
    return parse_query(PREFIX + f"SELECT {'DISTINCT ' if distinct else ''}* WHERE {{ {body} }}")


@settings(max_examples=300, deadline=None)
@given(stores(), queries())
def test_evaluation_matches_naive_evaluator(store, query):
    expected = oracle.evaluate(query, store)
    got = evaluate(query, store)
    assert got.row_multiset() == oracle.multiset(expected)


@settings(max_examples=100, deadline=None)
@given(stores(), queries())
def test_writer_round_trip_preserves_answers(store, query):
    again = parse_query(query_to_sparql(query))
    assert evaluate(again, store).row_multiset() == evaluate(query, store).row_multiset()
    assert again.patterns == query.patterns


def test_corpus_matches_naive_evaluator(small_gen, corpus):
    merged = small_gen.merged()
    triples = list(merged)
    for q in corpus:
        if len(q.query.patterns) > 5:
            continue  # the naive scan is cubic; bigger queries are covered via the mediator
        expected = oracle.evaluate(q.query, triples)
        got = evaluate(q.query, merged)
        if q.query.order_by and q.query.limit is None:
            assert [oracle.sort_key(r.get(q.query.order_by[0].var)) for r in got.rows] == \
                [oracle.sort_key(r.get(q.query.order_by[0].var)) for r in expected], q.id
        assert got.row_multiset() == oracle.multiset(expected), q.id
