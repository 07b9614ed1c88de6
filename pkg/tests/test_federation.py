import json
import time

import pytest

from fedmesh.federation import (
    EndpointProtocolError, EndpointUnreachable, Federation, InProcessEndpoint, RemoteEndpoint,
    counter_delta, load_federation, with_latency,
)
from fedmesh.rdf import Store, Triple, literal, pattern
from fedmesh.sparql import parse_query

from conftest import EX, ex, row_set


def _store():
    return Store([Triple(ex(f"s{i}"), ex("p"), literal(str(i))) for i in range(5)])


def test_federation_rejects_empty_and_duplicates():
    with pytest.raises(ValueError):
        Federation([])
    with pytest.raises(ValueError):
        Federation([InProcessEndpoint("a", Store()), InProcessEndpoint("a", Store())])


def test_counters_count_each_request_once():
    ep = InProcessEndpoint("a", _store())
    fed = Federation([ep])
    before = fed.snapshot_counters()
    ep.ask(pattern("?s", ex("p"), "?o"))
    ep.select(f"SELECT * WHERE {{ ?s <{EX}p> ?o }}")
    ep.select(f"SELECT * WHERE {{ ?s <{EX}p> ?o }}")
    delta = counter_delta(before, fed.snapshot_counters())["a"]
    assert (delta.select_requests, delta.ask_requests) == (2, 1)
    assert delta.total == 3
    fed.reset_counters()
    assert ep.stats.total == 0


def test_select_rejects_ask_queries():
    ep = InProcessEndpoint("a", _store())
    with pytest.raises(ValueError):
        ep.select("ASK { ?s ?p ?o }")


def test_injected_latency_delays_every_request():
    ep = with_latency(InProcessEndpoint("a", _store()), 30)
    start = time.perf_counter()
    ep.ask(pattern("?s", ex("p"), "?o"))
    assert time.perf_counter() - start >= 0.03
    assert ep.stats.cumulative_wait >= 0.03
    with pytest.raises(ValueError):
        ep.with_latency(-1)


def test_jitter_is_reproducible_with_a_seed():
    waits = []
    for _ in range(2):
        ep = InProcessEndpoint("a", _store(), latency_ms=1, jitter_ms=5, seed=3)
        for _ in range(3):
            ep.ask(pattern("?s", ex("p"), "?o"))
        waits.append(ep.stats.cumulative_wait)
    assert abs(waits[0] - waits[1]) < 0.05


def test_remote_endpoint_matches_in_process(service_for):
    store = _store()
    h = service_for({"a": store})
    remote = RemoteEndpoint("a", h.url("/a/sparql"))
    local = InProcessEndpoint("a", store)
    q = parse_query(f"SELECT * WHERE {{ ?s <{EX}p> ?o }}")
    assert row_set(remote.select(q).rows) == row_set(local.select(q).rows)
    assert remote.ask(pattern("?s", ex("p"), "?o")) is True
    assert remote.ask(pattern("?s", ex("nothing"), "?o")) is False
    assert remote.stats.total == 3 and remote.stats.bytes_received > 0
    remote.close()


def test_remote_long_queries_use_post(service_for):
    store = _store()
    h = service_for({"a": store})
    remote = RemoteEndpoint("a", h.url("/a/sparql"))
    filler = " ".join(f"FILTER(?o != \"{i}x\")" for i in range(200))
    res = remote.select(f"SELECT * WHERE {{ ?s <{EX}p> ?o {filler} }}")
    assert len(res.rows) == 5
    remote.close()


def test_remote_errors_are_typed(service_for):
    h = service_for({"a": _store()})
    missing = RemoteEndpoint("x", h.url("/nope"))
    with pytest.raises(EndpointProtocolError) as info:
        missing.select("SELECT * WHERE { ?s ?p ?o }")
    assert info.value.status == 404
    assert missing.stats.select_requests == 1
    dead = RemoteEndpoint("d", "http://127.0.0.1:9/sparql", timeout=2)
    with pytest.raises(EndpointUnreachable):
        dead.ask(pattern("?s", "?p", "?o"))
    assert dead.stats.ask_requests == 1


def test_load_federation_config(tmp_path):
    (tmp_path / "a.nt").write_text(f"<{EX}s> <{EX}p> <{EX}o> .\n")
    cfg = {"members": [{"id": "a", "data": ["a.nt"], "latency_ms": 5},
                       {"id": "b", "url": "http://127.0.0.1:1/sparql"}]}
    (tmp_path / "fed.json").write_text(json.dumps(cfg))
    fed = load_federation(tmp_path / "fed.json")
    assert fed.ids == ["a", "b"]
    assert isinstance(fed["a"], InProcessEndpoint) and fed["a"].latency_ms == 5
    assert isinstance(fed["b"], RemoteEndpoint)
    fed.close()
    (tmp_path / "bad.json").write_text(json.dumps({"members": [{"id": "z"}]}))
    with pytest.raises(ValueError):
        load_federation(tmp_path / "bad.json")
