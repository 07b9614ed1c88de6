import pytest

from fedmesh.bench import generate_federation, load_corpus
from fedmesh.federation import Federation, InProcessEndpoint
from fedmesh.rdf import Store, Triple, iri, literal
from fedmesh.service import BindingConfig, ServiceConfig, serve

EX = "http://example.org/"


def ex(name):
    return iri(EX + name)


def row_set(rows):
    return {frozenset(r.items()) for r in rows}


def make_federation(stores, **kw):
    """In-process federation from ``{id: Store or list of triples}``."""
    return Federation(
        InProcessEndpoint(k, v if isinstance(v, Store) else Store(v), **kw)
        for k, v in stores.items()
    )


@pytest.fixture(scope="session")
def small_gen():
    """Five-member disjoint federation, small enough for unit tests."""
    return generate_federation(seed=7, members=5, min_triples=300, max_triples=900)


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture
def toy_stores():
    """Three members: people on a, their cities on b, cities on both b and c."""
    a = [Triple(ex(f"p{i}"), ex("livesIn"), ex(f"c{i % 3}")) for i in range(6)]
    a += [Triple(ex(f"p{i}"), ex("name"), literal(f"P{i}")) for i in range(6)]
    b = [Triple(ex(f"c{i}"), ex("label"), literal(f"City {i}")) for i in range(3)]
    c = [Triple(ex("c1"), ex("label"), literal("City 1")), Triple(ex("c9"), ex("label"), literal("Nowhere"))]
    return {"a": Store(a), "b": Store(b), "c": Store(c)}


@pytest.fixture
def service_for():
    """Start a service hosting the given stores; shut down after the test."""
    handles = []

    def start(stores, **kw):
        cfg = ServiceConfig([BindingConfig(path=f"/{k}/sparql", store=s, **kw) for k, s in stores.items()],
                            port=0)
        h = serve(cfg)
        handles.append(h)
        return h

    yield start
    for h in handles:
        h.shutdown()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one pass/fail line per acceptance criterion for the summary."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def record(criterion, ok, detail):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
