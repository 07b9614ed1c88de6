"""Seeded synthetic life-science federation.

Five core members carry the linked vocabularies the corpus queries join
across (drugs, proteins, diseases, genes, citations); the remaining members
are smaller "filler" datasets that share generic predicates (``rdf:type``,
``rdfs:label``, ``owl:sameAs``) with the core, so source selection has to
rule them out pattern by pattern.

Generation is a pure function of the seed and the size parameters.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

from ..rdf.ntriples import serialize_ntriples
from ..rdf.store import Store, bulk_load
from ..rdf.terms import XSD_DECIMAL, XSD_INTEGER, Term, Triple, bnode, iri, literal

BASE = "http://example.org/"
RDF_TYPE = iri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type")
RDFS_LABEL = iri("http://www.w3.org/2000/01/rdf-schema#label")
OWL_SAMEAS = iri("http://www.w3.org/2002/07/owl#sameAs")
DC_TITLE = iri("http://purl.org/dc/elements/1.1/title")

CORE = ("drugbank", "uniprot", "diseasome", "entrez", "pubmed")
FILLERS = (
    "kegg", "chebi", "dailymed", "sider", "dbpedia", "genewiki", "reactome",
    "biogrid", "intact", "mint", "hprd", "humancyc", "hapmap", "lhgdn", "linkedct",
    "cellmap", "nci-nature", "imid", "mappings", "umls", "gene-ontology",
    "disease-ontology", "phenotype-ontology", "symptom",
)
MAX_MEMBERS = len(CORE) + len(FILLERS)

# rough triples per entity, used to turn a triple budget into an entity count
_DENSITY = {"drugbank": 8.8, "uniprot": 5.6, "diseasome": 5.08, "entrez": 5.0, "pubmed": 4.5}
_FILLER_DENSITY = 3.9

CHROMOSOMES = [str(i) for i in range(1, 23)] * 4 + ["X"] * 2 + ["Y"]
ORGANISMS = ["Homo sapiens"] * 3 + ["Mus musculus", "Rattus norvegicus"]


def ns(member: str, local: str) -> Term:
    return iri(f"{BASE}{member}/{local}")


def _int(v: int) -> Term:
    return literal(str(v), XSD_INTEGER)


@dataclass
class FixtureSpec:
    seed: int = 42
    members: int = MAX_MEMBERS
    min_triples: int = 5000
    max_triples: int = 50000
    overlap: float = 0.0  # fraction of each member copied into its neighbour

    def validate(self):
        if not 1 <= self.members <= MAX_MEMBERS:
            raise ValueError(f"members must be between 1 and {MAX_MEMBERS}")
        if not 0 < self.min_triples <= self.max_triples:
            raise ValueError("need 0 < min_triples <= max_triples")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError("overlap must be in [0, 1)")


@dataclass
class GeneratedFederation:
    spec: FixtureSpec
    names: list[str]
    stores: dict[str, Store] = field(default_factory=dict)

    def triple_counts(self) -> dict[str, int]:
        return {n: len(self.stores[n]) for n in self.names}

    def merged(self) -> Store:
        from ..rdf.store import merge_stores
        return merge_stores(self.stores[n] for n in self.names)

    def federation(self, latency: Optional[dict[str, tuple[float, float]]] = None, seed: int = 0):
        """In-process federation over the generated stores."""
        from ..federation import Federation, InProcessEndpoint
        latency = latency or {}
        return Federation(
            InProcessEndpoint(n, self.stores[n], latency_ms=latency.get(n, (0, 0))[0],
                              jitter_ms=latency.get(n, (0, 0))[1], seed=seed + i)
            for i, n in enumerate(self.names))


def member_names(count: int) -> list[str]:
    return list((CORE + FILLERS)[:count])


class _Generator:
    def __init__(self, spec: FixtureSpec):
        self.spec = spec
        self.names = member_names(spec.members)
        sizer = random.Random(f"{spec.seed}:sizes")
        # a small margin keeps the realised sizes inside the requested range
        lo = spec.min_triples + spec.min_triples // 50
        hi = max(lo, spec.max_triples - spec.max_triples // 50)
        self.budget = {n: sizer.randint(lo, hi) for n in self.names}
        # entity counts exist for every core vocabulary, present or not, so that
        # cross references stay valid in small federations
        self.count = {}
        for n in CORE:
            b = self.budget.get(n, spec.min_triples)
            self.count[n] = max(4, int(b / _DENSITY[n]))
        for n in FILLERS:
            b = self.budget.get(n, spec.min_triples)
            self.count[n] = max(4, int(b / _FILLER_DENSITY))

    def rng(self, member: str) -> random.Random:
        return random.Random(f"{self.spec.seed}:{member}")

    def ref(self, rng: random.Random, member: str, kind: str) -> Term:
        return ns(member, f"{kind}{rng.randrange(self.count[member])}")

    # core members

    def drugbank(self, out: Callable[[Term, Term, Term], None]):
        m, rng = "drugbank", self.rng("drugbank")
        n = self.count[m]
        for i in range(n):
            d = ns(m, f"drug{i}")
            out(d, RDF_TYPE, ns(m, "Drug"))
            out(d, ns(m, "name"), literal(f"Drug {i}"))
            out(d, ns(m, "category"), ns(m, f"cat{i % 60}"))
            out(d, ns(m, "molecularWeight"),
                literal(f"{rng.randint(50, 599)}.{rng.randint(0, 9)}", XSD_DECIMAL))
            for _ in range(rng.randint(1, 3)):
                out(d, ns(m, "target"), self.ref(rng, "uniprot", "protein"))
            if rng.random() < 0.5:
                out(d, OWL_SAMEAS, ns("kegg", f"rec{i % self.count['kegg']}"))
            if rng.random() < 0.3:
                out(d, ns(m, "indication"), self.ref(rng, "diseasome", "disease"))
        for j in range(n // 2):
            x = bnode(f"interaction{j}")
            out(x, RDF_TYPE, ns(m, "Interaction"))
            out(x, ns(m, "drug1"), ns(m, f"drug{rng.randrange(n)}"))
            out(x, ns(m, "drug2"), ns(m, f"drug{rng.randrange(n)}"))
            out(x, ns(m, "text"), literal(f"Interaction {j}"))

    def uniprot(self, out):
        m, rng = "uniprot", self.rng("uniprot")
        for i in range(self.count[m]):
            p = ns(m, f"protein{i}")
            out(p, RDF_TYPE, ns(m, "Protein"))
            out(p, ns(m, "name"), literal(f"Protein {i}"))
            out(p, ns(m, "organism"), literal(rng.choice(ORGANISMS)))
            out(p, ns(m, "encodedBy"), self.ref(rng, "entrez", "gene"))
            out(p, ns(m, "mass"), _int(rng.randint(5000, 250000)))
            if rng.random() < 0.6:
                out(p, ns(m, "citation"), self.ref(rng, "pubmed", "citation"))

    def diseasome(self, out):
        m, rng = "diseasome", self.rng("diseasome")
        for i in range(self.count[m]):
            d = ns(m, f"disease{i}")
            out(d, RDF_TYPE, ns(m, "Disease"))
            out(d, RDFS_LABEL, literal(f"Disease {i}", language="en"))
            out(d, ns(m, "class"), ns(m, f"class{i % 50}"))
            for _ in range(rng.randint(1, 2)):
                out(d, ns(m, "associatedGene"), self.ref(rng, "entrez", "gene"))
            if rng.random() < 0.6:
                out(d, ns(m, "possibleDrug"), self.ref(rng, "drugbank", "drug"))

    def entrez(self, out):
        m, rng = "entrez", self.rng("entrez")
        n = self.count[m]
        for i in range(n):
            g = ns(m, f"gene{i}")
            out(g, RDF_TYPE, ns(m, "Gene"))
            out(g, ns(m, "symbol"), literal(f"G{i}"))
            out(g, ns(m, "chromosome"), literal(rng.choice(CHROMOSOMES)))
            out(g, ns(m, "taxon"), literal("9606" if rng.random() < 0.7 else "10090"))
            for _ in range(rng.randint(0, 2)):
                out(g, ns(m, "interactsWith"), ns(m, f"gene{rng.randrange(n)}"))

    def pubmed(self, out):
        m, rng = "pubmed", self.rng("pubmed")
        for i in range(self.count[m]):
            c = ns(m, f"citation{i}")
            out(c, RDF_TYPE, ns(m, "Citation"))
            out(c, DC_TITLE, literal(f"Title {i}"))
            out(c, ns(m, "year"), _int(rng.randint(1990, 2012)))
            for _ in range(rng.randint(1, 2)):
                out(c, ns(m, "mesh"), ns(m, f"mesh{rng.randrange(200)}"))

    # fillers

    def filler(self, m: str, out):
        rng = self.rng(m)
        targets = [("drugbank", "drug"), ("uniprot", "protein"),
                   ("diseasome", "disease"), ("entrez", "gene")]
        for i in range(self.count[m]):
            r = ns(m, f"rec{i}")
            out(r, RDF_TYPE, ns(m, "Record"))
            out(r, RDFS_LABEL, literal(f"{m} record {i}"))
            out(r, ns(m, "value"), _int(rng.randint(0, 1000)))
            if rng.random() < 0.7:
                out(r, ns(m, "ref"), self.ref(rng, *rng.choice(targets)))
            if rng.random() < 0.2:
                out(r, OWL_SAMEAS, self.ref(rng, "drugbank", "drug"))

    def build(self) -> GeneratedFederation:
        gen = GeneratedFederation(self.spec, self.names)
        for name in self.names:
            store = Store()

            def out(s, p, o, _store=store):
                _store.add(Triple(s, p, o))

            if name in CORE:
                getattr(self, name)(out)
            else:
                self.filler(name, out)
            gen.stores[name] = store
        if self.spec.overlap > 0 and len(self.names) > 1:
            rng = random.Random(f"{self.spec.seed}:overlap")
            originals = {n: sorted(gen.stores[n]) for n in self.names}
            for i, name in enumerate(self.names):
                neighbour = gen.stores[self.names[(i + 1) % len(self.names)]]
                src = originals[name]
                for t in rng.sample(src, int(len(src) * self.spec.overlap)):
                    neighbour.add(t)
        return gen


def generate_federation(spec: Optional[FixtureSpec] = None, **kw) -> GeneratedFederation:
    """Generate member stores; keyword arguments override :class:`FixtureSpec` fields."""
    spec = spec or FixtureSpec(**kw)
    spec.validate()
    with bulk_load():
        return _Generator(spec).build()


def write_fixtures(gen: GeneratedFederation, out_dir: Union[str, Path], *,
                   port: int = 8890, expected: Optional[dict] = None) -> Path:
    """Write member N-Triples files plus ready-to-use federation and service configs."""
    out = Path(out_dir)
    (out / "data").mkdir(parents=True, exist_ok=True)
    for name in gen.names:
        text = serialize_ntriples(sorted(gen.stores[name]))
        (out / "data" / f"{name}.nt").write_text(text, encoding="utf-8")

    def dump(fname, doc):
        (out / fname).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

    dump("federation.json", {"members": [
        {"id": n, "data": [f"data/{n}.nt"]} for n in gen.names]})
    dump("service.json", {"port": port, "bindings": [
        {"path": f"/{n}/sparql", "data": [f"data/{n}.nt"]} for n in gen.names]})
    dump("remote-federation.json", {"members": [
        {"id": n, "url": f"http://127.0.0.1:{port}/{n}/sparql"} for n in gen.names]})
    manifest = {
        "seed": gen.spec.seed,
        "members": gen.spec.members,
        "min_triples": gen.spec.min_triples,
        "max_triples": gen.spec.max_triples,
        "overlap": gen.spec.overlap,
        "triples": gen.triple_counts(),
    }
    if expected is not None:
        manifest["expected_cardinality"] = expected
    dump("manifest.json", manifest)
    return out
