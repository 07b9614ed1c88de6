"""Benchmark driver: warmup and measured runs per query, scenario and caching arm."""

from __future__ import annotations

import gc
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from ..federation import EndpointError, Federation, counter_delta, load_federation
from ..mediator import MediationError, Mediator, MediatorOptions, SelectionCache, select_sources
from .corpus import CorpusQuery, load_corpus
from .stats import geometric_mean

log = logging.getLogger(__name__)

CACHING_MODES = ("on", "off", "both")
SCENARIOS = ("local", "hybrid")
# members delayed in the hybrid scenario unless the config says otherwise
HYBRID_MEMBERS = ("drugbank", "uniprot", "pubmed")
HYBRID_LATENCY_MS = 40.0
HYBRID_JITTER_MS = 20.0


@dataclass
class BenchConfig:
    federation: Union[str, Path, Federation]
    corpus: Sequence[Union[str, Path, CorpusQuery]] = ()
    warmup_runs: int = 5
    measured_runs: int = 5
    caching: str = "on"
    scenarios: Sequence[str] = ("local",)
    hybrid: Optional[dict[str, dict[str, float]]] = None  # id -> {latency_ms, jitter_ms}
    parallelism: int = 16
    outputs: dict[str, str] = field(default_factory=dict)  # format -> path

    def validate(self):
        if self.warmup_runs < 0:
            raise ValueError("warmup_runs must be >= 0")
        if self.measured_runs < 1:
            raise ValueError("measured_runs must be >= 1")
        if self.caching not in CACHING_MODES:
            raise ValueError(f"caching must be one of {CACHING_MODES}")
        if not self.scenarios or any(s not in SCENARIOS for s in self.scenarios):
            raise ValueError(f"scenarios must be drawn from {SCENARIOS}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        for fmt in self.outputs:
            if fmt not in ("json", "csv", "markdown"):
                raise ValueError(f"unknown output format {fmt!r}")

    def hybrid_latencies(self, federation: Federation) -> dict[str, tuple[float, float]]:
        if self.hybrid is None:
            return {m: (HYBRID_LATENCY_MS, HYBRID_JITTER_MS)
                    for m in HYBRID_MEMBERS if m in federation.ids}
        out = {}
        for mid, spec in self.hybrid.items():
            if mid not in federation.ids:
                raise ValueError(f"hybrid override for unknown member {mid!r}")
            out[mid] = (float(spec.get("latency_ms", 0.0)), float(spec.get("jitter_ms", 0.0)))
        return out

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Union[str, Path] = ".") -> "BenchConfig":
        base = Path(base_dir)
        scen = doc.get("scenario", doc.get("scenarios", "local"))
        corpus = doc.get("corpus")
        if isinstance(corpus, str):
            corpus = [corpus]
        cfg = cls(
            federation=base / doc["federation"],
            corpus=[base / c for c in corpus] if corpus else (),
            warmup_runs=doc.get("warmup_runs", 5),
            measured_runs=doc.get("measured_runs", 5),
            caching=doc.get("caching", "on"),
            scenarios=[scen] if isinstance(scen, str) else list(scen),
            hybrid=doc.get("hybrid"),
            parallelism=doc.get("parallelism", 16),
            outputs={k: str(base / v) for k, v in doc.get("output", {}).items()},
        )
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: Union[str, Path]) -> "BenchConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)


@dataclass
class QueryResult:
    query: str
    scenario: str
    caching: str
    times_ms: list[float] = field(default_factory=list)
    geomean_ms: Optional[float] = None
    requests: int = 0
    delayed_requests: int = 0
    per_endpoint: dict[str, int] = field(default_factory=dict)
    ask_count: int = 0
    cold_ask_count: int = 0
    savings: int = 0
    cardinality: Optional[int] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "query": self.query, "scenario": self.scenario, "caching": self.caching,
            "times_ms": list(self.times_ms), "geomean_ms": self.geomean_ms,
            "requests": self.requests, "delayed_requests": self.delayed_requests,
            "per_endpoint": dict(sorted(self.per_endpoint.items())),
            "ask_count": self.ask_count, "cold_ask_count": self.cold_ask_count,
            "savings": self.savings, "cardinality": self.cardinality, "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QueryResult":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass
class Report:
    entries: list[QueryResult] = field(default_factory=list)
    source_selection: dict[str, dict] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def find(self, query: str, scenario: str, caching: str) -> Optional[QueryResult]:
        for e in self.entries:
            if (e.query, e.scenario, e.caching) == (query, scenario, caching):
                return e
        return None

    def queries(self) -> list[str]:
        seen: dict[str, None] = {}
        for e in self.entries:
            seen.setdefault(e.query, None)
        return list(seen)

    def problems(self) -> list[str]:
        """Violated report invariants, empty when the report is consistent."""
        out = []
        cards: dict[str, set] = {}
        for e in self.entries:
            tag = f"{e.query}/{e.scenario}/{e.caching}"
            if e.savings < 0:
                out.append(f"{tag}: negative savings")
            if e.error is None and sum(e.per_endpoint.values()) != e.requests:
                out.append(f"{tag}: per-endpoint requests do not sum to the total")
            if e.cardinality is not None:
                cards.setdefault(e.query, set()).add(e.cardinality)
        out.extend(f"{q}: cardinality differs across runs ({sorted(c)})"
                   for q, c in cards.items() if len(c) > 1)
        return out

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "entries": [e.to_dict() for e in self.entries],
            "source_selection": self.source_selection,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        return cls([QueryResult.from_dict(e) for e in d.get("entries", [])],
                   d.get("source_selection", {}), d.get("meta", {}))


def summarize_counts(counts: Sequence[int]) -> dict:
    if not counts:
        return {"pattern_count": 0, "min": 0, "max": 0, "avg": 0.0, "counts": []}
    return {"pattern_count": len(counts), "min": min(counts), "max": max(counts),
            "avg": sum(counts) / len(counts), "counts": list(counts)}


def source_selection_report(corpus: Sequence[CorpusQuery], federation: Federation) -> dict[str, dict]:
    """Relevant-member counts per pattern, from an uncached selection."""
    out = {}
    for q in corpus:
        patterns = q.query.patterns
        if not patterns:
            out[q.id] = summarize_counts([])
            continue
        try:
            sel = select_sources(patterns, federation, SelectionCache(), caching_enabled=False)
        except (MediationError, EndpointError) as exc:
            log.error("%s: source selection failed: %s", q.id, exc)
            out[q.id] = {**summarize_counts([]), "error": str(exc)}
            continue
        out[q.id] = summarize_counts([len(e.relevant) for e in sel.sources])
    return out


def _set_latencies(federation: Federation, latencies: dict[str, tuple[float, float]]):
    for m in federation:
        if m.id in latencies:
            m.with_latency(*latencies[m.id])


class _Arm:
    """One (query, scenario, caching) combination with its own mediator and cache."""

    def __init__(self, q: CorpusQuery, scenario: str, caching: str, federation: Federation,
                 latencies: dict[str, tuple[float, float]], parallelism: int):
        self.q = q
        self.federation = federation
        self.latencies = latencies
        self.delayed = {k for k, (ms, jit) in latencies.items() if ms > 0 or jit > 0}
        self.result = QueryResult(q.id, scenario, caching)
        opts = MediatorOptions(caching=caching == "on", parallelism=parallelism)
        self.mediator = Mediator(federation, SelectionCache(), opts)  # flushed cache per arm
        self.raw: list[float] = []
        self.cards: set[int] = set()
        self.runs = 0

    def run(self, measured: bool):
        res = self.result
        if res.error is not None:
            return
        _set_latencies(self.federation, self.latencies)
        try:
            # like timeit: collect up front, keep the collector out of the timed region
            gc.collect()
            gc.disable()
            try:
                before = self.federation.snapshot_counters()
                start = time.perf_counter()
                rows, trace = self.mediator.query(self.q.query)
                elapsed = time.perf_counter() - start
            finally:
                gc.enable()
        except Exception as exc:  # noqa: BLE001 - recorded per query, the run goes on
            log.error("%s (%s, caching %s) failed: %s", self.q.id, res.scenario, res.caching, exc)
            res.error = f"{type(exc).__name__}: {exc}"
            return
        delta = counter_delta(before, self.federation.snapshot_counters())
        if self.runs == 0:
            res.cold_ask_count = trace.ask_requests
        self.runs += 1
        if not measured:
            return
        self.raw.append(elapsed * 1000.0)
        self.cards.add(len(rows.rows))
        res.per_endpoint = {k: v.select_requests for k, v in delta.items() if v.select_requests}
        res.requests = sum(res.per_endpoint.values())
        res.delayed_requests = sum(n for k, n in res.per_endpoint.items() if k in self.delayed)
        res.ask_count = sum(v.ask_requests for v in delta.values())
        if res.requests != trace.select_requests:
            log.warning("%s: counters saw %d requests, trace %d", self.q.id, res.requests,
                        trace.select_requests)

    def finish(self) -> QueryResult:
        self.mediator.close()
        res = self.result
        if res.error is not None:
            return res
        if len(self.cards) > 1:
            res.error = f"cardinality changed between runs: {sorted(self.cards)}"
        res.cardinality = self.cards.pop() if len(self.cards) == 1 else None
        res.times_ms = [round(t, 3) for t in self.raw]
        res.geomean_ms = round(geometric_mean(max(t, 1e-9) for t in self.raw), 3)
        return res


def run_benchmark(config: BenchConfig, federation: Optional[Federation] = None,
                  corpus: Optional[Sequence[CorpusQuery]] = None) -> Report:
    """Run every corpus query in every scenario and caching arm, one query at a time.

    Each arm gets its warmup runs first; the measured runs of a query's arms
    are then interleaved round-robin, so slow drift of the host affects all
    arms alike instead of masquerading as a scenario or caching effect.
    """
    config.validate()
    own = False
    if federation is None:
        if isinstance(config.federation, Federation):
            federation = config.federation
        else:
            federation = load_federation(config.federation, pool_size=config.parallelism)
            own = True
    if corpus is None:
        items = list(config.corpus)
        if items and all(isinstance(c, CorpusQuery) for c in items):
            corpus = items
        else:
            corpus = load_corpus(items or None)

    base = {m.id: (m.latency_ms, m.jitter_ms) for m in federation}
    hybrid = config.hybrid_latencies(federation)
    arms = ["off", "on"] if config.caching == "both" else [config.caching]
    scenario_latencies = {}
    for scenario in config.scenarios:
        latencies = dict(base)
        if scenario == "hybrid":
            latencies.update(hybrid)
        scenario_latencies[scenario] = latencies
    report = Report(meta={
        "members": federation.ids,
        "warmup_runs": config.warmup_runs,
        "measured_runs": config.measured_runs,
        "parallelism": config.parallelism,
        "caching": config.caching,
        "scenarios": list(config.scenarios),
        "hybrid": {k: {"latency_ms": v[0], "jitter_ms": v[1]} for k, v in sorted(hybrid.items())},
    })
    # the stores are long-lived; freezing them keeps the per-run collections cheap
    gc.collect()
    gc.freeze()
    try:
        report.source_selection = source_selection_report(corpus, federation)
        for q in corpus:
            combos = [_Arm(q, s, a, federation, scenario_latencies[s], config.parallelism)
                      for s in config.scenarios for a in arms]
            for arm in combos:
                for _ in range(config.warmup_runs):
                    arm.run(measured=False)
            for _ in range(config.measured_runs):
                for arm in combos:
                    arm.run(measured=True)
            results = [arm.finish() for arm in combos]
            cold = {r.scenario: r.ask_count for r in results if r.caching == "off"}
            for res in results:
                if res.caching == "off":
                    res.savings = 0
                else:
                    res.savings = cold.get(res.scenario, res.cold_ask_count) - res.ask_count
                report.entries.append(res)
                log.info("%s %s caching=%s: %s ms, %d requests", q.id, res.scenario,
                         res.caching, res.geomean_ms, res.requests)
    finally:
        gc.unfreeze()
        _set_latencies(federation, base)
        if own:
            federation.close()
    return report
