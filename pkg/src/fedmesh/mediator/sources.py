"""ASK-based source selection."""

from __future__ import annotations

from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from ..federation import EndpointError, Federation
from ..rdf.terms import TriplePattern
from .cache import SelectionCache, normalize
from .trace import ExecutionTrace, MediationError

PROBED = "probed"
CACHED = "cached"


class SourceSelectionError(MediationError):
    def __init__(self, endpoint_id: str, cause: Exception, trace=None):
        super().__init__(f"source selection failed: member {endpoint_id} unreachable ({cause})", trace)
        self.endpoint_id = endpoint_id


@dataclass(frozen=True)
class SourceEntry:
    pattern: TriplePattern
    relevant: tuple[str, ...]  # member ids in federation order
    provenance: str  # PROBED or CACHED


@dataclass
class SourceMap:
    entries: list[SourceEntry]
    unreachable: list[str] = field(default_factory=list)

    def __getitem__(self, i: int) -> SourceEntry:
        return self.entries[i]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


class SourceSelection(NamedTuple):
    sources: SourceMap
    ask_count: int
    savings_count: int


def select_sources(
    patterns: Sequence[TriplePattern],
    federation: Federation,
    cache: Optional[SelectionCache] = None,
    caching_enabled: bool = True,
    *,
    skip_unreachable: bool = False,
    executor: Optional[Executor] = None,
    trace: Optional[ExecutionTrace] = None,
) -> SourceSelection:
    """Relevant members for every pattern, probing with ASK where the cache cannot answer.

    Probes are deduplicated per normalized pattern and issued concurrently.
    With caching disabled every pattern is probed, but the answers are still
    recorded in the cache.
    """
    if not patterns:
        raise ValueError("select_sources needs at least one pattern")
    cache = cache if cache is not None else SelectionCache()

    keys: dict[tuple, TriplePattern] = {}
    for tp in patterns:
        keys.setdefault(normalize(tp), tp)

    answers: dict[tuple, dict[str, bool]] = {k: {} for k in keys}
    probes: list[tuple[tuple, str]] = []
    savings = 0
    for key, tp in keys.items():
        known = cache.known(tp) if caching_enabled else {}
        for member in federation:
            if member.id in known:
                answers[key][member.id] = known[member.id]
                savings += 1
            else:
                probes.append((key, member.id))

    unreachable: set[str] = set()
    probed_keys = {key for key, _ in probes}
    if probes:
        own = executor is None
        pool = executor or ThreadPoolExecutor(max_workers=min(len(probes), 64),
                                              thread_name_prefix="fedmesh-ask")

        def probe(key, member_id):
            if trace is not None:
                trace.count_ask(member_id)
            return federation[member_id].ask(keys[key])

        try:
            futures = [(key, mid, pool.submit(probe, key, mid)) for key, mid in probes]
            failure = None
            for key, mid, fut in futures:
                try:
                    answers[key][mid] = fut.result()
                    cache.update(keys[key], mid, answers[key][mid])
                except EndpointError as exc:
                    if not skip_unreachable:
                        failure = failure or (mid, exc)
                    unreachable.add(mid)
            if failure:
                raise SourceSelectionError(failure[0], failure[1], trace)
        finally:
            if own:
                pool.shutdown(wait=True)

    order = federation.ids
    entries = []
    for tp in patterns:
        key = normalize(tp)
        relevant = tuple(m for m in order if answers[key].get(m))
        entries.append(SourceEntry(tp, relevant, PROBED if key in probed_keys else CACHED))
    if trace is not None:
        trace.ask_saved += savings
        trace.unreachable.extend(m for m in order if m in unreachable)
    return SourceSelection(SourceMap(entries, [m for m in order if m in unreachable]),
                           len(probes), savings)
