"""Federated query mediation: parse, select sources, plan, execute."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Union

from ..federation import Federation
from ..sparql.ast import Query
from ..sparql.evaluate import SolutionSeq
from ..sparql.parser import parse_query
from .cache import SelectionCache, normalize
from .executor import PlanExecutor, execute
from .planner import (
    EmptyNode, ExclusiveGroup, FilterNode, JoinNode, LeftJoinNode, ModifierNode,
    PatternNode, QueryPlan, UnionNode, build_plan, form_exclusive_groups, reorder_joins,
)
from .sources import (
    CACHED, PROBED, SourceEntry, SourceMap, SourceSelection, SourceSelectionError,
    select_sources,
)
from .trace import ExecutionTrace, MediationError


@dataclass
class MediatorOptions:
    caching: bool = True
    exclusive_groups: bool = True
    parallelism: int = 16
    skip_unreachable: bool = False

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")


def optimize(query: Query, federation: Federation, cache: Optional[SelectionCache] = None,
             caching_enabled: bool = True, *, exclusive_groups: bool = True,
             skip_unreachable: bool = False, probe_pool=None,
             trace: Optional[ExecutionTrace] = None) -> tuple[QueryPlan, ExecutionTrace]:
    """Source selection, exclusive groups and join ordering for every BGP."""
    trace = trace if trace is not None else ExecutionTrace()
    patterns = query.patterns
    if patterns:
        sources = select_sources(patterns, federation, cache, caching_enabled,
                                 skip_unreachable=skip_unreachable, executor=probe_pool,
                                 trace=trace).sources
    else:
        sources = SourceMap([])
    return build_plan(query, sources, exclusive_groups), trace


class Mediator:
    """Reusable mediator holding the request and probe thread pools."""

    def __init__(self, federation: Federation, cache: Optional[SelectionCache] = None,
                 options: Optional[MediatorOptions] = None):
        self.federation = federation
        self.cache = cache if cache is not None else SelectionCache()
        self.options = options or MediatorOptions()
        self._pool = ThreadPoolExecutor(max_workers=self.options.parallelism,
                                        thread_name_prefix="fedmesh-req")
        self._probes = ThreadPoolExecutor(max_workers=max(len(federation), 1),
                                          thread_name_prefix="fedmesh-ask")

    def plan(self, query: Union[str, Query], trace: Optional[ExecutionTrace] = None) -> QueryPlan:
        if isinstance(query, str):
            query = parse_query(query)
        plan, _ = optimize(query, self.federation, self.cache, self.options.caching,
                           exclusive_groups=self.options.exclusive_groups,
                           skip_unreachable=self.options.skip_unreachable,
                           probe_pool=self._probes, trace=trace)
        return plan

    def query(self, query: Union[str, Query]) -> tuple[SolutionSeq, ExecutionTrace]:
        trace = ExecutionTrace()
        start = time.perf_counter()
        try:
            if isinstance(query, str):
                query = parse_query(query)
            plan = self.plan(query, trace)
            result = PlanExecutor(self.federation, self._pool, trace).run(plan)
        except MediationError as exc:
            exc.trace = trace
            trace.error = str(exc)
            raise
        finally:
            trace.elapsed_ms = (time.perf_counter() - start) * 1000.0
        return result, trace

    def close(self):
        self._pool.shutdown(wait=True)
        self._probes.shutdown(wait=True)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def mediate(query: Union[str, Query], federation: Federation,
            cache: Optional[SelectionCache] = None,
            options: Optional[MediatorOptions] = None) -> tuple[SolutionSeq, ExecutionTrace]:
    """Answer ``query`` over the federation as if it were one store."""
    with Mediator(federation, cache, options) as m:
        return m.query(query)


__all__ = [
    "CACHED", "EmptyNode", "ExclusiveGroup", "ExecutionTrace", "FilterNode", "JoinNode",
    "LeftJoinNode", "MediationError", "Mediator", "MediatorOptions", "ModifierNode",
    "PROBED", "PatternNode", "QueryPlan", "SelectionCache", "SourceEntry", "SourceMap",
    "SourceSelection", "SourceSelectionError", "UnionNode", "build_plan", "execute",
    "form_exclusive_groups", "mediate", "normalize", "optimize", "reorder_joins",
    "select_sources",
]
