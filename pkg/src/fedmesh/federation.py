"""Federation members: in-process stores and remote SPARQL endpoints.

Every request an endpoint serves is counted exactly once, before it is
issued, so failed requests are accounted for as well.  Artificial latency is
applied after the answer is available and before it is returned.
"""

from __future__ import annotations

import json
import logging
import random
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union
from urllib.parse import urlencode

import requests
from requests.adapters import HTTPAdapter

from .rdf.ntriples import load_ntriples
from .rdf.store import Store
from .rdf.terms import TriplePattern
from .sparql.ast import BGP, Query
from .sparql.evaluate import SolutionSeq, evaluate
from .sparql.parser import parse_query
from .sparql.results import MEDIA_TYPE, parse_results
from .sparql.writer import query_to_sparql

log = logging.getLogger(__name__)

GET_LIMIT = 2048
DEFAULT_TIMEOUT = 30.0
DEFAULT_POOL = 16


class EndpointError(Exception):
    def __init__(self, endpoint_id: str, message: str):
        super().__init__(f"{endpoint_id}: {message}")
        self.endpoint_id = endpoint_id


class EndpointUnreachable(EndpointError):
    pass


class EndpointProtocolError(EndpointError):
    def __init__(self, endpoint_id: str, status: int, body: str):
        super().__init__(endpoint_id, f"HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body[:200]


@dataclass
class RequestStats:
    select_requests: int = 0
    ask_requests: int = 0
    bytes_received: int = 0
    cumulative_wait: float = 0.0  # seconds of injected delay

    @property
    def total(self) -> int:
        return self.select_requests + self.ask_requests

    def to_dict(self) -> dict:
        return {
            "select_requests": self.select_requests,
            "ask_requests": self.ask_requests,
            "bytes_received": self.bytes_received,
            "cumulative_wait_ms": round(self.cumulative_wait * 1000, 3),
        }


class Endpoint:
    kind = "abstract"

    def __init__(self, id: str, latency_ms: float = 0.0, jitter_ms: float = 0.0,
                 seed: Optional[int] = None):
        if not id:
            raise ValueError("endpoint id must be non-empty")
        self.id = id
        self._stats = RequestStats()
        self._lock = threading.Lock()
        self._rng = random.Random(seed)
        self.latency_ms = 0.0
        self.jitter_ms = 0.0
        self.with_latency(latency_ms, jitter_ms)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.id}>"

    # latency

    def with_latency(self, fixed_ms: float, jitter_ms: float = 0.0) -> "Endpoint":
        """Delay every later request by ``fixed_ms`` plus uniform [0, jitter_ms]."""
        if fixed_ms < 0 or jitter_ms < 0:
            raise ValueError("latency and jitter must be non-negative")
        self.latency_ms = float(fixed_ms)
        self.jitter_ms = float(jitter_ms)
        return self

    def _delay(self):
        if not self.latency_ms and not self.jitter_ms:
            return
        with self._lock:
            jitter = self._rng.uniform(0.0, self.jitter_ms) if self.jitter_ms else 0.0
        seconds = (self.latency_ms + jitter) / 1000.0
        time.sleep(seconds)
        with self._lock:
            self._stats.cumulative_wait += seconds

    # accounting

    def _count(self, field: str):
        with self._lock:
            setattr(self._stats, field, getattr(self._stats, field) + 1)

    def _received(self, n_bytes: int):
        with self._lock:
            self._stats.bytes_received += n_bytes

    @property
    def stats(self) -> RequestStats:
        with self._lock:
            return replace(self._stats)

    def reset(self):
        with self._lock:
            self._stats = RequestStats()

    # requests

    def select(self, query: Union[Query, str]) -> SolutionSeq:
        if isinstance(query, str):
            query = parse_query(query)
        if query.form != "SELECT":
            raise ValueError("select() expects a SELECT query")
        self._count("select_requests")
        result = self._select(query)
        self._delay()
        return result

    def ask(self, pattern: TriplePattern) -> bool:
        self._count("ask_requests")
        result = self._ask(pattern)
        self._delay()
        return result

    def _select(self, query: Query) -> SolutionSeq:
        raise NotImplementedError

    def _ask(self, pattern: TriplePattern) -> bool:
        raise NotImplementedError

    def close(self):
        pass


class InProcessEndpoint(Endpoint):
    kind = "in-process"

    def __init__(self, id: str, store: Store, **kw):
        super().__init__(id, **kw)
        self.store = store

    def _select(self, query: Query) -> SolutionSeq:
        return evaluate(query, self.store)

    def _ask(self, pattern: TriplePattern) -> bool:
        return self.store.ask(pattern)


class RemoteEndpoint(Endpoint):
    """SPARQL protocol client: GET for short queries, form POST above 2 KB."""

    kind = "remote"

    def __init__(self, id: str, url: str, timeout: float = DEFAULT_TIMEOUT,
                 pool_size: int = DEFAULT_POOL, **kw):
        super().__init__(id, **kw)
        self.url = url
        self.timeout = timeout
        self.session = requests.Session()
        adapter = HTTPAdapter(pool_connections=1, pool_maxsize=pool_size, max_retries=0)
        self.session.mount("http://", adapter)
        self.session.mount("https://", adapter)
        self.session.headers["Accept"] = MEDIA_TYPE

    def _send(self, text: str) -> SolutionSeq:
        encoded = urlencode({"query": text})
        try:
            if len(encoded) <= GET_LIMIT:
                resp = self.session.get(f"{self.url}?{encoded}", timeout=self.timeout)
            else:
                resp = self.session.post(
                    self.url, data=encoded, timeout=self.timeout,
                    headers={"Content-Type": "application/x-www-form-urlencoded"})
        except requests.RequestException as exc:
            raise EndpointUnreachable(self.id, str(exc)) from exc
        self._received(len(resp.content))
        if resp.status_code != 200:
            raise EndpointProtocolError(self.id, resp.status_code, resp.text)
        try:
            return parse_results(resp.content)
        except (ValueError, KeyError) as exc:
            raise EndpointProtocolError(self.id, resp.status_code, f"bad results document: {exc}")

    def _select(self, query: Query) -> SolutionSeq:
        return self._send(query_to_sparql(query))

    def _ask(self, pattern: TriplePattern) -> bool:
        res = self._send(query_to_sparql(Query("ASK", BGP((pattern,)))))
        if res.boolean is None:
            raise EndpointProtocolError(self.id, 200, "ASK answered without a boolean")
        return res.boolean

    def close(self):
        self.session.close()


def with_latency(endpoint: Endpoint, fixed_ms: float, jitter_ms: float = 0.0) -> Endpoint:
    return endpoint.with_latency(fixed_ms, jitter_ms)


class Federation:
    """Ordered, non-empty collection of endpoints with distinct ids."""

    def __init__(self, members: Iterable[Endpoint]):
        self.members = list(members)
        if not self.members:
            raise ValueError("a federation needs at least one member")
        ids = [m.id for m in self.members]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate member ids: {sorted({i for i in ids if ids.count(i) > 1})}")
        self._by_id = {m.id: m for m in self.members}

    def __iter__(self) -> Iterator[Endpoint]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, id: str) -> Endpoint:
        return self._by_id[id]

    @property
    def ids(self) -> list[str]:
        return [m.id for m in self.members]

    def snapshot_counters(self) -> dict[str, RequestStats]:
        """Point-in-time copy of every member's counters (all locks held at once)."""
        locks = [m._lock for m in self.members]
        for lk in locks:
            lk.acquire()
        try:
            return {m.id: replace(m._stats) for m in self.members}
        finally:
            for lk in reversed(locks):
                lk.release()

    def reset_counters(self):
        for m in self.members:
            m.reset()

    def close(self):
        for m in self.members:
            m.close()


def snapshot_counters(federation: Federation) -> dict[str, RequestStats]:
    return federation.snapshot_counters()


def counter_delta(before: dict[str, RequestStats], after: dict[str, RequestStats]) -> dict[str, RequestStats]:
    return {
        k: RequestStats(
            after[k].select_requests - before[k].select_requests,
            after[k].ask_requests - before[k].ask_requests,
            after[k].bytes_received - before[k].bytes_received,
            after[k].cumulative_wait - before[k].cumulative_wait,
        )
        for k in after
    }


# -- configuration -----------------------------------------------------------


def federation_from_config(config: dict, base_dir: Union[str, Path] = ".",
                           timeout: float = DEFAULT_TIMEOUT, pool_size: int = DEFAULT_POOL,
                           seed: Optional[int] = None) -> Federation:
    """Build a federation from ``{"members": [{id, url | data, latency_ms, jitter_ms}]}``."""
    base = Path(base_dir)
    members = []
    for i, spec in enumerate(config["members"]):
        kw = dict(latency_ms=spec.get("latency_ms", 0), jitter_ms=spec.get("jitter_ms", 0),
                  seed=None if seed is None else seed + i)
        if "url" in spec:
            members.append(RemoteEndpoint(spec["id"], spec["url"],
                                          timeout=spec.get("timeout_s", timeout),
                                          pool_size=pool_size, **kw))
        elif "data" in spec:
            paths = [base / p for p in spec["data"]]
            store = load_ntriples(paths)
            log.info("loaded %s: %d triples", spec["id"], len(store))
            members.append(InProcessEndpoint(spec["id"], store, **kw))
        else:
            raise ValueError(f"member {spec.get('id')!r} needs either 'url' or 'data'")
    return Federation(members)


def load_federation(path: Union[str, Path], **kw) -> Federation:
    path = Path(path)
    with open(path) as fh:
        config = json.load(fh)
    return federation_from_config(config, base_dir=path.parent, **kw)
