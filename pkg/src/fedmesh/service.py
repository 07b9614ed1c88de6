"""HTTP service exposing stores as plain SPARQL protocol endpoints.

One process can host many bindings (one store per URL path).  Each binding
bounds its in-flight evaluations; excess requests wait in FIFO order.
"""

from __future__ import annotations

import json
import logging
import random
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional, Union
from urllib.parse import parse_qs, urlsplit

from .rdf.ntriples import NTriplesError, load_ntriples
from .rdf.store import Store
from .sparql.evaluate import evaluate
from .sparql.parser import SparqlSyntaxError, UnsupportedFeature, parse_query
from .sparql.results import MEDIA_TYPE, serialize_results

log = logging.getLogger(__name__)


class ServiceError(Exception):
    pass


@dataclass
class BindingConfig:
    path: str
    data: list[str] = field(default_factory=list)
    latency_ms: float = 0.0
    jitter_ms: float = 0.0
    store: Optional[Store] = None  # preloaded store instead of data files


@dataclass
class ServiceConfig:
    bindings: list[BindingConfig]
    port: int = 8890
    host: str = "127.0.0.1"
    max_concurrent: int = 8

    def validate(self):
        paths = [_norm(b.path) for b in self.bindings]
        if len(set(paths)) != len(paths):
            raise ServiceError("binding paths must be pairwise distinct")
        # 0 asks the OS for a free port
        if not 0 <= self.port <= 65535:
            raise ServiceError(f"port out of range: {self.port}")
        if self.max_concurrent < 1:
            raise ServiceError("max_concurrent must be positive")
        for b in self.bindings:
            if b.latency_ms < 0 or b.jitter_ms < 0:
                raise ServiceError(f"{b.path}: negative latency")

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Union[str, Path] = ".") -> "ServiceConfig":
        base = Path(base_dir)
        bindings = [
            BindingConfig(
                path=b["path"],
                data=[str(base / p) for p in b.get("data", [])],
                latency_ms=b.get("latency_ms", 0.0),
                jitter_ms=b.get("jitter_ms", 0.0),
            )
            for b in doc["bindings"]
        ]
        return cls(bindings, port=doc.get("port", 8890), host=doc.get("host", "127.0.0.1"),
                   max_concurrent=doc.get("max_concurrent", 8))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ServiceConfig":
        path = Path(path)
        with open(path) as fh:
            return cls.from_dict(json.load(fh), path.parent)


def _norm(path: str) -> str:
    return "/" + path.strip("/")


class FifoLimiter:
    """Counting semaphore that admits waiters strictly in arrival order."""

    def __init__(self, limit: int):
        self.limit = limit
        self.active = 0
        self._waiters: deque[threading.Event] = deque()
        self._lock = threading.Lock()

    def acquire(self):
        with self._lock:
            if self.active < self.limit and not self._waiters:
                self.active += 1
                return
            ev = threading.Event()
            self._waiters.append(ev)
        ev.wait()

    def release(self):
        with self._lock:
            if self._waiters:
                self._waiters.popleft().set()  # slot handed over, active unchanged
            else:
                self.active -= 1

    def __enter__(self):
        self.acquire()
        return self

    def __exit__(self, *exc):
        self.release()


class Binding:
    def __init__(self, config: BindingConfig, max_concurrent: int):
        self.path = _norm(config.path)
        if config.store is not None:
            self.store = config.store
        else:
            try:
                self.store = load_ntriples(config.data)
            except (OSError, NTriplesError) as exc:
                raise ServiceError(f"{self.path}: cannot load data: {exc}") from exc
        self.latency_ms = config.latency_ms
        self.jitter_ms = config.jitter_ms
        self.limiter = FifoLimiter(max_concurrent)
        self.requests = 0
        self._rng = random.Random()
        self._lock = threading.Lock()

    def delay(self):
        if self.latency_ms or self.jitter_ms:
            with self._lock:
                extra = self._rng.uniform(0, self.jitter_ms) if self.jitter_ms else 0.0
            time.sleep((self.latency_ms + extra) / 1000.0)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: "_Server"

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def _reply(self, status: int, body: bytes, content_type: str = "text/plain; charset=utf-8"):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        url = urlsplit(self.path)
        self._handle(url.path, parse_qs(url.query).get("query"))

    def do_POST(self):
        url = urlsplit(self.path)
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length).decode("utf-8") if length else ""
        ctype = (self.headers.get("Content-Type") or "").split(";")[0].strip()
        if ctype == "application/sparql-query":
            texts = [body] if body else None
        else:
            texts = parse_qs(body).get("query") or parse_qs(url.query).get("query")
        self._handle(url.path, texts)

    def _handle(self, path: str, texts: Optional[list[str]]):
        binding = self.server.bindings.get(_norm(path))
        if binding is None:
            self._reply(404, f"no endpoint at {path}\n".encode())
            return
        if not texts:
            self._reply(400, b"missing 'query' parameter\n")
            return
        with binding._lock:
            binding.requests += 1
        try:
            query = parse_query(texts[0])
        except (SparqlSyntaxError, UnsupportedFeature) as exc:
            self._reply(400, f"{exc}\n".encode())
            return
        try:
            with binding.limiter:
                body = serialize_results(evaluate(query, binding.store))
        except Exception as exc:  # noqa: BLE001 - surfaced to the client as 500
            log.exception("evaluation failed on %s", binding.path)
            self._reply(500, f"internal error: {exc}\n".encode())
            return
        binding.delay()
        self._reply(200, body, MEDIA_TYPE)


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = False

    def __init__(self, addr, bindings: dict[str, Binding]):
        self.bindings = bindings
        super().__init__(addr, _Handler)


class ServiceHandle:
    def __init__(self, server: _Server, thread: threading.Thread):
        self._server = server
        self._thread = thread
        self.host, self.port = server.server_address[:2]

    @property
    def bindings(self) -> dict[str, Binding]:
        return self._server.bindings

    def url(self, path: str) -> str:
        return f"http://{self.host}:{self.port}{_norm(path)}"

    def shutdown(self):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)

    def wait(self):
        self._thread.join()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()


def serve(config: ServiceConfig) -> ServiceHandle:
    """Load every binding and start answering requests on a background thread."""
    config.validate()
    bindings = {}
    for bc in config.bindings:
        b = Binding(bc, config.max_concurrent)
        bindings[b.path] = b
        log.info("binding %s: %d triples", b.path, len(b.store))
    try:
        server = _Server((config.host, config.port), bindings)
    except OSError as exc:
        raise ServiceError(f"cannot listen on {config.host}:{config.port}: {exc}") from exc
    thread = threading.Thread(target=server.serve_forever, name="fedmesh-service", daemon=True)
    thread.start()
    handle = ServiceHandle(server, thread)
    log.info("serving %d endpoint(s) on http://%s:%d", len(bindings), handle.host, handle.port)
    return handle
