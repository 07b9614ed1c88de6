from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional


class MediationError(Exception):
    """Query failure; ``trace`` holds the accounting up to the failure."""

    def __init__(self, message: str, trace: Optional["ExecutionTrace"] = None):
        super().__init__(message)
        self.trace = trace


@dataclass
class ExecutionTrace:
    select_requests: int = 0
    ask_requests: int = 0
    ask_saved: int = 0
    per_endpoint: dict[str, dict[str, int]] = field(default_factory=dict)
    elapsed_ms: float = 0.0
    unreachable: list[str] = field(default_factory=list)
    error: Optional[str] = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def _slot(self, endpoint_id: str) -> dict[str, int]:
        return self.per_endpoint.setdefault(endpoint_id, {"select": 0, "ask": 0})

    def count_select(self, endpoint_id: str):
        with self._lock:
            self.select_requests += 1
            self._slot(endpoint_id)["select"] += 1

    def count_ask(self, endpoint_id: str):
        with self._lock:
            self.ask_requests += 1
            self._slot(endpoint_id)["ask"] += 1

    @property
    def total_requests(self) -> int:
        return self.select_requests + self.ask_requests

    def requests_to(self, endpoint_ids) -> int:
        """Select requests sent to the given members."""
        return sum(self.per_endpoint.get(e, {}).get("select", 0) for e in endpoint_ids)

    def to_dict(self) -> dict:
        return {
            "select_requests": self.select_requests,
            "ask_requests": self.ask_requests,
            "ask_saved": self.ask_saved,
            "elapsed_ms": round(self.elapsed_ms, 3),
            "per_endpoint": {k: dict(v) for k, v in sorted(self.per_endpoint.items())},
            "unreachable": list(self.unreachable),
            "error": self.error,
        }
