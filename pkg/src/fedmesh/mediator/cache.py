"""Source selection cache."""

from __future__ import annotations

import threading
from typing import Optional

from ..rdf.terms import TriplePattern, Variable


def normalize(pattern: TriplePattern) -> tuple:
    """Cache key: ground terms kept, variables renamed by first occurrence.

    ``(?a <p> ?b)`` and ``(?x <p> ?y)`` share a key; ``(?x <p> ?x)`` does
    not, since the repeated variable constrains the match.
    """
    names: dict[str, int] = {}
    key = []
    for n in pattern:
        if isinstance(n, Variable):
            key.append(("?", names.setdefault(n.name, len(names))))
        else:
            key.append(n)
    return tuple(key)


class SelectionCache:
    """Per (normalized pattern, endpoint) relevance; missing entries are unknown."""

    def __init__(self):
        self._entries: dict[tuple, dict[str, bool]] = {}
        self._lock = threading.Lock()

    def lookup(self, pattern: TriplePattern, endpoint_id: str) -> Optional[bool]:
        with self._lock:
            return self._entries.get(normalize(pattern), {}).get(endpoint_id)

    def known(self, pattern: TriplePattern) -> dict[str, bool]:
        with self._lock:
            return dict(self._entries.get(normalize(pattern), {}))

    def update(self, pattern: TriplePattern, endpoint_id: str, relevant: bool):
        with self._lock:
            self._entries.setdefault(normalize(pattern), {})[endpoint_id] = relevant

    def flush(self):
        with self._lock:
            self._entries.clear()

    def __len__(self) -> int:
        with self._lock:
            return sum(len(v) for v in self._entries.values())
