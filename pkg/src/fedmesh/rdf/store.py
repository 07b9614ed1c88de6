"""Indexed in-memory triple store."""

from __future__ import annotations

import gc
from collections import defaultdict
from contextlib import contextmanager
from typing import Iterable, Iterator

from .terms import Term, Triple, TriplePattern, Variable

BindingRow = dict[str, Term]


def _nested():
    return defaultdict(set)


@contextmanager
def bulk_load():
    """Pause the cyclic collector while inserting many triples.

    Index sets never form cycles, but millions of new containers trigger
    repeated full collections that can double the load time.
    """
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


class Store:
    """A set of triples with SPO, POS and OSP indexes.

    Every pattern shape is answered from one of the three indexes: a bound
    subject goes through SPO, a bound predicate (without subject) through
    POS, and a bound object (alone) through OSP.
    """

    def __init__(self, triples: Iterable[Triple] = ()):
        self._spo: dict[Term, dict[Term, set[Term]]] = defaultdict(_nested)
        self._pos: dict[Term, dict[Term, set[Term]]] = defaultdict(_nested)
        self._osp: dict[Term, dict[Term, set[Term]]] = defaultdict(_nested)
        self._size = 0
        self.update(triples)

    def add(self, triple: Triple) -> bool:
        """Insert ``triple``; returns False when it was already present."""
        s, p, o = triple
        objs = self._spo[s][p]
        if o in objs:
            return False
        objs.add(o)
        self._pos[p][o].add(s)
        self._osp[o][s].add(p)
        self._size += 1
        return True

    def update(self, triples: Iterable[Triple]) -> "Store":
        with bulk_load():
            if isinstance(triples, Store):
                return self._absorb(triples)
            for t in triples:
                self.add(t)
        return self

    def _absorb(self, other: "Store") -> "Store":
        # index-wise union: one set operation per (key, key) pair instead of per triple
        for s, po in other._spo.items():
            mine = self._spo[s]
            for p, objs in po.items():
                cur = mine[p]
                before = len(cur)
                cur |= objs
                self._size += len(cur) - before
        for index, theirs in ((self._pos, other._pos), (self._osp, other._osp)):
            for a, inner in theirs.items():
                mine = index[a]
                for b, vals in inner.items():
                    mine[b] |= vals
        return self

    def __len__(self) -> int:
        return self._size

    def __contains__(self, triple) -> bool:
        s, p, o = triple
        return o in self._spo.get(s, {}).get(p, ())

    def __iter__(self) -> Iterator[Triple]:
        for s, po in self._spo.items():
            for p, objs in po.items():
                for o in objs:
                    yield Triple(s, p, o)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Store):
            return NotImplemented
        return len(self) == len(other) and all(t in other for t in self)

    def __repr__(self) -> str:
        return f"<Store size={self._size}>"

    def triples(self, pattern: TriplePattern) -> Iterator[Triple]:
        """Yield the triples matching ``pattern`` (repeated variables honoured)."""
        s, p, o = (None if isinstance(n, Variable) else n for n in pattern)
        it = self._lookup(s, p, o)
        names = [n.name if isinstance(n, Variable) else None for n in pattern]
        if len({n for n in names if n}) < len([n for n in names if n]):
            it = (t for t in it if _consistent(names, t))
        return it

    def _lookup(self, s, p, o) -> Iterator[Triple]:
        if s is not None:
            po = self._spo.get(s)
            if not po:
                return
            if p is not None:
                objs = po.get(p, ())
                if o is not None:
                    if o in objs:
                        yield Triple(s, p, o)
                else:
                    for o2 in objs:
                        yield Triple(s, p, o2)
            elif o is not None:
                for p2 in self._osp.get(o, {}).get(s, ()):
                    yield Triple(s, p2, o)
            else:
                for p2, objs in po.items():
                    for o2 in objs:
                        yield Triple(s, p2, o2)
        elif p is not None:
            os_ = self._pos.get(p)
            if not os_:
                return
            if o is not None:
                for s2 in os_.get(o, ()):
                    yield Triple(s2, p, o)
            else:
                for o2, subs in os_.items():
                    for s2 in subs:
                        yield Triple(s2, p, o2)
        elif o is not None:
            for s2, preds in self._osp.get(o, {}).items():
                for p2 in preds:
                    yield Triple(s2, p2, o)
        else:
            yield from self

    def match(self, pattern: TriplePattern) -> list[BindingRow]:
        """One binding row per matching triple, binding exactly the pattern variables."""
        slots = [(i, n.name) for i, n in enumerate(pattern) if isinstance(n, Variable)]
        return [{name: t[i] for i, name in slots} for t in self.triples(pattern)]

    def ask(self, pattern: TriplePattern) -> bool:
        return next(self.triples(pattern), None) is not None

    def count(self, pattern: TriplePattern) -> int:
        """Number of matches, computed from index sizes where possible."""
        s, p, o = (None if isinstance(n, Variable) else n for n in pattern)
        if len(pattern.variables) == sum(isinstance(n, Variable) for n in pattern):
            if s is not None and o is None:
                po = self._spo.get(s, {})
                return len(po.get(p, ())) if p is not None else sum(map(len, po.values()))
            if s is None and p is not None:
                os_ = self._pos.get(p, {})
                return len(os_.get(o, ())) if o is not None else sum(map(len, os_.values()))
            if s is None and o is not None:
                return sum(map(len, self._osp.get(o, {}).values()))
            if s is None:
                return self._size
        return sum(1 for _ in self.triples(pattern))

    def copy(self) -> "Store":
        return Store(self)


def _consistent(names: list, triple: Triple) -> bool:
    seen: dict[str, Term] = {}
    for name, term in zip(names, triple):
        if name is None:
            continue
        if seen.setdefault(name, term) != term:
            return False
    return True


def merge_stores(stores: Iterable[Store]) -> Store:
    """Set union of the member stores (blank nodes are already document-scoped)."""
    merged = Store()
    for st in stores:
        merged.update(st)
    return merged
