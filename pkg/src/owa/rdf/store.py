"""In-memory triple store with interned terms and SPO/POS/OSP indices."""

from __future__ import annotations

import threading
from collections import defaultdict
from typing import Iterable, Iterator, Optional

from owa.rdf.terms import Term, Triple


class TermTable:
    """Bidirectional term <-> integer id dictionary.

    One table is shared by every store by default so that ids are comparable
    across stores (needed when SERVICE results are joined with layer data).
    """

    def __init__(self) -> None:
        self._ids: dict[Term, int] = {}
        self._terms: list[Term] = []
        self._lock = threading.Lock()

    def intern(self, term: Term) -> int:
        tid = self._ids.get(term)
        if tid is not None:
            return tid
        with self._lock:
            tid = self._ids.get(term)
            if tid is None:
                tid = len(self._terms)
                self._terms.append(term)
                self._ids[term] = tid
            return tid

    def lookup(self, term: Term) -> Optional[int]:
        return self._ids.get(term)

    def term(self, tid: int) -> Term:
        return self._terms[tid]

    def __len__(self) -> int:
        return len(self._terms)


DEFAULT_TABLE = TermTable()


class StoreSealed(RuntimeError):
    pass


class GraphStore:
    """Set of triples indexed three ways.

    ``spo[s][p]``, ``pos[p][o]`` and ``osp[o][s]`` each hold sets of ids, so
    every single-position or two-position lookup is a dict walk.
    """

    def __init__(self, table: TermTable | None = None, name: str = "") -> None:
        self.table = table or DEFAULT_TABLE
        self.name = name
        self.spo: dict[int, dict[int, set[int]]] = defaultdict(lambda: defaultdict(set))
        self.pos: dict[int, dict[int, set[int]]] = defaultdict(lambda: defaultdict(set))
        self.osp: dict[int, dict[int, set[int]]] = defaultdict(lambda: defaultdict(set))
        self._size = 0
        self._sealed = False
        self._pred_count: dict[int, int] = defaultdict(int)

    def __len__(self) -> int:
        return self._size

    def __contains__(self, triple: Triple) -> bool:
        ids = [self.table.lookup(t) for t in triple]
        if None in ids:
            return False
        s, p, o = ids
        return o in self.spo.get(s, {}).get(p, ())

    @property
    def sealed(self) -> bool:
        return self._sealed

    def seal(self) -> "GraphStore":
        """Freeze the store; afterwards it may be read from any number of threads."""
        self._sealed = True
        # drop defaultdict factories so reads of missing keys never mutate
        self.spo = {k: dict(v) for k, v in self.spo.items()}
        self.pos = {k: dict(v) for k, v in self.pos.items()}
        self.osp = {k: dict(v) for k, v in self.osp.items()}
        self._pred_count = dict(self._pred_count)
        return self

    def insert(self, triple: Triple) -> bool:
        """Add a triple; returns False when it was already present."""
        if self._sealed:
            raise StoreSealed("store is sealed")
        intern = self.table.intern
        s, p, o = intern(triple[0]), intern(triple[1]), intern(triple[2])
        objs = self.spo[s][p]
        if o in objs:
            return False
        objs.add(o)
        self.pos[p][o].add(s)
        self.osp[o][s].add(p)
        self._size += 1
        self._pred_count[p] += 1
        return True

    def insert_many(self, triples: Iterable[Triple]) -> int:
        return sum(1 for t in triples if self.insert(t))

    # id-level access used by the query engine

    def match_ids(self, s: Optional[int], p: Optional[int], o: Optional[int]) -> Iterator[tuple[int, int, int]]:
        """Yield id triples agreeing with the bound (non-None) positions."""
        if s is not None:
            by_p = self.spo.get(s)
            if not by_p:
                return
            if p is not None:
                objs = by_p.get(p)
                if not objs:
                    return
                if o is not None:
                    if o in objs:
                        yield (s, p, o)
                    return
                for oo in objs:
                    yield (s, p, oo)
                return
            if o is not None:
                preds = self.osp.get(o, {}).get(s)
                if preds:
                    for pp in preds:
                        yield (s, pp, o)
                return
            for pp, objs in by_p.items():
                for oo in objs:
                    yield (s, pp, oo)
            return
        if p is not None:
            by_o = self.pos.get(p)
            if not by_o:
                return
            if o is not None:
                for ss in by_o.get(o, ()):
                    yield (ss, p, o)
                return
            for oo, subs in by_o.items():
                for ss in subs:
                    yield (ss, p, oo)
            return
        if o is not None:
            by_s = self.osp.get(o)
            if not by_s:
                return
            for ss, preds in by_s.items():
                for pp in preds:
                    yield (ss, pp, o)
            return
        for ss, by_p in self.spo.items():
            for pp, objs in by_p.items():
                for oo in objs:
                    yield (ss, pp, oo)

    def index_for(self, s_bound: bool, p_bound: bool, o_bound: bool) -> str:
        if s_bound:
            return "OSP" if (o_bound and not p_bound) else "SPO"
        if p_bound:
            return "POS"
        if o_bound:
            return "OSP"
        return "SPO"

    def estimate(self, s: Optional[int], p: Optional[int], o: Optional[int]) -> int:
        """Cheap cardinality estimate for a pattern with the given constants."""
        if s is not None:
            by_p = self.spo.get(s)
            if not by_p:
                return 0
            if p is not None:
                objs = by_p.get(p)
                if not objs:
                    return 0
                return 1 if o is not None else len(objs)
            if o is not None:
                return len(self.osp.get(o, {}).get(s, ()))
            return sum(len(v) for v in by_p.values())
        if p is not None:
            if o is not None:
                return len(self.pos.get(p, {}).get(o, ()))
            return self._pred_count.get(p, 0)
        if o is not None:
            by_s = self.osp.get(o)
            return sum(len(v) for v in by_s.values()) if by_s else 0
        return self._size

    # term-level access

    def match(self, s: Optional[Term] = None, p: Optional[Term] = None, o: Optional[Term] = None) -> Iterator[Triple]:
        """Yield triples matching a pattern; ``None`` is a wildcard."""
        ids = []
        for term in (s, p, o):
            if term is None:
                ids.append(None)
                continue
            tid = self.table.lookup(term)
            if tid is None:
                return
            ids.append(tid)
        term = self.table.term
        for a, b, c in self.match_ids(*ids):
            yield Triple(term(a), term(b), term(c))

    def triples(self) -> Iterator[Triple]:
        return self.match()

    def subjects(self) -> Iterator[Term]:
        term = self.table.term
        for s in self.spo:
            yield term(s)


def store_from(triples: Iterable[Triple], name: str = "", seal: bool = True) -> GraphStore:
    store = GraphStore(name=name)
    store.insert_many(triples)
    return store.seal() if seal else store
