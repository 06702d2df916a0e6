"""Entity-centric analytics over a semantic layer.

Each operation has two routes: a direct computation over the store indexes
(the methods of :class:`Analytics`) and a SPARQL form (``*_query`` builders,
run through :meth:`Analytics.via_sparql`). Both return the same Python shape,
so either can check the other.

Ranked outputs break count ties by IRI ascending.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from datetime import date, datetime, timedelta, timezone
from typing import Iterable, Optional, Union

from owa.layer import DC_DATE, DC_HAS_VERSION, OAE_MATCHED, RDF_TYPE, SCHEMA_MENTIONS, TW_TWEET
from owa.rdf.store import GraphStore
from owa.rdf.terms import IRI, V_TEMPORAL, Term, term_value
from owa.sparql.engine import Engine, ServiceRegistry, UnregisteredService

log = logging.getLogger(__name__)

KB_SERVICE = "http://dbpedia.org/sparql"

DateLike = Union[str, date, None]


class UnknownDocument(LookupError):
    def __init__(self, iri: str) -> None:
        super().__init__(f"document not in layer: {iri}")
        self.iri = iri


def _as_date(value: DateLike) -> Optional[date]:
    if value is None or isinstance(value, date):
        return value
    return date.fromisoformat(value)


def _window(start: DateLike, end: DateLike) -> tuple[Optional[datetime], Optional[datetime]]:
    """Inclusive day window as [lo, hi) instants; hi is midnight after ``end``."""
    s, e = _as_date(start), _as_date(end)
    lo = datetime(s.year, s.month, s.day, tzinfo=timezone.utc) if s else None
    hi = datetime(e.year, e.month, e.day, tzinfo=timezone.utc) + timedelta(days=1) if e else None
    return lo, hi


def _when(term: Optional[Term]) -> Optional[datetime]:
    kind, value = term_value(term)
    return value if kind == V_TEMPORAL else None


def _rank(counts: dict[str, int], k: Optional[int]) -> list[tuple[str, int]]:
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked if k is None else ranked[:k]


def _date_filter(var: str, start: DateLike, end: DateLike) -> str:
    lo, hi = _as_date(start), _as_date(end)
    parts = []
    if lo:
        parts.append(f'?{var} >= "{lo.isoformat()}"^^xsd:date')
    if hi:
        parts.append(f'?{var} < "{(hi + timedelta(days=1)).isoformat()}"^^xsd:date')
    return f"FILTER({' && '.join(parts)})" if parts else ""


# -- SPARQL forms --


def popularity_query(entity: str, year: int) -> str:
    """Per-month tweet totals with the optional count of tweets mentioning ``entity``."""
    return f"""SELECT ?month ?cAll ?cEnt WHERE {{
  {{ SELECT (month(?date) AS ?month) (count(DISTINCT ?tweet) AS ?cAll) WHERE {{
      ?tweet a tw:Tweet ; dc:date ?date FILTER(year(?date) = {int(year)})
    }} GROUP BY month(?date) }}
  OPTIONAL {{
    {{ SELECT (month(?date) AS ?month) (count(DISTINCT ?tweet) AS ?cEnt) WHERE {{
        ?tweet a tw:Tweet ; dc:date ?date FILTER(year(?date) = {int(year)})
        ?tweet schema:mentions ?entity .
        ?entity oae:hasMatchedURI <{entity}>
      }} GROUP BY month(?date) }}
  }}
}} ORDER BY ?month
"""


def cooccurring_query(entity: str, kb_type: str, start: DateLike, end: DateLike, k: Optional[int] = 5,
                      service: str = KB_SERVICE) -> str:
    limit = f" LIMIT {int(k)}" if k is not None else ""
    return f"""SELECT ?other (count(DISTINCT ?doc) AS ?num) WHERE {{
  SERVICE <{service}> {{ ?other a <{kb_type}> }}
  ?doc dc:date ?date . {_date_filter("date", start, end)}
  ?doc schema:mentions ?m1 .
  ?m1 oae:hasMatchedURI <{entity}> .
  ?doc schema:mentions ?m2 .
  ?m2 oae:hasMatchedURI ?other FILTER(?other != <{entity}>)
}} GROUP BY ?other ORDER BY DESC(?num) ?other{limit}
"""


def similar_query(doc: str, k: Optional[int] = 5) -> str:
    limit = f" LIMIT {int(k)}" if k is not None else ""
    return f"""SELECT ?doc2 (count(DISTINCT ?uri2) AS ?common) WHERE {{
  <{doc}> schema:mentions ?m1 .
  ?m1 oae:hasMatchedURI ?uri1 .
  ?doc2 schema:mentions ?m2 FILTER(?doc2 != <{doc}>)
  ?m2 oae:hasMatchedURI ?uri2 FILTER(?uri2 = ?uri1)
}} GROUP BY ?doc2 ORDER BY DESC(?common) ?doc2{limit}
"""


def top_entities_query(kb_type: str, start: DateLike = None, end: DateLike = None, k: Optional[int] = 10,
                       versioned: bool = False, service: str = KB_SERVICE) -> str:
    limit = f" LIMIT {int(k)}" if k is not None else ""
    # versions carry the mentions and dates; pages are what gets counted
    doc = "?doc" if versioned else "?page"
    date_part = ""
    if start or end:
        date_part = f"{doc} dc:date ?date {_date_filter('date', start, end)}\n  "
    body = f"{date_part}{doc} schema:mentions ?m ."
    if versioned:
        body = f"?page dc:hasVersion ?doc .\n  " + body
    return f"""SELECT ?entity (COUNT(DISTINCT ?page) AS ?num) WHERE {{
  SERVICE <{service}> {{ ?entity a <{kb_type}> }}
  {body}
  ?m oae:hasMatchedURI ?entity
}} GROUP BY ?entity ORDER BY DESC(?num) ?entity{limit}
"""


# -- direct route --


class Analytics:
    """Analytics over ``store``; ``kb`` answers type lookups (the SERVICE side)."""

    def __init__(self, store: GraphStore, kb: Optional[GraphStore] = None, service: str = KB_SERVICE) -> None:
        self.store = store
        self.kb = kb
        self.service = service

    # helpers

    def _mentioned(self, doc: Term) -> set[str]:
        out = set()
        for _, _, m in self.store.match(doc, SCHEMA_MENTIONS, None):
            for _, _, uri in self.store.match(m, OAE_MATCHED, None):
                out.add(uri.value)
        return out

    def _docs_mentioning(self, uri: str) -> set[Term]:
        docs = set()
        for m, _, _ in self.store.match(None, OAE_MATCHED, IRI(uri)):
            for d, _, _ in self.store.match(None, SCHEMA_MENTIONS, m):
                docs.add(d)
        return docs

    def _in_window(self, doc: Term, lo, hi) -> bool:
        for _, _, value in self.store.match(doc, DC_DATE, None):
            when = _when(value)
            if when is None:
                continue
            if (lo is None or when >= lo) and (hi is None or when < hi):
                return True
        return False

    def _typed(self, kb_type: str) -> set[str]:
        if self.kb is None:
            raise UnregisteredService(self.service)
        return {s.value for s, _, _ in self.kb.match(None, RDF_TYPE, IRI(kb_type)) if s.kind == "iri"}

    def is_versioned(self) -> bool:
        pid = self.store.table.lookup(DC_HAS_VERSION)
        return pid is not None and self.store.estimate(None, pid, None) > 0

    # operations

    def popularity(self, entity: str, year: int) -> list[tuple[int, float]]:
        """(month, share of tweets mentioning ``entity``) for months of ``year`` that have tweets."""
        totals: Counter = Counter()
        months_of: dict[Term, int] = {}
        for tweet, _, _ in self.store.match(None, RDF_TYPE, TW_TWEET):
            for _, _, value in self.store.match(tweet, DC_DATE, None):
                when = _when(value)
                if when is not None and when.year == year:
                    months_of[tweet] = when.month
                    totals[when.month] += 1
                    break
        hits: Counter = Counter()
        for tweet in self._docs_mentioning(entity):
            if tweet in months_of:
                hits[months_of[tweet]] += 1
        return [(m, hits[m] / totals[m]) for m in sorted(totals)]

    def cooccurring(self, entity: str, kb_type: str, start: DateLike, end: DateLike,
                    k: Optional[int] = 5) -> list[tuple[str, int]]:
        lo, hi = _window(start, end)
        allowed = self._typed(kb_type) - {entity}
        counts: Counter = Counter()
        for doc in self._docs_mentioning(entity):
            if not self._in_window(doc, lo, hi):
                continue
            for other in self._mentioned(doc) & allowed:
                counts[other] += 1
        return _rank(counts, k)

    def similar(self, doc: str, k: Optional[int] = 5) -> list[tuple[str, int]]:
        seed = IRI(doc)
        if not any(True for _ in self.store.match(seed, None, None)):
            raise UnknownDocument(doc)
        counts: dict[str, set[str]] = defaultdict(set)
        for uri in self._mentioned(seed):
            for other in self._docs_mentioning(uri):
                if other != seed:
                    counts[str(other) if other.kind != "iri" else other.value].add(uri)
        return _rank({d: len(u) for d, u in counts.items()}, k)

    def top_entities(self, kb_type: str, start: DateLike = None, end: DateLike = None,
                     k: Optional[int] = 10) -> list[tuple[str, int]]:
        """Most mentioned entities of a type, counting each archived page once."""
        lo, hi = _window(start, end)
        windowed = start is not None or end is not None
        versioned = self.is_versioned()
        counts: Counter = Counter()
        for uri in sorted(self._typed(kb_type)):
            pages = set()
            for doc in self._docs_mentioning(uri):
                if windowed and not self._in_window(doc, lo, hi):
                    continue
                if versioned:
                    pages.update(p for p, _, _ in self.store.match(None, DC_HAS_VERSION, doc))
                else:
                    pages.add(doc)
            if pages:
                counts[uri] = len(pages)
        return _rank(counts, k)

    # SPARQL route

    def _engine(self) -> Engine:
        registry = ServiceRegistry()
        if self.kb is not None:
            registry.register_service(self.service, self.kb)
        return Engine(self.store, registry)

    def via_sparql(self, operation: str, *args, **kwargs):
        """Run ``operation`` through its SPARQL form; same return shape as the direct method."""
        engine = self._engine()
        if operation == "popularity":
            table = engine.evaluate(popularity_query(*args, **kwargs))
            out = []
            for month, c_all, c_ent in table.rows:
                ent = int(c_ent.value) if c_ent is not None else 0
                out.append((int(month.value), ent / int(c_all.value)))
            return out
        if operation == "similar":
            doc = args[0] if args else kwargs["doc"]
            if not any(True for _ in self.store.match(IRI(doc), None, None)):
                raise UnknownDocument(doc)
            table = engine.evaluate(similar_query(*args, **kwargs))
        elif operation == "cooccurring":
            table = engine.evaluate(cooccurring_query(*args, service=self.service, **kwargs))
        elif operation == "top_entities":
            table = engine.evaluate(top_entities_query(*args, versioned=self.is_versioned(),
                                                       service=self.service, **kwargs))
        else:
            raise ValueError(f"unknown operation {operation!r}")
        return [(str(a) if a.kind != "iri" else a.value, int(b.value)) for a, b in table.rows]


def format_ranking(rows: Iterable[tuple], headers: tuple[str, str]) -> str:
    rows = list(rows)
    width = max([len(headers[0])] + [len(str(r[0])) for r in rows])
    lines = [f"{headers[0]:<{width}} | {headers[1]}", f"{'-' * width}-+-{'-' * len(headers[1])}"]
    for a, b in rows:
        value = f"{b:.6f}" if isinstance(b, float) else str(b)
        lines.append(f"{str(a):<{width}} | {value}")
    return "\n".join(lines) + "\n"
