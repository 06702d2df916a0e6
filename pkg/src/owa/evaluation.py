"""Information-need suite: SPARQL versus a keyword baseline, plus query timing.

Needs file (tab separated, ``#`` comments)::

    id  date_from  date_to  keywords  sparql_path  description

Judgments file (tab separated)::

    need_id  doc_id  relevant|irrelevant
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
import time
from collections import Counter
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, Optional, Sequence

from owa.layer import DC_DATE, DC_TITLE, OAE_DETECTED_AS, SCHEMA_MENTIONS, SCHEMA_TEXT
from owa.rdf.store import GraphStore
from owa.rdf.terms import V_TEMPORAL, term_value
from owa.sparql.engine import Engine, ResultTable
from owa.sparql.parser import QuerySyntaxError, parse_query

log = logging.getLogger(__name__)

_WORD_RE = re.compile(r"\w+", re.UNICODE)

METRIC_COLUMNS = (
    "sparql_hits",
    "sparql_relevant",
    "baseline_hits",
    "baseline_relevant_in_sparql",
    "baseline_relevant_not_in_sparql",
)


class SuiteError(ValueError):
    pass


class NeedQueryError(QuerySyntaxError):
    """A need's SPARQL does not parse; carries the need id."""

    def __init__(self, need_id: int, cause: QuerySyntaxError) -> None:
        ValueError.__init__(self, f"need {need_id}: {cause}")
        self.need_id = need_id
        self.position = cause.position
        self.expected = cause.expected
        self.cause = cause


@dataclass
class InfoNeed:
    id: int
    description: str
    sparql: str
    keywords: str
    date_from: date
    date_to: date

    def __post_init__(self) -> None:
        if self.date_to < self.date_from:
            raise SuiteError(f"need {self.id}: date range is empty")


@dataclass(frozen=True)
class SearchDoc:
    id: str
    when: date
    text: str


def load_needs(path) -> list[InfoNeed]:
    """Read a needs file; SPARQL paths are relative to the file and must parse."""
    path = Path(path)
    needs = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 6:
            raise SuiteError(f"{path}:{lineno}: expected 6 tab-separated fields, got {len(parts)}")
        nid, d0, d1, keywords, qpath, description = parts
        sparql = (path.parent / qpath).read_text(encoding="utf-8")
        need = InfoNeed(int(nid), description, sparql, keywords, date.fromisoformat(d0), date.fromisoformat(d1))
        try:
            parse_query(sparql)
        except QuerySyntaxError as exc:
            raise NeedQueryError(need.id, exc) from exc
        needs.append(need)
    return needs


def load_judgments(path) -> dict[int, dict[str, bool]]:
    out: dict[int, dict[str, bool]] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 3 or parts[2] not in ("relevant", "irrelevant"):
            raise SuiteError(f"{path}:{lineno}: expected need_id, doc_id, relevant|irrelevant")
        out.setdefault(int(parts[0]), {})[parts[1]] = parts[2] == "relevant"
    return out


# -- baseline --


def _terms(text: str) -> list[str]:
    return [w.lower() for w in _WORD_RE.findall(text)]


def keyword_search(docs: Iterable[SearchDoc], keywords: str, date_from: date, date_to: date) -> list[str]:
    """Rank in-range docs by summed per-term occurrence counts; zero scores are dropped.

    Ties keep ids ascending so the ranking is deterministic.
    """
    query = set(_terms(keywords))
    scored = []
    for doc in docs:
        if not date_from <= doc.when <= date_to:
            continue
        counts = Counter(_terms(doc.text))
        score = sum(counts[t] for t in query)
        if score > 0:
            scored.append((-score, doc.id))
    scored.sort()
    return [doc_id for _, doc_id in scored]


def _as_day(term) -> Optional[date]:
    kind, value = term_value(term)
    if kind != V_TEMPORAL:
        return None
    return value.date()


def layer_documents(store: GraphStore) -> list[SearchDoc]:
    """Searchable text per dated layer document: titles, tweet text and mention surfaces."""
    docs = []
    for subj, _, when in store.match(None, DC_DATE, None):
        day = _as_day(when)
        if day is None or subj.kind != "iri":
            continue
        parts = [o.value for _, _, o in store.match(subj, DC_TITLE, None)]
        parts += [o.value for _, _, o in store.match(subj, SCHEMA_TEXT, None)]
        for _, _, m in store.match(subj, SCHEMA_MENTIONS, None):
            parts += [o.value for _, _, o in store.match(m, OAE_DETECTED_AS, None)]
        docs.append(SearchDoc(subj.value, day, " ".join(parts)))
    docs.sort(key=lambda d: d.id)
    return docs


def corpus_documents(path) -> list[SearchDoc]:
    """Full-text docs from a news (url/date/title/body) or tweet (id/created_at/text) JSONL corpus."""
    docs = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
            if "body" in rec:
                docs.append(SearchDoc(rec["url"], date.fromisoformat(rec["date"][:10]),
                                      f"{rec.get('title', '')}\n{rec['body']}"))
            else:
                when = datetime.fromisoformat(rec["created_at"].replace("Z", "+00:00")).date()
                url = f"https://twitter.com/{rec['screen_name']}/status/{rec['id']}"
                docs.append(SearchDoc(url, when, rec["text"]))
        except (KeyError, ValueError, TypeError) as exc:
            log.warning("skipping corpus record: %s", exc)
    docs.sort(key=lambda d: d.id)
    return docs


# -- suite --


@dataclass
class NeedMetrics:
    need_id: int
    sparql_hits: int
    sparql_relevant: int
    baseline_hits: int
    baseline_relevant_in_sparql: int
    baseline_relevant_not_in_sparql: int

    def values(self) -> tuple[int, ...]:
        return tuple(getattr(self, c) for c in METRIC_COLUMNS)

    def check(self) -> None:
        if self.sparql_relevant > self.sparql_hits:
            raise SuiteError(f"need {self.need_id}: sparql_relevant exceeds sparql_hits")
        if self.baseline_relevant_in_sparql + self.baseline_relevant_not_in_sparql > self.baseline_hits:
            raise SuiteError(f"need {self.need_id}: baseline relevant counts exceed baseline_hits")


def _hits(table: ResultTable) -> list[str]:
    out = []
    for row in table.rows:
        term = row[0] if row else None
        if term is not None:
            out.append(term.value if term.kind == "iri" else str(term))
    return list(dict.fromkeys(out))


def _evaluate(engine: Engine, need: InfoNeed) -> ResultTable:
    try:
        return engine.evaluate(need.sparql)
    except QuerySyntaxError as exc:
        raise NeedQueryError(need.id, exc) from exc


def run_suite(needs: Sequence[InfoNeed], judgments: dict[int, dict[str, bool]], engine: Engine,
              docs: Sequence[SearchDoc], known_docs: Optional[set[str]] = None) -> list[NeedMetrics]:
    """Score every need; the first projected column of the SPARQL result is the document id.

    ``known_docs`` (usually the layer's dated documents) enables the check that
    every judged document exists in the layer.
    """
    out = []
    for need in needs:
        judged = judgments.get(need.id, {})
        if known_docs is not None:
            missing = sorted(d for d in judged if d not in known_docs)
            if missing:
                raise SuiteError(f"need {need.id}: judged document not in layer: {missing[0]}")
        relevant = {d for d, rel in judged.items() if rel}
        sparql = set(_hits(_evaluate(engine, need)))
        baseline = set(keyword_search(docs, need.keywords, need.date_from, need.date_to))
        m = NeedMetrics(
            need.id,
            sparql_hits=len(sparql),
            sparql_relevant=len(sparql & relevant),
            baseline_hits=len(baseline),
            baseline_relevant_in_sparql=len(baseline & relevant & sparql),
            baseline_relevant_not_in_sparql=len((baseline & relevant) - sparql),
        )
        m.check()
        out.append(m)
    return out


@dataclass
class NeedTiming:
    need_id: int
    warmup_ms: float
    runs_ms: list[float] = field(default_factory=list)

    @property
    def mean_ms(self) -> float:
        return sum(self.runs_ms) / len(self.runs_ms)


@dataclass
class TimingTable:
    runs: int
    rows: list[NeedTiming]

    @property
    def mean_ms(self) -> float:
        return sum(r.mean_ms for r in self.rows) / len(self.rows) if self.rows else 0.0


def time_queries(needs: Sequence[InfoNeed], engine: Engine, runs: int = 10,
                 clock=time.perf_counter) -> TimingTable:
    """Time each need's query ``runs`` times after one untimed-for-stats warm-up run.

    Needs run sequentially; result rows must be identical across runs.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    rows = []
    for need in needs:
        query = parse_query(need.sparql)
        t0 = clock()
        reference = engine.evaluate(query)
        timing = NeedTiming(need.id, (clock() - t0) * 1000.0)
        for _ in range(runs):
            t0 = clock()
            result = engine.evaluate(query)
            timing.runs_ms.append((clock() - t0) * 1000.0)
            if result.rows != reference.rows:
                raise SuiteError(f"need {need.id}: result rows changed between runs")
        rows.append(timing)
    return TimingTable(runs, rows)


# -- output --


def metrics_csv(metrics: Sequence[NeedMetrics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("need",) + METRIC_COLUMNS)
    for m in metrics:
        w.writerow((m.need_id,) + m.values())
    w.writerow(("total",) + tuple(sum(m.values()[i] for m in metrics) for i in range(len(METRIC_COLUMNS))))
    return buf.getvalue()


def timing_csv(table: TimingTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["need", "warmup (ms)"] + [f"R{i} (ms)" for i in range(1, table.runs + 1)] + ["Average (ms)"])
    for r in table.rows:
        w.writerow([r.need_id, f"{r.warmup_ms:.2f}"] + [f"{x:.2f}" for x in r.runs_ms] + [f"{r.mean_ms:.2f}"])
    w.writerow(["all", ""] + [""] * table.runs + [f"{table.mean_ms:.2f}"])
    return buf.getvalue()


def _align(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = [" | ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def summary_text(metrics: Sequence[NeedMetrics], timing: Optional[TimingTable] = None) -> str:
    rows = [["need"] + list(METRIC_COLUMNS)]
    rows += [[str(m.need_id)] + [str(v) for v in m.values()] for m in metrics]
    rows.append(["total"] + [str(sum(m.values()[i] for m in metrics)) for i in range(len(METRIC_COLUMNS))])
    out = _align(rows)
    if timing is not None:
        trows = [["need", "warmup"] + [f"R{i}" for i in range(1, timing.runs + 1)] + ["Average"]]
        for r in timing.rows:
            trows.append([str(r.need_id), f"{r.warmup_ms:.2f}"] + [f"{x:.2f}" for x in r.runs_ms]
                         + [f"{r.mean_ms:.2f}"])
        trows.append(["all", ""] + [""] * timing.runs + [f"{timing.mean_ms:.2f}"])
        out += "\n" + _align(trows)
    return out
