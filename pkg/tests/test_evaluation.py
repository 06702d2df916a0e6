from __future__ import annotations

import csv
import io
from datetime import date
from itertools import count

import pytest

from owa import evaluation as ev
from owa.evaluation import InfoNeed, NeedQueryError, SearchDoc, SuiteError
from owa.layer import DC_DATE, RDF_TYPE, OWA_ARCHIVED
from owa.rdf.store import store_from
from owa.rdf.terms import XSD_DATE, IRI, Literal, Triple
from owa.sparql.engine import Engine

from helpers import engine_for

D0, D1 = date(2000, 1, 1), date(2000, 12, 31)


def _need(nid=1, sparql="SELECT ?d WHERE { ?d a owa:ArchivedDocument }", keywords="volcano"):
    return InfoNeed(nid, "test need", sparql, keywords, D0, D1)


def _engine(*doc_ids):
    triples = []
    for d in doc_ids:
        triples += [Triple(IRI(d), RDF_TYPE, OWA_ARCHIVED), Triple(IRI(d), DC_DATE, Literal("2000-06-01", XSD_DATE))]
    return Engine(store_from(triples))


# -- keyword baseline --


DOCS = [
    SearchDoc("d1", date(2000, 3, 1), "volcano volcano lava volcano"),
    SearchDoc("d2", date(2000, 3, 1), "a Volcano erupts"),
    SearchDoc("d3", date(2001, 3, 1), "volcano volcano volcano volcano"),
    SearchDoc("d4", date(2000, 3, 1), "nothing here"),
]


def test_absent_term_gives_nothing():
    assert ev.keyword_search(DOCS, "glacier", D0, D1) == []


def test_more_hits_rank_higher_and_dates_filter():
    assert ev.keyword_search(DOCS, "volcano", D0, D1) == ["d1", "d2"]
    assert ev.keyword_search(DOCS, "VOLCANO lava", D0, D1) == ["d1", "d2"]
    assert ev.keyword_search(DOCS, "volcano", D0, date(2001, 12, 31))[0] == "d3"


# -- suite metrics --


def test_hits_and_relevant():
    (m,) = ev.run_suite([_need()], {1: {"http://x/d1": True, "http://x/d2": False}}, _engine("http://x/d1", "http://x/d2"), [])
    assert (m.sparql_hits, m.sparql_relevant) == (2, 1)


def test_relevant_baseline_doc_missed_by_sparql():
    docs = [SearchDoc("http://x/d3", date(2000, 5, 5), "volcano")]
    (m,) = ev.run_suite([_need()], {1: {"http://x/d3": True}}, _engine("http://x/d1"), docs)
    assert m.values() == (1, 0, 1, 0, 1)


def test_empty_judgments():
    docs = [SearchDoc("http://x/d1", date(2000, 5, 5), "volcano")]
    (m,) = ev.run_suite([_need()], {}, _engine("http://x/d1", "http://x/d2"), docs)
    assert m.values() == (2, 0, 1, 0, 0)


def test_judged_document_must_exist():
    with pytest.raises(SuiteError):
        ev.run_suite([_need()], {1: {"http://x/ghost": True}}, _engine("http://x/d1"), [], known_docs={"http://x/d1"})


def test_syntax_error_carries_need_id():
    with pytest.raises(NeedQueryError) as info:
        ev.run_suite([_need(7, sparql="SELECT WHERE")], {}, _engine(), [])
    assert info.value.need_id == 7


def test_bad_date_range():
    with pytest.raises(SuiteError):
        InfoNeed(1, "x", "SELECT * WHERE { ?s ?p ?o }", "k", D1, D0)


def test_load_needs_rejects_unparsable_query(tmp_path):
    (tmp_path / "q.rq").write_text("SELECT ?x WHERE { ?x ?y }")
    (tmp_path / "needs.tsv").write_text("3\t2000-01-01\t2000-02-01\tkw\tq.rq\tdesc\n")
    with pytest.raises(NeedQueryError) as info:
        ev.load_needs(tmp_path / "needs.tsv")
    assert info.value.need_id == 3


def test_load_judgments_rejects_bad_label(tmp_path):
    (tmp_path / "j.tsv").write_text("1\td1\tmaybe\n")
    with pytest.raises(SuiteError):
        ev.load_judgments(tmp_path / "j.tsv")


# -- timing --


def test_timing_layout_with_fake_clock():
    ticks = count(0, 0.002)  # every clock read advances 2 ms
    table = ev.time_queries([_need(1), _need(2)], _engine("http://x/d1"), runs=10, clock=lambda: next(ticks))
    assert [len(r.runs_ms) for r in table.rows] == [10, 10]
    assert all(abs(x - 2.0) < 1e-9 for r in table.rows for x in r.runs_ms)
    assert abs(table.mean_ms - 2.0) < 1e-9
    rows = list(csv.reader(io.StringIO(ev.timing_csv(table))))
    assert rows[0] == ["need", "warmup (ms)"] + [f"R{i} (ms)" for i in range(1, 11)] + ["Average (ms)"]
    assert rows[-1][0] == "all" and rows[-1][-1] == "2.00"


def test_single_run_equals_mean():
    (row,) = ev.time_queries([_need()], _engine("http://x/d1"), runs=1).rows
    assert row.runs_ms == [row.mean_ms]


def test_runs_must_be_positive():
    with pytest.raises(ValueError):
        ev.time_queries([_need()], _engine(), runs=0)


# -- fixture suite --


@pytest.fixture(scope="module")
def suite(small_fx):
    engine = engine_for(small_fx, ["news"])
    needs = ev.load_needs(small_fx.needs)
    judgments = ev.load_judgments(small_fx.judgments)
    layer_docs = ev.layer_documents(engine.store)
    return engine, needs, judgments, layer_docs


def test_fixture_suite_identities_and_determinism(small_fx, suite):
    engine, needs, judgments, layer_docs = suite
    known = {d.id for d in layer_docs}
    corpus = ev.corpus_documents(small_fx.news)
    first = ev.run_suite(needs, judgments, engine, corpus, known)
    assert first == ev.run_suite(needs, judgments, engine, corpus, known)
    assert len(first) == len(needs) >= 5
    for m in first:
        assert m.sparql_relevant <= m.sparql_hits
        assert m.baseline_relevant_in_sparql + m.baseline_relevant_not_in_sparql <= m.baseline_hits
    assert sum(m.sparql_relevant for m in first) > 0
    text = ev.metrics_csv(first).splitlines()
    assert text[0] == "need," + ",".join(ev.METRIC_COLUMNS)
    assert text[-1].startswith("total,")


def test_summary_text_has_both_tables(suite):
    engine, needs, judgments, layer_docs = suite
    metrics = ev.run_suite(needs, judgments, engine, layer_docs)
    timing = ev.time_queries(needs, engine, runs=2)
    text = ev.summary_text(metrics, timing)
    assert "baseline_relevant_not_in_sparql" in text
    assert "Average" in text and "R2" in text
