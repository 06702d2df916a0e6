from __future__ import annotations

import random
from collections import defaultdict
from datetime import date, datetime

from hypothesis import given, settings
from hypothesis import strategies as st

from owa.archive_io import CdxRecord
from owa.content import NewsArticle, PageContent, TweetRecord
from owa.layer import (
    DC_DATE,
    DC_HAS_VERSION,
    DC_TITLE,
    FULL,
    OA_ANNOTATION,
    OAE_MATCHED,
    OWA_ARCHIVED,
    OWA_FIRST,
    OWA_LAST,
    OWA_NUM,
    OWA_VERSIONED,
    OWL_SAMEAS,
    RDF_TYPE,
    SCHEMA_MENTIONS,
    TW_RETWEETS,
    TW_TWEET,
    Manifest,
    detect_duplicates,
    emit_archived_doc,
    emit_article,
    emit_sameas,
    emit_tweet,
    emit_version,
    enrich_entities,
    group_versions,
    select_versions,
    serialize_layer,
    version_node,
)
from owa.linker import EntityMention
from owa.rdf import n3
from owa.rdf.store import GraphStore, store_from
from owa.rdf.terms import XSD_DATE, XSD_DATETIME, XSD_INTEGER, IRI, Literal, Triple, term_value

DBR = "http://dbpedia.org/resource/"


def cap(url="u1", ts="20120101000000", digest="A", mime="text/html", status=200, size=100):
    return CdxRecord(f"org,{url})/", ts, f"http://{url}.org/", mime, status, digest, None, None, size, 0, "f.warc.gz")


# -- grouping --


def test_group_versions_partitions_and_sorts():
    groups = group_versions([cap("u1", "20120101000000"), cap("u2", "20120201000000"), cap("u1", "20110101000000")])
    assert {k: [r.timestamp for r in g] for k, g in groups.items()} == {
        "org,u1)/": ["20110101000000", "20120101000000"],
        "org,u2)/": ["20120201000000"],
    }


def test_single_capture_group():
    assert len(group_versions([cap()])["org,u1)/"]) == 1


def test_duplicate_url_timestamp_kept_once():
    a, b = cap(digest="A"), cap(digest="B")
    (group,) = group_versions([a, b]).values()
    assert group == [a]


# -- duplicates --


def _group(digests):
    return [cap(ts=f"2012010100{i:02d}00", digest=d) for i, d in enumerate(digests)]


def test_earliest_digest_is_canonical():
    assert detect_duplicates(_group("AAB")) == [None, 0, None]


def test_all_distinct():
    assert detect_duplicates(_group("ABC")) == [None, None, None]


def test_digest_class_not_adjacency():
    assert detect_duplicates(_group("ABA")) == [None, None, 0]


@settings(max_examples=300)
@given(st.lists(st.sampled_from("ABCD"), max_size=12))
def test_duplicates_match_brute_force(digests):
    group = _group(digests)
    got = detect_duplicates(group)
    for i, rec in enumerate(group):
        earlier = [j for j in range(i) if group[j].digest == rec.digest]
        assert got[i] == (earlier[0] if earlier else None)


def test_select_versions_rules():
    recs = [
        cap(ts="20120101000000", digest="A"),
        cap(ts="20120102000000", digest="A", mime="warc/revisit", status=None),  # revisit of A
        cap(ts="20120103000000", digest="B", size=200 * 1024),  # over the cap
        cap(ts="20120104000000", digest="C", status=404),
        cap(ts="20120105000000", digest="D", mime="image/png"),
        cap(ts="20120106000000", digest="Z", mime="warc/revisit", status=None),  # revisit of nothing known
    ]
    chosen = select_versions(recs)
    assert [r.timestamp for r in chosen] == ["20120101000000", "20120102000000"]


# -- emission --


def test_archived_doc_counts_and_bounds():
    group = [cap(ts="20111001000000"), cap(ts="20120105000000", digest="B"), cap(ts="20120106000000")]
    versions = [version_node(r) for r in group]
    doc = IRI("http://u1.org/")
    out = emit_archived_doc(group, detect_duplicates(group), doc, versions)
    assert Triple(doc, OWA_NUM, Literal("3", XSD_INTEGER)) in out
    assert Triple(doc, OWA_FIRST, Literal("2011-10-01T00:00:00", XSD_DATETIME)) in out
    assert Triple(doc, OWA_LAST, Literal("2012-01-06T00:00:00", XSD_DATETIME)) in out
    assert sum(1 for t in out if t.predicate == DC_HAS_VERSION) == 3


def test_single_capture_first_equals_last():
    doc = IRI("http://u1.org/")
    out = emit_archived_doc([cap()], [None], doc, [version_node(cap())])
    first = next(t.object for t in out if t.predicate == OWA_FIRST)
    last = next(t.object for t in out if t.predicate == OWA_LAST)
    assert first == last


def test_version_node_template_and_fallback():
    rec = cap()
    assert version_node(rec, "https://wb.org/2950/{timestamp}/{original_url}") == \
        IRI("https://wb.org/2950/20120101000000/http://u1.org/")
    node = version_node(rec)
    assert node.is_blank and node.value.endswith("-20120101000000")


def test_version_mentions_become_numbered_blank_nodes():
    node = IRI("http://v/1")
    mentions = [EntityMention("Nadal", 30, -1.0, DBR + "Rafael_Nadal"), EntityMention("Federer", 4, -0.5, DBR + "Roger_Federer")]
    out = emit_version(node, cap(), PageContent("T", [], "x"), mentions)
    ents = sorted((t.object for t in out if t.predicate == SCHEMA_MENTIONS), key=lambda b: b.value)
    assert [e.value.rsplit("-", 1)[1] for e in ents] == ["0", "1"]
    assert all(e.is_blank and e.value.startswith("e") for e in ents)
    # rank by position: Federer (offset 4) is mention 0
    by_uri = {t.object.value: t.subject for t in out if t.predicate == OAE_MATCHED}
    assert by_uri[DBR + "Roger_Federer"].value.endswith("-0")


def test_version_without_title():
    out = emit_version(IRI("http://v/1"), cap(), PageContent(None, ["http://l.org/"], ""), [])
    assert not any(t.predicate == DC_TITLE for t in out)
    assert Triple(IRI("http://v/1"), RDF_TYPE, OWA_VERSIONED) in out


def test_full_annotation_mode():
    out = emit_version(IRI("http://v/1"), cap(), None, [EntityMention("X", 0, 0.0, "http://e/X")], FULL)
    assert any(t.object == OA_ANNOTATION for t in out)
    assert not any(t.predicate == SCHEMA_MENTIONS for t in out)


def test_sameas_is_exactly_three_triples():
    v1, v2 = IRI("http://v/1"), IRI("http://v/2")
    out = emit_sameas(v2, cap(ts="20120102000000"), v1)
    assert len(out) == 3
    assert {t.predicate for t in out} == {RDF_TYPE, DC_DATE, OWL_SAMEAS}
    assert Triple(v2, OWL_SAMEAS, v1) in out


def test_canonical_emits_no_sameas():
    assert emit_sameas(IRI("http://v/1"), cap(), None) == []


def test_two_duplicates_point_at_the_canonical():
    group = _group("AAA")
    nodes = [version_node(r) for r in group]
    edges = [t for r, n, c in zip(group, nodes, detect_duplicates(group)) if c is not None
             for t in emit_sameas(n, r, nodes[c]) if t.predicate == OWL_SAMEAS]
    assert [t.object for t in edges] == [nodes[0], nodes[0]]


def test_article_date_is_xsd_date():
    art = NewsArticle("a1", "http://n.org/a1", "Title", date(1989, 6, 15), "body")
    out = emit_article(art, [])
    assert Triple(IRI("http://n.org/a1"), DC_DATE, Literal("1989-06-15", XSD_DATE)) in out
    assert Triple(IRI("http://n.org/a1"), RDF_TYPE, OWA_ARCHIVED) in out
    assert not any(t.predicate in (OWA_FIRST, OWA_LAST) for t in out)


def test_tweet_counts_and_types():
    tw = TweetRecord("9", 'say "hi"', datetime(2016, 3, 1, 10), 3, 51, "u")
    out = emit_tweet(tw, [])
    node = IRI("https://twitter.com/u/status/9")
    assert Triple(node, TW_RETWEETS, Literal("51", XSD_INTEGER)) in out
    assert Triple(node, RDF_TYPE, TW_TWEET) in out and Triple(node, RDF_TYPE, OWA_ARCHIVED) in out
    text = serialize_layer(out)
    assert '"say \\"hi\\""' in text
    assert set(n3.parse(text)) == set(out)


# -- enrichment --


def test_enrich_copies_subject_facts():
    kb = [Triple(IRI(DBR + "A"), IRI("http://p/" + str(i)), Literal(i)) for i in range(3)]
    kb.append(Triple(IRI(DBR + "B"), IRI("http://p/x"), Literal(9)))
    store = store_from(kb)
    assert len(enrich_entities({DBR + "A"}, store)) == 3
    assert enrich_entities({DBR + "Missing"}, store) == []
    layer = GraphStore()
    layer.insert_many(enrich_entities({DBR + "A"}, store))
    layer.insert_many(enrich_entities({DBR + "A", DBR + "B"}, store))
    assert len(layer) == 4


# -- serialization --


def test_serialization_is_order_independent():
    ts = emit_tweet(TweetRecord("1", "x", datetime(2016, 1, 1), 0, 0, "u"), [EntityMention("x", 0, 0.0, "http://e/X")])
    shuffled = ts[:]
    random.Random(1).shuffle(shuffled)
    assert serialize_layer(ts) == serialize_layer(shuffled)
    assert "^^xsd:integer" in serialize_layer(ts)


def test_manifest_round_trip():
    m = Manifest(kind="warc", documents=3, versions=7, same_as=1, mentions=9, triples=50)
    assert Manifest.from_text(m.to_text()) == m


# -- invariants on a built layer --


def layer_violations(store) -> tuple[int, int, int]:
    """(archived-document violations, same-as versions with extra triples, same-as versions)."""
    bad_docs = 0
    for doc, _, _ in store.match(None, RDF_TYPE, OWA_ARCHIVED):
        versions = [v for _, _, v in store.match(doc, DC_HAS_VERSION, None)]
        (num,) = [int(o.value) for _, _, o in store.match(doc, OWA_NUM, None)]
        (first,) = [o for _, _, o in store.match(doc, OWA_FIRST, None)]
        (last,) = [o for _, _, o in store.match(doc, OWA_LAST, None)]
        dates = [term_value(o)[1] for v in versions for _, _, o in store.match(v, DC_DATE, None)]
        if num != len(versions) or min(dates) != term_value(first)[1] or max(dates) != term_value(last)[1]:
            bad_docs += 1
    sameas = {s for s, _, _ in store.match(None, OWL_SAMEAS, None)}
    fat = sum(1 for v in sameas if len(list(store.match(v, None, None))) != 3)
    return bad_docs, fat, len(sameas)


def test_fixture_web_layer_invariants(small_fx):
    from owa.pipeline import load_store

    store = load_store([small_fx.layers["warc"]])
    bad_docs, fat, n_sameas = layer_violations(store)
    assert bad_docs == 0 and fat == 0
    n_versions = sum(1 for _ in store.match(None, RDF_TYPE, OWA_VERSIONED))
    assert n_versions == small_fx.web.captures
    assert n_sameas * 100 == 15 * n_versions
    # same-as targets are strictly earlier versions of the same page
    page_of = defaultdict(set)
    for doc, _, v in store.match(None, DC_HAS_VERSION, None):
        page_of[v].add(doc)
    for v, _, canon in store.match(None, OWL_SAMEAS, None):
        assert page_of[v] == page_of[canon]
        (dv,) = [o for _, _, o in store.match(v, DC_DATE, None)]
        (dc,) = [o for _, _, o in store.match(canon, DC_DATE, None)]
        assert term_value(dc)[1] < term_value(dv)[1]
