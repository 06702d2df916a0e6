"""Open Web Archive triples for captures, articles and tweets."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, fields
from datetime import datetime
from typing import Iterable, Mapping, Optional, Sequence

from owa.archive_io import parse_timestamp
from owa.content import NewsArticle, PageContent, TweetRecord
from owa.linker import EntityMention
from owa.rdf import n3
from owa.rdf.store import GraphStore
from owa.rdf.terms import (
    DBR,
    DCTERMS,
    OA,
    OAE,
    OWA,
    OWL,
    RDF,
    SCHEMA,
    TW,
    XSD,
    XSD_DATE,
    XSD_DATETIME,
    XSD_DOUBLE,
    XSD_INTEGER,
    BNode,
    IRI,
    Literal,
    Term,
    Triple,
    format_datetime,
    format_double,
)

RDF_TYPE = IRI(RDF + "type")
OWA_ARCHIVED = IRI(OWA + "ArchivedDocument")
OWA_VERSIONED = IRI(OWA + "VersionedDocument")
OWA_FIRST = IRI(OWA + "firstCapture")
OWA_LAST = IRI(OWA + "lastCapture")
OWA_NUM = IRI(OWA + "numOfCaptures")
DC_DATE = IRI(DCTERMS + "date")
DC_FORMAT = IRI(DCTERMS + "format")
DC_TITLE = IRI(DCTERMS + "title")
DC_REFERENCES = IRI(DCTERMS + "references")
DC_HAS_VERSION = IRI(DCTERMS + "hasVersion")
DC_CREATOR = IRI(DCTERMS + "creator")
OWL_SAMEAS = IRI(OWL + "sameAs")
SCHEMA_MENTIONS = IRI(SCHEMA + "mentions")
SCHEMA_TEXT = IRI(SCHEMA + "text")
OAE_ENTITY = IRI(OAE + "Entity")
OAE_CONFIDENCE = IRI(OAE + "confidence")
OAE_DETECTED_AS = IRI(OAE + "detectedAs")
OAE_POSITION = IRI(OAE + "position")
OAE_MATCHED = IRI(OAE + "hasMatchedURI")
OA_ANNOTATION = IRI(OA + "Annotation")
OA_TARGET = IRI(OA + "hasTarget")
OA_BODY = IRI(OA + "hasBody")
TW_TWEET = IRI(TW + "Tweet")
TW_RETWEETS = IRI(TW + "retweetCount")
TW_FAVORITES = IRI(TW + "favoriteCount")

LAYER_PREFIXES: dict[str, str] = {
    "dbr": DBR,
    "dcterms": DCTERMS,
    "oa": OA,
    "oae": OAE,
    "owa": OWA,
    "owl": OWL,
    "rdf": RDF,
    "schema": SCHEMA,
    "tw": TW,
    "xsd": XSD,
}

COMPACT = "compact"
FULL = "full"

_CONTROL_RE = re.compile(r"[\x00-\x08\x0b\x0c\x0e-\x1f\x7f]")
_BAD_IRI_RE = re.compile(r'[\x00-\x20<>"{}|^`\\]')


def stable_hex(text: str, size: int = 8) -> str:
    return hashlib.blake2b(text.encode("utf-8"), digest_size=size).hexdigest()


def clean_text(text: str) -> str:
    """Drop control characters that have no escape in the output grammar."""
    return _CONTROL_RE.sub("", text)


def safe_iri(value: str) -> Optional[Term]:
    if not value or _BAD_IRI_RE.search(value) or ":" not in value:
        return None
    return IRI(value)


def node_label(term: Term) -> str:
    return str(term)


def _datetime_literal(dt: datetime) -> Term:
    return Literal(format_datetime(dt), XSD_DATETIME)


# -- grouping and duplicates --


def group_versions(records: Iterable) -> dict[str, list]:
    """Partition captures by SURT key, each group ordered by timestamp.

    A repeated (url, timestamp) pair keeps its first occurrence.
    """
    groups: dict[str, list] = {}
    seen: set[tuple[str, str]] = set()
    for rec in records:
        key = (rec.surt_url, rec.timestamp)
        if key in seen:
            continue
        seen.add(key)
        groups.setdefault(rec.surt_url, []).append(rec)
    for group in groups.values():
        group.sort(key=lambda r: r.timestamp)
    return dict(sorted(groups.items()))


def detect_duplicates(group: Sequence) -> list[Optional[int]]:
    """For each version, ``None`` if canonical, else the index of the earliest
    version with the same digest."""
    first_by_digest: dict[str, int] = {}
    out: list[Optional[int]] = []
    for i, rec in enumerate(group):
        first = first_by_digest.get(rec.digest)
        if first is None:
            first_by_digest[rec.digest] = i
            out.append(None)
        else:
            out.append(first)
    return out


def select_versions(records: Iterable, size_cap: int = 100 * 1024) -> list:
    """Pick the captures that become versions.

    Records under the size cap that are HTML 200 responses are candidates; the
    earliest per (url, digest) is canonical and any later record with the same
    digest (revisit records included) becomes a duplicate of it.
    """
    sized = [r for r in records if r.compressed_size < size_cap]
    earliest: dict[tuple[str, str], object] = {}
    for r in sized:
        if r.status == 200 and r.mime == "text/html":
            key = (r.surt_url, r.digest)
            cur = earliest.get(key)
            if cur is None or r.timestamp < cur.timestamp:
                earliest[key] = r
    chosen = []
    for r in sized:
        canon = earliest.get((r.surt_url, r.digest))
        if canon is None:
            continue
        if r is canon or r.timestamp > canon.timestamp:
            chosen.append(r)
    return chosen


# -- node naming --


def version_node(rec, template: Optional[str] = None) -> Term:
    if template:
        value = template.format(timestamp=rec.timestamp, original_url=rec.original_url, surt_url=rec.surt_url)
        node = safe_iri(value)
        if node is not None:
            return node
    return BNode(f"v{stable_hex(rec.surt_url)}-{rec.timestamp}")


def document_node(group: Sequence) -> Term:
    node = safe_iri(group[0].original_url)
    return node if node is not None else BNode(f"d{stable_hex(group[0].surt_url)}")


# -- emission --


def emit_archived_doc(group: Sequence, assignment: Sequence[Optional[int]], doc: Term,
                      versions: Sequence[Term]) -> list[Triple]:
    """Document-level triples; ``assignment`` is accepted for symmetry, every
    version (same-as ones included) is counted."""
    times = [parse_timestamp(r.timestamp) for r in group]
    out = [
        Triple(doc, RDF_TYPE, OWA_ARCHIVED),
        Triple(doc, OWA_FIRST, _datetime_literal(min(times))),
        Triple(doc, OWA_LAST, _datetime_literal(max(times))),
        Triple(doc, OWA_NUM, Literal(str(len(group)), XSD_INTEGER)),
    ]
    out.extend(Triple(doc, DC_HAS_VERSION, v) for v in versions)
    return out


def emit_mentions(doc: Term, mentions: Sequence[EntityMention], mode: str = COMPACT) -> list[Triple]:
    uid = stable_hex(node_label(doc))
    out: list[Triple] = []
    ordered = sorted(mentions, key=lambda m: (m.position, m.uri))
    for i, m in enumerate(ordered):
        target = safe_iri(m.uri)
        if target is None:
            continue
        ent = BNode(f"e{uid}-{i}")
        if mode == FULL:
            ann = BNode(f"a{uid}-{i}")
            out += [
                Triple(ann, RDF_TYPE, OA_ANNOTATION),
                Triple(ann, OA_TARGET, doc),
                Triple(ann, OA_BODY, ent),
            ]
        else:
            out.append(Triple(doc, SCHEMA_MENTIONS, ent))
        out += [
            Triple(ent, RDF_TYPE, OAE_ENTITY),
            Triple(ent, OAE_CONFIDENCE, Literal(format_double(m.confidence), XSD_DOUBLE)),
            Triple(ent, OAE_DETECTED_AS, Literal(clean_text(m.surface))),
            Triple(ent, OAE_POSITION, Literal(str(m.position), XSD_INTEGER)),
            Triple(ent, OAE_MATCHED, target),
        ]
    return out


def emit_version(node: Term, rec, content: Optional[PageContent], mentions: Sequence[EntityMention],
                 mode: str = COMPACT) -> list[Triple]:
    out = [
        Triple(node, RDF_TYPE, OWA_VERSIONED),
        Triple(node, DC_DATE, _datetime_literal(parse_timestamp(rec.timestamp))),
        Triple(node, DC_FORMAT, Literal(rec.mime)),
    ]
    if content is not None:
        title = clean_text(content.title or "").strip()
        if title:
            out.append(Triple(node, DC_TITLE, Literal(title)))
        for url in content.links:
            target = safe_iri(url)
            if target is not None:
                out.append(Triple(node, DC_REFERENCES, target))
    out += emit_mentions(node, mentions, mode)
    return out


def emit_sameas(node: Term, rec, canonical: Optional[Term]) -> list[Triple]:
    if canonical is None:
        return []
    return [
        Triple(node, RDF_TYPE, OWA_VERSIONED),
        Triple(node, DC_DATE, _datetime_literal(parse_timestamp(rec.timestamp))),
        Triple(node, OWL_SAMEAS, canonical),
    ]


def article_node(article: NewsArticle) -> Term:
    return safe_iri(article.url) or BNode(f"n{stable_hex(article.id)}")


def emit_article(article: NewsArticle, mentions: Sequence[EntityMention], mode: str = COMPACT) -> list[Triple]:
    node = article_node(article)
    out = [
        Triple(node, RDF_TYPE, OWA_ARCHIVED),
        Triple(node, DC_DATE, Literal(article.publication_date.isoformat(), XSD_DATE)),
        Triple(node, DC_TITLE, Literal(clean_text(article.title))),
    ]
    return out + emit_mentions(node, mentions, mode)


def tweet_node(tweet: TweetRecord) -> Term:
    return safe_iri(f"https://twitter.com/{tweet.screen_name}/status/{tweet.id}") or BNode(f"t{stable_hex(tweet.id)}")


def emit_tweet(tweet: TweetRecord, mentions: Sequence[EntityMention], mode: str = COMPACT) -> list[Triple]:
    node = tweet_node(tweet)
    out = [
        Triple(node, RDF_TYPE, TW_TWEET),
        Triple(node, RDF_TYPE, OWA_ARCHIVED),
        Triple(node, DC_DATE, _datetime_literal(tweet.created_at)),
        Triple(node, SCHEMA_TEXT, Literal(clean_text(tweet.text))),
        Triple(node, TW_RETWEETS, Literal(str(tweet.retweet_count), XSD_INTEGER)),
        Triple(node, TW_FAVORITES, Literal(str(tweet.favorite_count), XSD_INTEGER)),
        Triple(node, DC_CREATOR, Literal(clean_text(tweet.screen_name))),
    ]
    return out + emit_mentions(node, mentions, mode)


def enrich_entities(mention_uris: Iterable[str], kb_store: GraphStore) -> list[Triple]:
    """Copy every KB triple whose subject is one of the matched entity IRIs."""
    out: dict[Triple, None] = {}
    for uri in sorted(set(mention_uris)):
        for t in kb_store.match(IRI(uri), None, None):
            out[t] = None
    return list(out)


def matched_uris(triples: Iterable[Triple]) -> set[str]:
    return {t.object.value for t in triples if t.predicate == OAE_MATCHED and t.object.is_iri}


def serialize_layer(triples: Iterable[Triple], prefix_map: Optional[Mapping[str, str]] = None) -> str:
    return n3.serialize(triples, LAYER_PREFIXES if prefix_map is None else prefix_map)


@dataclass
class Manifest:
    kind: str = ""
    documents: int = 0
    versions: int = 0
    same_as: int = 0
    mentions: int = 0
    triples: int = 0
    enriched: int = 0
    truncated: int = 0
    skipped_input: int = 0
    filtered_by_metadata: int = 0

    def to_text(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)}\n" for f in fields(self))

    @classmethod
    def from_text(cls, text: str) -> "Manifest":
        values = {}
        for line in text.splitlines():
            key, sep, value = line.partition("=")
            if not sep:
                continue
            values[key.strip()] = value.strip()
        m = cls()
        for f in fields(cls):
            if f.name in values:
                setattr(m, f.name, values[f.name] if f.name == "kind" else int(values[f.name]))
        return m
