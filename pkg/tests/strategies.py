"""Hypothesis strategies for RDF terms and triple sets."""

from __future__ import annotations

from hypothesis import strategies as st

from owa.rdf.terms import (
    DBR, DCTERMS, OAE, OWA, XSD_DATE, XSD_DATETIME, XSD_DOUBLE, XSD_INTEGER, BNode, IRI, Term, Triple,
)

NAMESPACES = [OWA, OAE, DCTERMS, DBR, "http://example.org/ns/", "https://x.test/a%20b/", "urn:test:"]

# characters legal inside an IRI reference, including a few non-ASCII ones
_IRI_CHARS = st.sampled_from(list("abcXYZ019_-.~:/?#[]@!$&'()*+,;=%") + ["é", "ß", "中"])
_LABEL_HEAD = st.sampled_from(list("abcxyzABC0129_"))
_LABEL_TAIL = st.sampled_from(list("abcxyz0129_-."))

# literal text: any non-surrogate character except the controls without an escape
_TEXT = st.text(
    alphabet=st.characters(
        blacklist_categories=("Cs",),
        blacklist_characters="".join(chr(c) for c in list(range(0, 8)) + [11] + list(range(14, 32)) + [127]),
    ),
    max_size=20,
)


@st.composite
def iris(draw) -> Term:
    ns = draw(st.sampled_from(NAMESPACES))
    return IRI(ns + draw(st.text(alphabet=_IRI_CHARS, max_size=12)))


@st.composite
def blanks(draw) -> Term:
    head = draw(_LABEL_HEAD)
    tail = draw(st.text(alphabet=_LABEL_TAIL, max_size=6)).rstrip(".")
    return BNode(head + tail)


@st.composite
def literals(draw) -> Term:
    text = draw(_TEXT)
    flavour = draw(st.sampled_from(["plain", "lang", "int", "double", "date", "datetime", "custom"]))
    if flavour == "plain":
        return Term("literal", text)
    if flavour == "lang":
        tag = draw(st.sampled_from(["en", "fr", "de-ch", "zh-hant"]))
        return Term("literal", text, None, tag)
    if flavour == "int":
        return Term("literal", str(draw(st.integers(-10**12, 10**12))), XSD_INTEGER)
    if flavour == "double":
        value = draw(st.floats(allow_nan=False, allow_infinity=False))
        return Term("literal", repr(value), XSD_DOUBLE)
    if flavour == "date":
        return Term("literal", draw(st.dates()).isoformat(), XSD_DATE)
    if flavour == "datetime":
        return Term("literal", draw(st.datetimes()).strftime("%Y-%m-%dT%H:%M:%S"), XSD_DATETIME)
    # arbitrary datatype IRI with arbitrary (possibly ill-typed) lexical form
    return Term("literal", text, draw(iris()).value)


subjects = st.one_of(iris(), blanks())
objects = st.one_of(iris(), blanks(), literals())


@st.composite
def triples(draw) -> Triple:
    return Triple(draw(subjects), draw(iris()), draw(objects))


triple_sets = st.lists(triples(), max_size=25)
