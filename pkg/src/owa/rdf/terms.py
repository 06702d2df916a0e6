"""RDF terms, triples, namespaces and value-space comparison."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from decimal import Decimal, InvalidOperation
from typing import NamedTuple, Optional

IRI_KIND = "iri"
BLANK_KIND = "blank"
LITERAL_KIND = "literal"

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"
OWL = "http://www.w3.org/2002/07/owl#"
DCTERMS = "http://purl.org/dc/terms/"
SCHEMA = "http://schema.org/"
OWA = "http://l3s.de/owa/core#"
OAE = "http://www.ics.forth.gr/isl/oae/core#"
OA = "http://www.w3.org/ns/oa#"
TW = "http://www.openlinksw.com/schemas/twitter#"
DBR = "http://dbpedia.org/resource/"
DBO = "http://dbpedia.org/ontology/"
DBC = "http://dbpedia.org/resource/Category:"
YAGO = "http://dbpedia.org/class/yago/"
NYT = "http://query.nytimes.com/gst/fullpage.html?res="

XSD_STRING = XSD + "string"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_DOUBLE = XSD + "double"
XSD_FLOAT = XSD + "float"
XSD_BOOLEAN = XSD + "boolean"
XSD_DATE = XSD + "date"
XSD_DATETIME = XSD + "dateTime"
RDF_LANGSTRING = RDF + "langString"

# Prefixes known without declaration, both in layer files and in queries.
STANDARD_PREFIXES: dict[str, str] = {
    "rdf": RDF,
    "rdfs": RDFS,
    "xsd": XSD,
    "owl": OWL,
    "dc": DCTERMS,
    "dcterms": DCTERMS,
    "schema": SCHEMA,
    "owa": OWA,
    "oae": OAE,
    "oa": OA,
    "tw": TW,
    "dbr": DBR,
    "dbo": DBO,
    "dbc": DBC,
    "yago": YAGO,
    "nyt": NYT,
}

INTEGER_TYPES = frozenset(
    XSD + t
    for t in (
        "integer", "int", "long", "short", "byte", "nonNegativeInteger",
        "positiveInteger", "negativeInteger", "nonPositiveInteger",
        "unsignedInt", "unsignedLong", "unsignedShort", "unsignedByte",
    )
)
NUMERIC_TYPES = INTEGER_TYPES | {XSD_DECIMAL, XSD_DOUBLE, XSD_FLOAT}


@dataclass(frozen=True, slots=True)
class Term:
    kind: str
    value: str
    datatype: Optional[str] = None
    lang: Optional[str] = None

    def __post_init__(self) -> None:
        if self.datatype is not None and self.lang is not None:
            raise ValueError("literal cannot carry both datatype and language tag")
        if self.datatype == XSD_STRING:
            # plain and xsd:string literals are the same term in RDF 1.1
            object.__setattr__(self, "datatype", None)

    @property
    def is_iri(self) -> bool:
        return self.kind == IRI_KIND

    @property
    def is_blank(self) -> bool:
        return self.kind == BLANK_KIND

    @property
    def is_literal(self) -> bool:
        return self.kind == LITERAL_KIND

    def __str__(self) -> str:
        if self.kind == IRI_KIND:
            return f"<{self.value}>"
        if self.kind == BLANK_KIND:
            return f"_:{self.value}"
        if self.lang:
            return f'"{self.value}"@{self.lang}'
        if self.datatype:
            return f'"{self.value}"^^<{self.datatype}>'
        return f'"{self.value}"'


class Triple(NamedTuple):
    subject: Term
    predicate: Term
    object: Term


def IRI(value: str) -> Term:
    return Term(IRI_KIND, value)


def BNode(label: str) -> Term:
    return Term(BLANK_KIND, label)


def Literal(value, datatype: Optional[str] = None, lang: Optional[str] = None) -> Term:
    """Build a literal; Python ints/floats/dates pick their XSD datatype."""
    if lang is not None:
        return Term(LITERAL_KIND, str(value), None, lang.lower())
    if datatype is None:
        if isinstance(value, bool):
            return Term(LITERAL_KIND, "true" if value else "false", XSD_BOOLEAN)
        if isinstance(value, int):
            return Term(LITERAL_KIND, str(value), XSD_INTEGER)
        if isinstance(value, float):
            return Term(LITERAL_KIND, format_double(value), XSD_DOUBLE)
        if isinstance(value, Decimal):
            return Term(LITERAL_KIND, format_decimal(value), XSD_DECIMAL)
        if isinstance(value, datetime):
            return Term(LITERAL_KIND, format_datetime(value), XSD_DATETIME)
        if isinstance(value, date):
            return Term(LITERAL_KIND, value.isoformat(), XSD_DATE)
        return Term(LITERAL_KIND, str(value))
    if datatype == XSD_STRING:
        # plain and xsd:string literals are the same term in RDF 1.1
        return Term(LITERAL_KIND, str(value))
    return Term(LITERAL_KIND, str(value), datatype)


def format_double(value: float) -> str:
    if math.isnan(value):
        return "NaN"
    if math.isinf(value):
        return "INF" if value > 0 else "-INF"
    return repr(float(value))


def format_decimal(value: Decimal) -> str:
    text = format(value.normalize(), "f")
    if "." not in text:
        text += ".0"
    return text


def format_datetime(value: datetime) -> str:
    if value.tzinfo is not None:
        value = value.astimezone(timezone.utc).replace(tzinfo=None)
    return value.strftime("%Y-%m-%dT%H:%M:%S")


_DATETIME_RE = re.compile(
    r"^(-?\d{4,})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(\.\d+)?(Z|[+-]\d{2}:\d{2})?$"
)
_DATE_RE = re.compile(r"^(-?\d{4,})-(\d{2})-(\d{2})(Z|[+-]\d{2}:\d{2})?$")


def _tz(text: Optional[str]):
    if not text or text == "Z":
        return timezone.utc
    sign = 1 if text[0] == "+" else -1
    hours, minutes = int(text[1:3]), int(text[4:6])
    return timezone(sign * timedelta(hours=hours, minutes=minutes))


def parse_datetime_lexical(text: str) -> datetime:
    """Parse xsd:dateTime; naive values are taken as UTC."""
    m = _DATETIME_RE.match(text.strip())
    if not m:
        raise ValueError(f"invalid xsd:dateTime {text!r}")
    year, month, day, hh, mm, ss, frac, tz = m.groups()
    micro = int((frac[1:] + "000000")[:6]) if frac else 0
    if hh == "24" and mm == "00" and ss == "00":
        base = datetime(int(year), int(month), int(day), tzinfo=_tz(tz))
        return base + timedelta(days=1)
    return datetime(int(year), int(month), int(day), int(hh), int(mm), int(ss), micro, tzinfo=_tz(tz))


def parse_date_lexical(text: str) -> datetime:
    """Parse xsd:date, promoted to midnight UTC so it is comparable with dateTime."""
    m = _DATE_RE.match(text.strip())
    if not m:
        raise ValueError(f"invalid xsd:date {text!r}")
    year, month, day, tz = m.groups()
    return datetime(int(year), int(month), int(day), tzinfo=_tz(tz))


def numeric_value(term: Term):
    """Return int, Decimal or float for a numeric literal; raise ValueError otherwise."""
    if term.kind != LITERAL_KIND or term.datatype not in NUMERIC_TYPES:
        raise ValueError("not a numeric literal")
    text = term.value.strip()
    if term.datatype in INTEGER_TYPES:
        return int(text)
    if term.datatype == XSD_DECIMAL:
        try:
            return Decimal(text)
        except InvalidOperation as exc:
            raise ValueError(text) from exc
    if text in ("INF", "+INF"):
        return math.inf
    if text == "-INF":
        return -math.inf
    return float(text)


# value kinds, also the ORDER BY rank between kinds
V_UNBOUND, V_BLANK, V_IRI, V_NUMERIC, V_TEMPORAL, V_BOOLEAN, V_STRING, V_LANG, V_OTHER = range(9)


def term_value(term: Optional[Term]):
    """Map a term to (kind, comparable value) in value space.

    Ill-typed literals (e.g. "abc"^^xsd:integer) fall into the V_OTHER kind.
    """
    if term is None:
        return (V_UNBOUND, "")
    if term.kind == BLANK_KIND:
        return (V_BLANK, term.value)
    if term.kind == IRI_KIND:
        return (V_IRI, term.value)
    dt = term.datatype
    try:
        if dt is None:
            if term.lang:
                return (V_LANG, (term.value, term.lang))
            return (V_STRING, term.value)
        if dt in NUMERIC_TYPES:
            return (V_NUMERIC, numeric_value(term))
        if dt == XSD_DATETIME:
            return (V_TEMPORAL, parse_datetime_lexical(term.value))
        if dt == XSD_DATE:
            return (V_TEMPORAL, parse_date_lexical(term.value))
        if dt == XSD_BOOLEAN:
            if term.value in ("true", "1"):
                return (V_BOOLEAN, True)
            if term.value in ("false", "0"):
                return (V_BOOLEAN, False)
            raise ValueError(term.value)
    except ValueError:
        pass
    return (V_OTHER, (dt or "", term.value))


def _text_key(text: str) -> bytes:
    return text.encode("utf-8", "surrogatepass")


def order_key(term: Optional[Term]):
    """Total order used by ORDER BY: unbound < blank < IRI < literals, value space within kind."""
    kind, value = term_value(term)
    if kind == V_NUMERIC:
        if isinstance(value, float) and math.isnan(value):
            return (kind, 1, 0.0, b"")
        return (kind, 0, value, _text_key(term.datatype or ""))
    if kind == V_TEMPORAL:
        return (kind, value.timestamp(), _text_key(term.value))
    if kind == V_LANG:
        return (kind, _text_key(value[0]), value[1])
    if kind == V_OTHER:
        return (kind, _text_key(value[0]), _text_key(value[1]))
    if kind == V_BOOLEAN:
        return (kind, value)
    return (kind, _text_key(value))


def term_sort_bytes(term: Optional[Term]) -> bytes:
    return b"" if term is None else _text_key(str(term))
