"""Reader and writer for the N3 subset used by layer files.

The subset is N-Triples plus ``@prefix``/``PREFIX`` directives, prefixed
names, the ``a`` keyword, ``;``/``,`` abbreviations and bare numeric or
boolean literals. Output is always one triple per line.
"""

from __future__ import annotations

import bisect
import re
from typing import Iterable, Mapping, Optional
from urllib.parse import urljoin

from owa.rdf.terms import (
    BLANK_KIND,
    IRI_KIND,
    RDF,
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_DOUBLE,
    XSD_INTEGER,
    Term,
    Triple,
)


class ParseError(ValueError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnserializableTerm(ValueError):
    pass


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<iri><(?:[^<>"{}|^`\\\x00-\x20]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*>)
  | (?P<string>"(?:[^"\\\n\r]|\\.)*")
  | (?P<bnode>_:[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?)
  | (?P<lang>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<dt>\^\^)
  | (?P<number>[+-]?(?:(?:\d+\.\d*|\.\d+|\d+)[eE][+-]?\d+|\d*\.\d+|\d+))
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_.\-]*)?:(?:[A-Za-z0-9_:](?:[A-Za-z0-9_.\-:%]*[A-Za-z0-9_\-:%])?)?)
  | (?P<word>[A-Za-z]+)
  | (?P<punct>[.;,])
    """,
    re.VERBOSE,
)

_ECHAR = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
_UCHAR_RE = re.compile(r"\\u([0-9A-Fa-f]{4})|\\U([0-9A-Fa-f]{8})")


def _unescape_string(body: str, line: int) -> str:
    if "\\" not in body:
        return body
    out = []
    i = 0
    n = len(body)
    while i < n:
        ch = body[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= n:
            raise ParseError(line, "dangling escape")
        nxt = body[i + 1]
        if nxt in _ECHAR:
            out.append(_ECHAR[nxt])
            i += 2
        elif nxt == "u":
            out.append(chr(int(body[i + 2:i + 6], 16)))
            i += 6
        elif nxt == "U":
            out.append(chr(int(body[i + 2:i + 10], 16)))
            i += 10
        else:
            raise ParseError(line, f"invalid escape \\{nxt}")
    return "".join(out)


def _unescape_iri(body: str) -> str:
    if "\\" not in body:
        return body
    return _UCHAR_RE.sub(lambda m: chr(int(m.group(1) or m.group(2), 16)), body)


class _Reader:
    def __init__(self, text: str, base_iri: str, prefixes: Optional[Mapping[str, str]]) -> None:
        self.text = text
        self.base = base_iri
        self.prefixes: dict[str, str] = dict(prefixes or {})
        self._newlines = [m.start() for m in re.finditer("\n", text)]
        self.tokens = self._tokenize()
        self.i = 0

    def _line_of(self, offset: int) -> int:
        return bisect.bisect_left(self._newlines, offset) + 1

    def _tokenize(self) -> list[tuple[str, str, int]]:
        toks = []
        pos = 0
        text = self.text
        n = len(text)
        match = _TOKEN_RE.match
        while pos < n:
            m = match(text, pos)
            if m is None:
                raise ParseError(self._line_of(pos), f"unexpected character {text[pos]!r}")
            kind = m.lastgroup
            if kind != "ws":
                toks.append((kind, m.group(), pos))
            pos = m.end()
        return toks

    def error(self, reason: str, tok=None) -> ParseError:
        if tok is None:
            tok = self.tokens[self.i] if self.i < len(self.tokens) else None
        offset = tok[2] if tok else len(self.text)
        return ParseError(self._line_of(offset), reason)

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input")
        self.i += 1
        return tok

    def expect_punct(self, value: str) -> None:
        tok = self.next()
        if tok[0] != "punct" or tok[1] != value:
            raise self.error(f"expected '{value}', found {tok[1]!r}", tok)

    def iri(self, tok) -> Term:
        kind, text, _ = tok
        if kind == "iri":
            value = _unescape_iri(text[1:-1])
            if self.base and not re.match(r"^[A-Za-z][A-Za-z0-9+.\-]*:", value):
                value = urljoin(self.base, value)
            return Term(IRI_KIND, value)
        if kind == "pname":
            prefix, _, local = text.partition(":")
            ns = self.prefixes.get(prefix)
            if ns is None:
                raise self.error(f"undefined prefix '{prefix}:'", tok)
            return Term(IRI_KIND, ns + local)
        raise self.error(f"expected IRI, found {text!r}", tok)

    def subject(self) -> Term:
        tok = self.next()
        if tok[0] == "bnode":
            return Term(BLANK_KIND, tok[1][2:])
        return self.iri(tok)

    def predicate(self) -> Term:
        tok = self.next()
        if tok[0] == "word" and tok[1] == "a":
            return Term(IRI_KIND, RDF + "type")
        return self.iri(tok)

    def object(self) -> Term:
        tok = self.next()
        kind, text, _ = tok
        if kind == "bnode":
            return Term(BLANK_KIND, text[2:])
        if kind == "string":
            value = _unescape_string(text[1:-1], self._line_of(tok[2]))
            nxt = self.peek()
            if nxt is not None and nxt[0] == "lang":
                self.i += 1
                return Term("literal", value, None, nxt[1][1:].lower())
            if nxt is not None and nxt[0] == "dt":
                self.i += 1
                dt = self.iri(self.next())
                return Term("literal", value, dt.value)
            return Term("literal", value)
        if kind == "number":
            if re.fullmatch(r"[+-]?\d+", text):
                return Term("literal", text, XSD_INTEGER)
            if "e" in text or "E" in text:
                return Term("literal", text, XSD_DOUBLE)
            return Term("literal", text, XSD_DECIMAL)
        if kind == "word" and text in ("true", "false"):
            return Term("literal", text, XSD_BOOLEAN)
        return self.iri(tok)

    def directive(self, tok) -> None:
        kind, text, _ = tok
        sparql_style = kind == "word"
        name = self.next()
        if name[0] != "pname" or not name[1].endswith(":"):
            raise self.error("expected prefix name", name)
        iri_tok = self.next()
        if iri_tok[0] != "iri":
            raise self.error("expected namespace IRI", iri_tok)
        self.prefixes[name[1][:-1]] = _unescape_iri(iri_tok[1][1:-1])
        if not sparql_style:
            self.expect_punct(".")

    def parse(self) -> list[Triple]:
        out: list[Triple] = []
        while self.peek() is not None:
            tok = self.peek()
            if tok[0] == "lang" and tok[1] in ("@prefix", "@base"):
                self.i += 1
                if tok[1] == "@base":
                    iri_tok = self.next()
                    self.base = _unescape_iri(iri_tok[1][1:-1])
                    self.expect_punct(".")
                else:
                    self.directive(tok)
                continue
            if tok[0] == "word" and tok[1].upper() == "PREFIX":
                self.i += 1
                self.directive(tok)
                continue
            subj = self.subject()
            while True:
                pred = self.predicate()
                while True:
                    out.append(Triple(subj, pred, self.object()))
                    nxt = self.next()
                    if nxt[0] != "punct":
                        raise self.error(f"expected '.', ';' or ',', found {nxt[1]!r}", nxt)
                    if nxt[1] != ",":
                        break
                if nxt[1] == ".":
                    break
                # ';' possibly followed by '.' (trailing semicolon)
                after = self.peek()
                if after is not None and after[0] == "punct" and after[1] == ".":
                    self.i += 1
                    break
        return out


def parse(text: str, base_iri: str = "", prefixes: Optional[Mapping[str, str]] = None) -> list[Triple]:
    """Parse N3-subset text into triples, expanding prefixes and decoding escapes."""
    return _Reader(text, base_iri, prefixes).parse()


# -- writing --

_LOCAL_RE = re.compile(r"^[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?$")
_BNODE_RE = re.compile(r"^[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?$")
_LANG_RE = re.compile(r"^[A-Za-z]+(?:-[A-Za-z0-9]+)*$")
_BAD_IRI_RE = re.compile(r'[\x00-\x20<>"{}|^`\\]')
_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t", "\b": "\\b", "\f": "\\f"}
_BAD_LITERAL_RE = re.compile(r"[\x00-\x07\x0b\x0e-\x1f\x7f]")
_NEEDS_ESCAPE_RE = re.compile(r'[\\"\n\r\t\b\f]')


class PrefixCompactor:
    def __init__(self, prefixes: Mapping[str, str]) -> None:
        # longest namespace first, ties by prefix name
        self.entries = sorted(prefixes.items(), key=lambda kv: (-len(kv[1]), kv[0]))
        self._cache: dict[str, str] = {}

    def iri(self, value: str) -> str:
        hit = self._cache.get(value)
        if hit is not None:
            return hit
        if _BAD_IRI_RE.search(value):
            raise UnserializableTerm(f"IRI contains characters outside the IRI grammar: {value!r}")
        out = f"<{value}>"
        for prefix, ns in self.entries:
            if value.startswith(ns):
                local = value[len(ns):]
                if local == "" or _LOCAL_RE.match(local):
                    out = f"{prefix}:{local}"
                    break
        self._cache[value] = out
        return out


def escape_literal(value: str) -> str:
    if _BAD_LITERAL_RE.search(value):
        raise UnserializableTerm(f"literal contains control characters: {value!r}")
    return _NEEDS_ESCAPE_RE.sub(lambda m: _ESCAPES[m.group()], value)


def render_term(term: Term, compactor: PrefixCompactor) -> str:
    if term.kind == IRI_KIND:
        return compactor.iri(term.value)
    if term.kind == BLANK_KIND:
        if not _BNODE_RE.match(term.value):
            raise UnserializableTerm(f"invalid blank node label {term.value!r}")
        return f"_:{term.value}"
    body = f'"{escape_literal(term.value)}"'
    if term.lang:
        if not _LANG_RE.match(term.lang):
            raise UnserializableTerm(f"invalid language tag {term.lang!r}")
        return f"{body}@{term.lang}"
    if term.datatype:
        return f"{body}^^{compactor.iri(term.datatype)}"
    return body


def serialize(triples: Iterable[Triple], prefixes: Optional[Mapping[str, str]] = None) -> str:
    """Render triples as sorted, prefixed, one-per-line N3. Byte-deterministic."""
    prefixes = dict(prefixes or {})
    compactor = PrefixCompactor(prefixes)
    cache: dict[Term, str] = {}

    def render(term: Term) -> str:
        text = cache.get(term)
        if text is None:
            text = render_term(term, compactor)
            cache[term] = text
        return text

    rows = {(render(s), render(p), render(o)) for s, p, o in triples}
    ordered = sorted(rows, key=lambda r: (r[0].encode("utf-8"), r[1].encode("utf-8"), r[2].encode("utf-8")))
    lines = [f"@prefix {name}: <{prefixes[name]}> ." for name in sorted(prefixes)]
    lines.extend(f"{s} {p} {o} ." for s, p, o in ordered)
    return "\n".join(lines) + "\n" if lines else ""


def serialize_ntriples(triples: Iterable[Triple]) -> str:
    return serialize(triples, {})
