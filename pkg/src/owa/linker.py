"""Gazetteer-based entity extraction and linking.

Candidates are found by a greedy longest-match scan over token n-grams and
scored as ``ln(prior) + ln(1 + overlap)``, where ``overlap`` counts the
candidate's context keywords found within 50 tokens of the mention.
"""

from __future__ import annotations

import logging
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from owa.rdf.terms import STANDARD_PREFIXES

log = logging.getLogger(__name__)

WEB_THRESHOLD = -4.0
NEWS_THRESHOLD = math.log(0.2)
DEFAULT_TIMEOUT = 10.0
CONTEXT_WINDOW = 50

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)
_IRI_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:[^\s<>\"{}|^`\\]+$")


class UnknownCandidate(KeyError):
    pass


def tokenize(text: str) -> list[tuple[str, int, int]]:
    """(lowercased token, start, end) triples; punctuation and whitespace separate tokens."""
    return [(m.group().lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def normalize_surface(text: str) -> str:
    return " ".join(tok for tok, _, _ in tokenize(text))


@dataclass(frozen=True)
class Candidate:
    uri: str
    prior: float


@dataclass
class Gazetteer:
    entries: dict[str, list[Candidate]] = field(default_factory=dict)
    keywords: dict[str, frozenset[str]] = field(default_factory=dict)
    max_gram: int = 0
    skipped_rows: int = 0

    def lookup(self, surface: str) -> list[Candidate]:
        return self.entries.get(normalize_surface(surface), [])

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class EntityMention:
    surface: str
    position: int
    confidence: float
    uri: str

    @property
    def end(self) -> int:
        return self.position + len(self.surface)


@dataclass
class LinkResult:
    mentions: list[EntityMention]
    truncated: bool = False

    def __iter__(self):
        return iter(self.mentions)

    def __len__(self) -> int:
        return len(self.mentions)


def _expand_uri(text: str) -> Optional[str]:
    prefix, sep, local = text.partition(":")
    if sep and prefix in STANDARD_PREFIXES and not local.startswith("//"):
        text = STANDARD_PREFIXES[prefix] + local
    return text if _IRI_RE.match(text) else None


def gazetteer_from_rows(rows: Iterable[tuple[str, str, float, Sequence[str]]]) -> Gazetteer:
    """Build a gazetteer from (surface, uri, prior, keywords) rows.

    Repeated (surface, uri) pairs keep the larger prior. Priors of one surface
    that sum above 1 are rescaled to sum to 1.
    """
    merged: dict[str, dict[str, float]] = {}
    keywords: dict[str, set[str]] = {}
    for surface, uri, prior, kws in rows:
        key = normalize_surface(surface)
        slot = merged.setdefault(key, {})
        slot[uri] = max(prior, slot.get(uri, 0.0))
        bucket = keywords.setdefault(uri, set())
        bucket.update(k for k in (normalize_surface(k) for k in kws) if k)
    entries: dict[str, list[Candidate]] = {}
    for key, by_uri in merged.items():
        total = sum(by_uri.values())
        scale = 1.0 / total if total > 1.0 else 1.0
        entries[key] = sorted((Candidate(u, p * scale) for u, p in by_uri.items()), key=lambda c: c.uri)
    max_gram = max((len(k.split()) for k in entries), default=0)
    return Gazetteer(entries, {u: frozenset(k) for u, k in keywords.items()}, max_gram)


def build_gazetteer(kb_surface_file) -> Gazetteer:
    """Read ``surface<TAB>uri<TAB>prior<TAB>kw1,kw2`` rows (UTF-8)."""
    rows = []
    skipped = 0
    text = Path(kb_surface_file).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        try:
            if len(parts) not in (3, 4):
                raise ValueError(f"expected 3 or 4 tab-separated fields, found {len(parts)}")
            surface, uri_text, prior_text = parts[:3]
            if not normalize_surface(surface):
                raise ValueError("empty surface form")
            uri = _expand_uri(uri_text.strip())
            if uri is None:
                raise ValueError(f"invalid IRI {uri_text!r}")
            prior = float(prior_text)
            if not 0.0 < prior <= 1.0:
                raise ValueError(f"prior {prior} outside (0, 1]")
            kws = [k for k in parts[3].split(",") if k.strip()] if len(parts) == 4 else []
        except ValueError as exc:
            skipped += 1
            log.warning("%s:%d: skipped gazetteer row: %s", kb_surface_file, lineno, exc)
            continue
        rows.append((surface, uri, prior, kws))
    gaz = gazetteer_from_rows(rows)
    gaz.skipped_rows = skipped
    return gaz


def keyword_overlap(keywords: Iterable[str], context_tokens: Sequence[str]) -> int:
    """Number of distinct keywords (single- or multi-token) present in the context."""
    present = set(context_tokens)
    joined = None
    count = 0
    for kw in keywords:
        if " " not in kw:
            if kw in present:
                count += 1
            continue
        if joined is None:
            joined = " " + " ".join(context_tokens) + " "
        if f" {kw} " in joined:
            count += 1
    return count


def score(gazetteer: Gazetteer, surface: str, uri: str, context) -> float:
    """ln(prior) + ln(1 + overlap) for a known (surface, uri) pair.

    ``context`` is either text or an already tokenized sequence of lowercase tokens.
    """
    for cand in gazetteer.lookup(surface):
        if cand.uri == uri:
            break
    else:
        raise UnknownCandidate((surface, uri))
    tokens = [t for t, _, _ in tokenize(context)] if isinstance(context, str) else list(context)
    overlap = keyword_overlap(gazetteer.keywords.get(uri, ()), tokens)
    return math.log(cand.prior) + math.log1p(overlap)


def link(text: str, gazetteer: Gazetteer, threshold: float = WEB_THRESHOLD, timeout: float = DEFAULT_TIMEOUT,
         clock: Callable[[], float] = time.monotonic) -> LinkResult:
    """Detect and disambiguate entity mentions in ``text``.

    Segmentation does not depend on the threshold: the longest gazetteer match
    at each position always consumes its tokens and is then kept or dropped by
    score, which makes the output monotone in the threshold.
    """
    if not math.isfinite(threshold):
        raise ValueError("threshold must be finite")
    if timeout <= 0:
        raise ValueError("timeout must be positive")
    deadline = clock() + timeout
    tokens = tokenize(text)
    words = [t for t, _, _ in tokens]
    n = len(tokens)
    entries = gazetteer.entries
    max_gram = gazetteer.max_gram
    mentions: list[EntityMention] = []
    truncated = False
    i = 0
    while i < n:
        if clock() > deadline:
            truncated = True
            break
        match_len = 0
        cands: list[Candidate] = []
        for size in range(min(max_gram, n - i), 0, -1):
            hit = entries.get(" ".join(words[i:i + size]))
            if hit:
                match_len, cands = size, hit
                break
        if not match_len:
            i += 1
            continue
        lo = max(0, i - CONTEXT_WINDOW)
        hi = min(n, i + match_len + CONTEXT_WINDOW)
        context = words[lo:i] + words[i + match_len:hi]
        best_uri, best_score = None, -math.inf
        # candidates are sorted by uri, so strict > resolves ties to the smallest uri
        for cand in cands:
            s = math.log(cand.prior) + math.log1p(keyword_overlap(gazetteer.keywords.get(cand.uri, ()), context))
            if s > best_score:
                best_uri, best_score = cand.uri, s
        if best_score >= threshold:
            start = tokens[i][1]
            end = tokens[i + match_len - 1][2]
            mentions.append(EntityMention(text[start:end], start, best_score, best_uri))
        i += match_len
    return LinkResult(mentions, truncated)
