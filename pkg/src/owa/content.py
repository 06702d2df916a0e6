"""Title, link and main-text extraction from archived HTML; news and tweet corpus readers."""

from __future__ import annotations

import codecs
import json
import logging
import re
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from html.parser import HTMLParser
from pathlib import Path
from typing import Optional, Union
from urllib.parse import quote, urldefrag, urljoin, urlsplit

log = logging.getLogger(__name__)

MIN_BLOCK_WORDS = 10
MAX_LINK_RATIO = 0.33

_BLOCK_TAGS = frozenset(
    "address article aside blockquote body br dd div dl dt fieldset figcaption figure footer "
    "form h1 h2 h3 h4 h5 h6 header hr li main ol p pre section table tbody td th thead tr ul".split()
)
_SKIP_TAGS = frozenset({"script", "style", "nav", "noscript", "template", "head", "svg", "iframe"})
_VOID_TAGS = frozenset("area base br col embed hr img input link meta param source track wbr".split())
_WS_RE = re.compile(r"\s+")
_META_CHARSET_RE = re.compile(rb"""<meta[^>]+charset\s*=\s*["']?([A-Za-z0-9_\-:.]+)""", re.I)

HtmlInput = Union[bytes, str]


@dataclass
class PageContent:
    title: Optional[str] = None
    links: list[str] = field(default_factory=list)
    main_text: str = ""


def _collapse(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


def _charset_from_content_type(value: Optional[str]) -> Optional[str]:
    if not value:
        return None
    m = re.search(r"charset\s*=\s*[\"']?([A-Za-z0-9_\-:.]+)", value, re.I)
    return m.group(1) if m else None


def decode_html(html: HtmlInput, encoding: Optional[str] = None) -> str:
    """Decode with the hinted charset, else a <meta> charset, else UTF-8 (lossy)."""
    if isinstance(html, str):
        return html
    candidates = []
    if encoding:
        candidates.append(_charset_from_content_type(encoding) or encoding)
    m = _META_CHARSET_RE.search(html[:4096])
    if m:
        candidates.append(m.group(1).decode("ascii", "ignore"))
    for name in candidates:
        try:
            codecs.lookup(name)
        except LookupError:
            continue
        return html.decode(name, "replace")
    return html.decode("utf-8", "replace")


class _Block:
    __slots__ = ("parts", "link_words")

    def __init__(self) -> None:
        self.parts: list[str] = []
        self.link_words = 0

    def text(self) -> str:
        return _collapse("".join(self.parts))


class _PageParser(HTMLParser):
    def __init__(self, base_url: str) -> None:
        super().__init__(convert_charrefs=True)
        self.base_url = base_url
        self.title: Optional[str] = None
        self._title_parts: Optional[list[str]] = None
        self._title_done = False
        self.links: list[str] = []
        self._seen_links: set[str] = set()
        self.blocks: list[_Block] = []
        self._current = _Block()
        self._skip_stack: list[str] = []
        self._anchor_depth = 0

    # block segmentation
    def _flush(self) -> None:
        if self._current.text():
            self.blocks.append(self._current)
        self._current = _Block()

    def handle_starttag(self, tag, attrs):
        if tag == "title" and not self._title_done and self._title_parts is None:
            self._title_parts = []
            return
        if tag == "a":
            href = dict(attrs).get("href")
            if href is not None:
                self._add_link(href)
        if tag == "body" and self._skip_stack == ["head"]:
            # <head> left open by sloppy markup
            self._skip_stack.clear()
        if tag in _SKIP_TAGS or self._skip_stack:
            if tag in _SKIP_TAGS and tag not in _VOID_TAGS:
                self._skip_stack.append(tag)
            return
        if tag == "a":
            self._anchor_depth += 1
        if tag in _BLOCK_TAGS:
            self._flush()

    def handle_startendtag(self, tag, attrs):
        if tag == "a":
            href = dict(attrs).get("href")
            if href is not None:
                self._add_link(href)
            return
        if tag in _BLOCK_TAGS:
            self._flush()

    def handle_endtag(self, tag):
        if tag == "title" and self._title_parts is not None:
            self.title = _collapse("".join(self._title_parts)) or None
            self._title_parts = None
            self._title_done = True
            return
        if self._skip_stack:
            if tag in self._skip_stack:
                while self._skip_stack and self._skip_stack.pop() != tag:
                    pass
            return
        if tag == "a" and self._anchor_depth:
            self._anchor_depth -= 1
        if tag in _BLOCK_TAGS:
            self._flush()

    def handle_data(self, data):
        if self._title_parts is not None:
            self._title_parts.append(data)
            return
        if self._skip_stack:
            return
        self._current.parts.append(data)
        if self._anchor_depth:
            self._current.link_words += len(data.split())

    def _add_link(self, href: str) -> None:
        href = href.strip()
        if not href or href.startswith("#"):
            return
        try:
            absolute = urljoin(self.base_url, href) if self.base_url else href
            absolute, _ = urldefrag(absolute)
            parts = urlsplit(absolute)
        except ValueError:
            return
        if parts.scheme not in ("http", "https") or not parts.netloc:
            return
        absolute = quote(absolute, safe=":/?&=%#@!$'()*+,;~[]-._")
        if absolute not in self._seen_links:
            self._seen_links.add(absolute)
            self.links.append(absolute)

    def finish(self) -> None:
        self.close()
        if self._title_parts is not None:
            self.title = _collapse("".join(self._title_parts)) or None
            self._title_parts = None
        self._flush()


def _parse(html: HtmlInput, base_url: str = "", encoding: Optional[str] = None) -> _PageParser:
    parser = _PageParser(base_url)
    parser.feed(decode_html(html, encoding))
    parser.finish()
    return parser


def extract_title(html: HtmlInput, encoding: Optional[str] = None) -> Optional[str]:
    return _parse(html, "", encoding).title


def extract_links(html: HtmlInput, base_url: str, encoding: Optional[str] = None) -> list[str]:
    return _parse(html, base_url, encoding).links


def select_main_blocks(blocks: list[tuple[str, int]], min_words: int = MIN_BLOCK_WORDS,
                       max_link_ratio: float = MAX_LINK_RATIO) -> list[str]:
    """Keep text-dense blocks. ``blocks`` holds (text, words inside links) pairs.

    A lone block is always kept, so a page without block markup yields all of
    its visible text.
    """
    if len(blocks) == 1:
        return [blocks[0][0]]
    kept = []
    for text, link_words in blocks:
        words = len(text.split())
        if words >= min_words and link_words / words < max_link_ratio:
            kept.append(text)
    return kept


def _main_text(parser: _PageParser, min_words: int, max_link_ratio: float) -> str:
    blocks = [(b.text(), b.link_words) for b in parser.blocks]
    return "\n".join(select_main_blocks(blocks, min_words, max_link_ratio))


def extract_main_text(html: HtmlInput, encoding: Optional[str] = None, min_words: int = MIN_BLOCK_WORDS,
                      max_link_ratio: float = MAX_LINK_RATIO) -> str:
    return _main_text(_parse(html, "", encoding), min_words, max_link_ratio)


def visible_text(html: HtmlInput, encoding: Optional[str] = None) -> str:
    """All text outside skipped elements, whitespace-collapsed."""
    parser = _parse(html, "", encoding)
    return " ".join(b.text() for b in parser.blocks)


def extract_content(html: HtmlInput, base_url: str = "", encoding: Optional[str] = None,
                    min_words: int = MIN_BLOCK_WORDS, max_link_ratio: float = MAX_LINK_RATIO) -> PageContent:
    """Title, links and main text from a single parse."""
    parser = _parse(html, base_url, encoding)
    return PageContent(parser.title, parser.links, _main_text(parser, min_words, max_link_ratio))


# -- corpora --


@dataclass(frozen=True)
class NewsArticle:
    id: str
    url: str
    title: str
    publication_date: date
    body: str


@dataclass(frozen=True)
class TweetRecord:
    id: str
    text: str
    created_at: datetime
    favorite_count: int
    retweet_count: int
    screen_name: str


class ParsedRecords(list):
    """A list of parsed records that also remembers how many lines were skipped."""

    def __init__(self, items=(), skipped: int = 0) -> None:
        super().__init__(items)
        self.skipped = skipped


class RecordError(ValueError):
    pass


def _require_str(obj: dict, key: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or (key != "body" and not value.strip()):
        raise RecordError(f"field {key!r} missing or not text")
    return value


def _require_count(obj: dict, key: str) -> int:
    value = obj.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise RecordError(f"field {key!r} must be an integer")
    if value < 0:
        raise RecordError(f"field {key!r} must be non-negative")
    return value


def _parse_iso_datetime(text: str) -> datetime:
    value = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if value.tzinfo is not None:
        value = value.astimezone(timezone.utc).replace(tzinfo=None)
    return value


def _read_lines(path) -> list[str]:
    return Path(path).read_text(encoding="utf-8", errors="replace").splitlines()


def parse_news_line(line: str) -> NewsArticle:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(f"not a JSON object: {exc}") from None
    if not isinstance(obj, dict):
        raise RecordError("not a JSON object")
    try:
        pub = date.fromisoformat(_require_str(obj, "date"))
    except ValueError:
        raise RecordError("date is not YYYY-MM-DD") from None
    return NewsArticle(
        id=_require_str(obj, "id"),
        url=_require_str(obj, "url"),
        title=_require_str(obj, "title"),
        publication_date=pub,
        body=_require_str(obj, "body"),
    )


def parse_tweet_line(line: str) -> TweetRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(f"not a JSON object: {exc}") from None
    if not isinstance(obj, dict):
        raise RecordError("not a JSON object")
    try:
        created = _parse_iso_datetime(_require_str(obj, "created_at"))
    except ValueError:
        raise RecordError("created_at is not ISO-8601") from None
    tweet_id = obj.get("id")
    if isinstance(tweet_id, int) and not isinstance(tweet_id, bool):
        tweet_id = str(tweet_id)
    if not isinstance(tweet_id, str) or not tweet_id:
        raise RecordError("field 'id' missing")
    return TweetRecord(
        id=tweet_id,
        text=_require_str(obj, "text"),
        created_at=created,
        favorite_count=_require_count(obj, "favorite_count"),
        retweet_count=_require_count(obj, "retweet_count"),
        screen_name=_require_str(obj, "screen_name"),
    )


def _parse_corpus(path, parse_line) -> ParsedRecords:
    out = ParsedRecords()
    seen: set[str] = set()
    for lineno, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        try:
            rec = parse_line(line)
            if rec.id in seen:
                raise RecordError(f"duplicate id {rec.id!r}")
        except RecordError as exc:
            out.skipped += 1
            log.warning("%s:%d: skipped record: %s", path, lineno, exc)
            continue
        seen.add(rec.id)
        out.append(rec)
    return out


def parse_news_corpus(path) -> ParsedRecords:
    """One JSON object per line with keys id, url, title, date, body."""
    return _parse_corpus(path, parse_news_line)


def parse_tweet_stream(path) -> ParsedRecords:
    """One JSON object per line with keys id, text, created_at, favorite_count, retweet_count, screen_name."""
    return _parse_corpus(path, parse_tweet_line)
