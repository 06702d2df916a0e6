"""Layer construction: read, extract, link, emit, enrich and serialize.

A build is driven by a flat ``key = value`` config file. Records are
processed by a thread pool one unit at a time (a URL group, an article or a
tweet); results are merged in input order and the serializer sorts globally,
so the output bytes do not depend on the thread count.
"""

from __future__ import annotations

import gzip
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from owa.archive_io import (
    ArchiveError, CdxIndex, filter_metadata, load_cdx_index, read_warc_record, resolve_warc_path,
)
from owa.content import extract_content, parse_news_corpus, parse_tweet_stream
from owa.layer import (
    COMPACT, FULL, Manifest, detect_duplicates, document_node, emit_archived_doc, emit_article, emit_sameas,
    emit_tweet, emit_version, enrich_entities, group_versions, matched_uris, select_versions, serialize_layer,
    version_node,
)
from owa.linker import DEFAULT_TIMEOUT, NEWS_THRESHOLD, WEB_THRESHOLD, Gazetteer, build_gazetteer, link
from owa.rdf import n3
from owa.rdf.store import GraphStore
from owa.rdf.terms import Triple

log = logging.getLogger(__name__)

KINDS = ("warc", "news", "tweets")
DEFAULT_SIZE_CAP = 100 * 1024

_PATH_KEYS = {"cdx", "warc_dir", "news", "tweets", "gazetteer", "kb", "output", "manifest"}
_KNOWN_KEYS = _PATH_KEYS | {
    "kind", "threshold", "timeout", "size_cap", "version_url_template", "annotation_mode", "threads", "gzip",
}


class ConfigError(ValueError):
    def __init__(self, key: str, reason: str) -> None:
        self.key = key
        super().__init__(f"config field '{key}': {reason}")


@dataclass
class BuildConfig:
    kind: str
    output: Path
    gazetteer: Path
    cdx: list[Path] = field(default_factory=list)
    warc_dir: list[Path] = field(default_factory=list)
    news: Optional[Path] = None
    tweets: Optional[Path] = None
    kb: Optional[Path] = None
    manifest: Optional[Path] = None
    threshold: float = WEB_THRESHOLD
    timeout: float = DEFAULT_TIMEOUT
    size_cap: int = DEFAULT_SIZE_CAP
    version_url_template: Optional[str] = None
    annotation_mode: str = COMPACT
    threads: int = 1
    gzip: bool = False

    @property
    def manifest_path(self) -> Path:
        return self.manifest or self.output.with_name(self.output.name + ".manifest")


def _parse_bool(key: str, value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {value!r}")


def parse_config_text(text: str, base_dir: Path = Path("."), overrides: Optional[dict] = None) -> BuildConfig:
    """Parse ``key = value`` lines; relative paths resolve against ``base_dir``."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}", "expected key = value")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(key, "unknown key")
        raw[key] = value.strip()
    for key, value in (overrides or {}).items():
        raw[key] = str(value)

    def path(key: str) -> Optional[Path]:
        if not raw.get(key):
            return None
        p = Path(raw[key]).expanduser()
        return p if p.is_absolute() else base_dir / p

    def paths(key: str) -> list[Path]:
        out = []
        for part in raw.get(key, "").split(","):
            part = part.strip()
            if part:
                p = Path(part).expanduser()
                out.append(p if p.is_absolute() else base_dir / p)
        return out

    kind = raw.get("kind", "")
    if kind not in KINDS:
        raise ConfigError("kind", f"must be one of {', '.join(KINDS)}")
    for key in ("output", "gazetteer"):
        if not raw.get(key):
            raise ConfigError(key, "missing")
    cfg = BuildConfig(kind=kind, output=path("output"), gazetteer=path("gazetteer"))
    cfg.threshold = NEWS_THRESHOLD if kind == "news" else WEB_THRESHOLD
    try:
        if "threshold" in raw:
            cfg.threshold = float(raw["threshold"])
    except ValueError:
        raise ConfigError("threshold", "not a number") from None
    try:
        if "timeout" in raw:
            cfg.timeout = float(raw["timeout"])
    except ValueError:
        raise ConfigError("timeout", "not a number") from None
    if cfg.timeout <= 0:
        raise ConfigError("timeout", "must be positive")
    for key in ("size_cap", "threads"):
        if key in raw:
            try:
                setattr(cfg, key, int(raw[key]))
            except ValueError:
                raise ConfigError(key, "not an integer") from None
    if cfg.threads < 1:
        raise ConfigError("threads", "must be at least 1")
    if cfg.size_cap < 1:
        raise ConfigError("size_cap", "must be positive")
    cfg.version_url_template = raw.get("version_url_template") or None
    if cfg.version_url_template:
        try:
            cfg.version_url_template.format(timestamp="0", original_url="u", surt_url="s")
        except (KeyError, IndexError, ValueError) as exc:
            raise ConfigError("version_url_template", f"bad placeholder {exc}") from None
    mode = raw.get("annotation_mode", COMPACT)
    if mode not in (COMPACT, FULL):
        raise ConfigError("annotation_mode", f"must be {COMPACT} or {FULL}")
    cfg.annotation_mode = mode
    if "gzip" in raw:
        cfg.gzip = _parse_bool("gzip", raw["gzip"])
    cfg.cdx = paths("cdx")
    cfg.warc_dir = paths("warc_dir")
    cfg.news = path("news")
    cfg.tweets = path("tweets")
    cfg.kb = path("kb")
    cfg.manifest = path("manifest")
    _check_inputs(cfg)
    return cfg


def _check_inputs(cfg: BuildConfig) -> None:
    if not cfg.gazetteer.is_file():
        raise ConfigError("gazetteer", f"file not found: {cfg.gazetteer}")
    if cfg.kb is not None and not cfg.kb.is_file():
        raise ConfigError("kb", f"file not found: {cfg.kb}")
    if cfg.kind == "warc":
        if not cfg.cdx:
            raise ConfigError("cdx", "missing")
        for p in cfg.cdx:
            if not p.is_file():
                raise ConfigError("cdx", f"file not found: {p}")
        if not cfg.warc_dir:
            raise ConfigError("warc_dir", "missing")
        for p in cfg.warc_dir:
            if not p.is_dir():
                raise ConfigError("warc_dir", f"directory not found: {p}")
    elif cfg.kind == "news":
        if cfg.news is None or not cfg.news.is_file():
            raise ConfigError("news", "missing or not a file")
    elif cfg.tweets is None or not cfg.tweets.is_file():
        raise ConfigError("tweets", "missing or not a file")


def load_config(path, overrides: Optional[dict] = None) -> BuildConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror or exc}") from None
    return parse_config_text(text, path.parent, overrides)


# -- units of work --


@dataclass
class UnitResult:
    triples: list[Triple]
    documents: int = 0
    versions: int = 0
    same_as: int = 0
    mentions: int = 0
    truncated: int = 0
    unreadable: int = 0


def _page_encoding(record) -> Optional[str]:
    return record.http_header("Content-Type")


def process_group(group: Sequence, cfg: BuildConfig, gazetteer: Gazetteer) -> UnitResult:
    """All triples for one URL: its archived document plus each version."""
    assignment = detect_duplicates(group)
    nodes = [version_node(r, cfg.version_url_template) for r in group]
    doc = document_node(group)
    res = UnitResult(emit_archived_doc(group, assignment, doc, nodes), documents=1, versions=len(group))
    for rec, node, canon in zip(group, nodes, assignment):
        if canon is not None:
            res.triples += emit_sameas(node, rec, nodes[canon])
            res.same_as += 1
            continue
        content = None
        mentions: list = []
        try:
            warc = read_warc_record(resolve_warc_path(rec, cfg.warc_dir), rec.offset)
            content = extract_content(warc.payload, rec.original_url, _page_encoding(warc))
        except ArchiveError as exc:
            log.warning("payload unavailable for %s %s: %s", rec.original_url, rec.timestamp, exc)
            res.unreadable += 1
        if content is not None and content.main_text:
            linked = link(content.main_text, gazetteer, cfg.threshold, cfg.timeout)
            mentions = linked.mentions
            res.truncated += int(linked.truncated)
        res.triples += emit_version(node, rec, content, mentions, cfg.annotation_mode)
        res.mentions += len(mentions)
    return res


def process_article(article, cfg: BuildConfig, gazetteer: Gazetteer) -> UnitResult:
    linked = link(article.body, gazetteer, cfg.threshold, cfg.timeout)
    return UnitResult(emit_article(article, linked.mentions, cfg.annotation_mode), documents=1,
                      mentions=len(linked.mentions), truncated=int(linked.truncated))


def process_tweet(tweet, cfg: BuildConfig, gazetteer: Gazetteer) -> UnitResult:
    linked = link(tweet.text, gazetteer, cfg.threshold, cfg.timeout)
    return UnitResult(emit_tweet(tweet, linked.mentions, cfg.annotation_mode), documents=1,
                      mentions=len(linked.mentions), truncated=int(linked.truncated))


def _run_units(units: Sequence, fn: Callable, threads: int) -> list[UnitResult]:
    if threads <= 1 or len(units) <= 1:
        return [fn(u) for u in units]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map() yields in submission order, which keeps the merge deterministic
        return list(pool.map(fn, units))


def version_candidates(index: CdxIndex, size_cap: int = DEFAULT_SIZE_CAP) -> CdxIndex:
    """Metadata-only selection of captures that become versions (no WARC access)."""
    keep = set(map(id, select_versions(index.records, size_cap)))
    return filter_metadata(index, lambda r: id(r) in keep)


@dataclass
class BuildResult:
    text: str
    triples: list[Triple]
    manifest: Manifest


def build_triples(cfg: BuildConfig, gazetteer: Optional[Gazetteer] = None) -> BuildResult:
    """Run the pipeline in memory and return the serialized layer and manifest."""
    gaz = gazetteer if gazetteer is not None else build_gazetteer(cfg.gazetteer)
    manifest = Manifest(kind=cfg.kind)
    if cfg.kind == "warc":
        index = load_cdx_index(cfg.cdx)
        manifest.skipped_input = index.skipped_count
        selected = version_candidates(index, cfg.size_cap)
        manifest.filtered_by_metadata = len(index.records) - len(selected.records)
        groups = list(group_versions(selected.records).values())
        results = _run_units(groups, lambda g: process_group(g, cfg, gaz), cfg.threads)
    elif cfg.kind == "news":
        articles = parse_news_corpus(cfg.news)
        manifest.skipped_input = articles.skipped
        results = _run_units(list(articles), lambda a: process_article(a, cfg, gaz), cfg.threads)
    else:
        tweets = parse_tweet_stream(cfg.tweets)
        manifest.skipped_input = tweets.skipped
        results = _run_units(list(tweets), lambda t: process_tweet(t, cfg, gaz), cfg.threads)
    triples: list[Triple] = []
    for r in results:
        triples += r.triples
        manifest.documents += r.documents
        manifest.versions += r.versions
        manifest.same_as += r.same_as
        manifest.mentions += r.mentions
        manifest.truncated += r.truncated
        manifest.skipped_input += r.unreadable
    if cfg.kb is not None:
        kb = load_store([cfg.kb], name="kb")
        extra = enrich_entities(matched_uris(triples), kb)
        manifest.enriched = len(extra)
        triples += extra
    text = serialize_layer(triples)
    manifest.triples = sum(1 for line in text.splitlines() if line and not line.startswith("@prefix"))
    return BuildResult(text, triples, manifest)


def write_text(path: Path, text: str, compress: bool = False) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode("utf-8")
    if compress:
        buf = io.BytesIO()
        # fixed mtime and no embedded name keep the bytes reproducible
        with gzip.GzipFile(filename="", mode="wb", fileobj=buf, mtime=0) as gz:
            gz.write(data)
        data = buf.getvalue()
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def build_layer(cfg: BuildConfig) -> Manifest:
    """Build the layer file and its manifest as configured."""
    result = build_triples(cfg)
    write_text(cfg.output, result.text, cfg.gzip)
    write_text(cfg.manifest_path, result.manifest.to_text())
    log.info("wrote %s (%d triples)", cfg.output, result.manifest.triples)
    return result.manifest


# -- loading layers and knowledge bases --


def read_rdf_text(path) -> str:
    path = Path(path)
    data = path.read_bytes()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data.decode("utf-8")


def load_triples(paths: Iterable) -> list[Triple]:
    out: list[Triple] = []
    for p in paths:
        out += n3.parse(read_rdf_text(p))
    return out


def load_store(paths: Iterable, name: str = "", seal: bool = True) -> GraphStore:
    """Parse N3 / N-Triples files (optionally gzipped) into one store."""
    store = GraphStore(name=name)
    for p in paths:
        store.insert_many(n3.parse(read_rdf_text(p)))
    return store.seal() if seal else store
