"""CDX index and WARC record access.

Metadata lives in CDX lines and is cheap to scan; payloads live in WARC
files and are only touched through :func:`read_warc_record`, which counts
every file it opens in :data:`WARC_IO`.
"""

from __future__ import annotations

import base64
import gzip
import hashlib
import io
import logging
import threading
import zlib
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional, Sequence
from urllib.parse import urlsplit

log = logging.getLogger(__name__)

DEFAULT_LEGEND = "N b a m s k r M S V g"

# CDX legend letter -> CdxRecord attribute
LEGEND_FIELDS = {
    "N": "surt_url",
    "b": "timestamp",
    "a": "original_url",
    "m": "mime",
    "s": "status",
    "k": "digest",
    "r": "redirect",
    "M": "meta_flags",
    "S": "compressed_size",
    "V": "offset",
    "g": "filename",
}
_INT_FIELDS = {"status", "compressed_size", "offset"}
_OPTIONAL_FIELDS = {"status", "redirect", "meta_flags"}


class ArchiveError(Exception):
    pass


class MalformedCdx(ArchiveError):
    def __init__(self, field: str, reason: str) -> None:
        super().__init__(f"malformed CDX field {field}: {reason}")
        self.field = field
        self.reason = reason


class MalformedWarc(ArchiveError):
    def __init__(self, reason: str) -> None:
        super().__init__(f"malformed WARC record: {reason}")
        self.reason = reason


class ArchiveIOError(ArchiveError):
    def __init__(self, path, reason: str = "") -> None:
        super().__init__(f"cannot read {path}: {reason}" if reason else f"cannot read {path}")
        self.path = str(path)


class IOCounter:
    """Counts WARC file opens; metadata-only passes must leave it at zero."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.opens = 0
        self.bytes_read = 0

    def record(self, nbytes: int) -> None:
        with self._lock:
            self.opens += 1
            self.bytes_read += nbytes

    def reset(self) -> None:
        with self._lock:
            self.opens = 0
            self.bytes_read = 0


WARC_IO = IOCounter()


@dataclass(frozen=True)
class CdxRecord:
    surt_url: str
    timestamp: str
    original_url: str
    mime: str
    status: Optional[int]
    digest: str
    redirect: Optional[str]
    meta_flags: Optional[str]
    compressed_size: int
    offset: int
    filename: str

    @property
    def time(self) -> datetime:
        return parse_timestamp(self.timestamp)

    @property
    def is_revisit(self) -> bool:
        return self.mime == "warc/revisit"


def parse_timestamp(ts: str) -> datetime:
    """14-digit capture timestamp to a UTC datetime; short stamps are zero-padded."""
    if not ts.isdigit() or not 4 <= len(ts) <= 14:
        raise ValueError(f"bad timestamp {ts!r}")
    ts = _pad_timestamp(ts)
    return datetime.strptime(ts, "%Y%m%d%H%M%S").replace(tzinfo=timezone.utc)


def _pad_timestamp(ts: str) -> str:
    # months and days cannot be zero, so pad those with 01
    ts = ts.ljust(14, "0")
    if ts[4:6] == "00":
        ts = ts[:4] + "01" + ts[6:]
    if ts[6:8] == "00":
        ts = ts[:6] + "01" + ts[8:]
    return ts


def format_timestamp(dt: datetime) -> str:
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc)
    return dt.strftime("%Y%m%d%H%M%S")


def _legend_codes(legend: str) -> list[str]:
    codes = legend.split()
    if codes and codes[0] == "CDX":
        codes = codes[1:]
    for code in codes:
        if code not in LEGEND_FIELDS:
            raise ValueError(f"unsupported CDX legend letter {code!r}")
    return codes


def parse_cdx_line(line: str, format_legend: str = DEFAULT_LEGEND) -> CdxRecord:
    codes = _legend_codes(format_legend)
    parts = line.rstrip("\r\n").split(" ")
    if len(parts) != len(codes):
        raise MalformedCdx("*", f"expected {len(codes)} fields, found {len(parts)}")
    values: dict[str, object] = {name: None for name in LEGEND_FIELDS.values()}
    for code, raw in zip(codes, parts):
        name = LEGEND_FIELDS[code]
        if raw == "":
            raise MalformedCdx(name, "empty field")
        if raw == "-" and name in _OPTIONAL_FIELDS:
            values[name] = None
            continue
        if name in _INT_FIELDS:
            if not raw.isdigit():
                raise MalformedCdx(name, f"not an integer: {raw!r}")
            values[name] = int(raw)
        elif name == "timestamp":
            try:
                parse_timestamp(raw)
            except ValueError as exc:
                raise MalformedCdx(name, str(exc)) from None
            values[name] = _pad_timestamp(raw)
        elif name == "surt_url":
            values[name] = raw.lower()
        else:
            values[name] = raw
    for name in ("surt_url", "timestamp", "original_url", "mime", "digest", "filename"):
        if values[name] is None:
            values[name] = "-"
    if values["compressed_size"] is None:
        values["compressed_size"] = 0
    if values["offset"] is None:
        values["offset"] = 0
    return CdxRecord(**values)


def format_cdx_line(record: CdxRecord, format_legend: str = DEFAULT_LEGEND) -> str:
    out = []
    for code in _legend_codes(format_legend):
        value = getattr(record, LEGEND_FIELDS[code])
        out.append("-" if value is None else str(value))
    return " ".join(out)


@dataclass(frozen=True)
class CdxIndex:
    """Immutable, sorted collection of capture metadata."""

    records: tuple[CdxRecord, ...] = ()
    skipped_count: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[CdxRecord]:
        return iter(self.records)


def _sort_key(r: CdxRecord):
    return (r.surt_url, r.timestamp, r.filename, r.offset)


def _open_text(path: Path) -> io.TextIOBase:
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"\x1f\x8b":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", errors="replace")
    return open(path, "r", encoding="utf-8", errors="replace")


def load_cdx_index(paths: Sequence, format_legend: str = DEFAULT_LEGEND) -> CdxIndex:
    """Merge CDX files into one sorted index, skipping (and counting) bad lines."""
    seen: set[tuple] = set()
    records: list[CdxRecord] = []
    skipped = 0
    for path in paths:
        path = Path(path)
        legend = format_legend
        try:
            fh = _open_text(path)
        except OSError as exc:
            raise ArchiveIOError(path, exc.strerror or str(exc)) from exc
        with fh:
            try:
                for lineno, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    if lineno == 1 and line.lstrip().startswith("CDX"):
                        legend = line.strip()
                        continue
                    try:
                        rec = parse_cdx_line(line, legend)
                    except MalformedCdx as exc:
                        skipped += 1
                        log.warning("%s:%d: %s", path, lineno, exc)
                        continue
                    key = (rec.surt_url, rec.timestamp, rec.offset, rec.filename)
                    if key in seen:
                        continue
                    seen.add(key)
                    records.append(rec)
            except (OSError, EOFError, zlib.error) as exc:
                raise ArchiveIOError(path, str(exc)) from exc
    records.sort(key=_sort_key)
    return CdxIndex(tuple(records), skipped)


def filter_metadata(index: CdxIndex, predicate: Callable[[CdxRecord], bool]) -> CdxIndex:
    """Order-preserving subset; touches metadata only."""
    return CdxIndex(tuple(r for r in index.records if predicate(r)), index.skipped_count)


def write_cdx(records: Iterable[CdxRecord], path, format_legend: str = DEFAULT_LEGEND) -> None:
    path = Path(path)
    lines = [" CDX " + format_legend] + [format_cdx_line(r, format_legend) for r in records]
    data = ("\n".join(lines) + "\n").encode("utf-8")
    if path.suffix == ".gz":
        path.write_bytes(gzip.compress(data, mtime=0))
    else:
        path.write_bytes(data)


# -- WARC --


@dataclass
class WarcRecord:
    warc_headers: dict[str, str]
    http_status: Optional[int] = None
    http_headers: Optional[dict[str, str]] = None
    payload: bytes = b""

    @property
    def warc_type(self) -> str:
        return self.warc_headers.get("WARC-Type", "")

    @property
    def target_uri(self) -> str:
        return self.warc_headers.get("WARC-Target-URI", "")

    def header(self, name: str, default: Optional[str] = None) -> Optional[str]:
        for key, value in self.warc_headers.items():
            if key.lower() == name.lower():
                return value
        return default

    def http_header(self, name: str, default: Optional[str] = None) -> Optional[str]:
        for key, value in (self.http_headers or {}).items():
            if key.lower() == name.lower():
                return value
        return default


def payload_digest(payload: bytes, algorithm: str = "sha1") -> str:
    """Base32 digest of a payload, as written in CDX digest fields."""
    return base64.b32encode(hashlib.new(algorithm, payload).digest()).decode("ascii")


def _parse_header_block(lines: list[bytes]) -> dict[str, str]:
    headers: dict[str, str] = {}
    last = None
    for raw in lines:
        text = raw.decode("utf-8", "replace")
        if text[:1] in (" ", "\t") and last is not None:
            headers[last] += " " + text.strip()
            continue
        name, sep, value = text.partition(":")
        if not sep:
            raise MalformedWarc(f"bad header line {text!r}")
        last = name.strip()
        headers[last] = value.strip()
    return headers


def _split_http(block: bytes) -> tuple[int, dict[str, str], bytes]:
    end = block.find(b"\r\n\r\n")
    sep = 4
    if end < 0:
        end = block.find(b"\n\n")
        sep = 2
    if end < 0:
        head, body = block, b""
    else:
        head, body = block[:end], block[end + sep:]
    lines = head.replace(b"\r\n", b"\n").split(b"\n")
    status_line = lines[0].decode("latin-1")
    parts = status_line.split(" ", 2)
    if len(parts) < 2 or not parts[0].startswith("HTTP/") or not parts[1].isdigit():
        raise MalformedWarc(f"bad HTTP status line {status_line!r}")
    return int(parts[1]), _parse_header_block([ln for ln in lines[1:] if ln]), body


def parse_warc_bytes(data: bytes) -> WarcRecord:
    """Parse one uncompressed WARC record from the start of ``data``."""
    nl = data.find(b"\n")
    if nl < 0:
        raise MalformedWarc("missing version line")
    version = data[:nl].rstrip(b"\r")
    if not version.startswith(b"WARC/"):
        raise MalformedWarc("missing version line")
    end = data.find(b"\r\n\r\n", nl + 1)
    if end < 0:
        raise MalformedWarc("unterminated header block")
    header_lines = [ln for ln in data[nl + 1:end].split(b"\r\n") if ln]
    headers = _parse_header_block(header_lines)
    if "WARC-Type" not in headers:
        raise MalformedWarc("WARC-Type header missing")
    try:
        length = int(headers.get("Content-Length", ""))
    except ValueError:
        raise MalformedWarc("Content-Length missing or invalid") from None
    start = end + 4
    block = data[start:start + length]
    if len(block) != length:
        raise MalformedWarc(f"block shorter than Content-Length ({len(block)} < {length})")
    trailer = data[start + length:start + length + 4]
    if trailer != b"\r\n\r\n":
        raise MalformedWarc("missing record trailer")
    record = WarcRecord(headers)
    ctype = headers.get("Content-Type", "")
    wtype = headers["WARC-Type"]
    if wtype in ("response", "revisit") and ctype.startswith("application/http") and block:
        status, http_headers, body = _split_http(block)
        record.http_status = status
        record.http_headers = http_headers
        record.payload = b"" if wtype == "revisit" else body
    elif wtype != "revisit":
        record.payload = block
    return record


def _read_member(fh, chunk: int = 65536) -> bytes:
    decomp = zlib.decompressobj(wbits=31)
    out = []
    while not decomp.eof:
        buf = fh.read(chunk)
        if not buf:
            raise MalformedWarc("truncated gzip member")
        try:
            out.append(decomp.decompress(buf))
        except zlib.error as exc:
            raise MalformedWarc(f"offset is not the start of a gzip member ({exc})") from None
    return b"".join(out)


def _read_plain(fh, chunk: int = 65536) -> bytes:
    # read until the header block is complete, then exactly the declared block
    buf = b""
    while b"\r\n\r\n" not in buf:
        more = fh.read(chunk)
        if not more:
            break
        buf += more
    end = buf.find(b"\r\n\r\n")
    if end < 0:
        return buf
    length = 0
    for line in buf[:end].split(b"\r\n"):
        if line.lower().startswith(b"content-length:"):
            try:
                length = int(line.split(b":", 1)[1].strip())
            except ValueError:
                length = 0
    need = end + 4 + length + 4 - len(buf)
    if need > 0:
        buf += fh.read(need)
    return buf


def read_warc_record(filename, offset: int) -> WarcRecord:
    """Decompress and parse the single record starting at ``offset``."""
    path = Path(filename)
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise ArchiveIOError(path, exc.strerror or str(exc)) from exc
    with fh:
        fh.seek(offset)
        magic = fh.read(2)
        fh.seek(offset)
        if magic == b"\x1f\x8b":
            data = _read_member(fh)
        elif path.suffix == ".gz":
            raise MalformedWarc("offset is not the start of a gzip member")
        else:
            data = _read_plain(fh)
    WARC_IO.record(len(data))
    return parse_warc_bytes(data)


def resolve_warc_path(record: CdxRecord, warc_dirs: Sequence) -> Path:
    for d in warc_dirs:
        candidate = Path(d) / record.filename
        if candidate.exists():
            return candidate
    raise ArchiveIOError(record.filename, "not found in any WARC directory")


# -- writing (fixtures, tests) --


def surt(url: str) -> str:
    """Sort-friendly URI reordering: ``http://www.Example.org/a?b`` -> ``org,example)/a?b``."""
    parts = urlsplit(url)
    host = (parts.hostname or "").lower()
    labels = host.split(".")
    if labels and labels[0] == "www":
        labels = labels[1:]
    key = ",".join(reversed(labels))
    if parts.port and parts.port not in (80, 443):
        key += f":{parts.port}"
    path = parts.path or "/"
    if parts.query:
        path += "?" + parts.query
    return (key + ")" + path).lower()


def build_warc_record(headers: dict[str, str], block: bytes) -> bytes:
    lines = ["WARC/1.0"]
    hdrs = dict(headers)
    hdrs["Content-Length"] = str(len(block))
    lines += [f"{k}: {v}" for k, v in hdrs.items()]
    head = ("\r\n".join(lines) + "\r\n\r\n").encode("utf-8")
    return head + block + b"\r\n\r\n"


def http_response_block(payload: bytes, content_type: str = "text/html; charset=utf-8", status: int = 200) -> bytes:
    reason = {200: "OK", 404: "Not Found", 301: "Moved Permanently"}.get(status, "OK")
    head = (
        f"HTTP/1.1 {status} {reason}\r\n"
        f"Content-Type: {content_type}\r\n"
        f"Content-Length: {len(payload)}\r\n\r\n"
    ).encode("latin-1")
    return head + payload


class WarcWriter:
    """Writes gzip-member-per-record WARC files and returns CDX entries."""

    def __init__(self, path, digest_algorithm: str = "sha1") -> None:
        self.path = Path(path)
        self.digest_algorithm = digest_algorithm
        self._fh = open(self.path, "wb")
        self._serial = 0

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "WarcWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _write(self, headers: dict[str, str], block: bytes) -> tuple[int, int]:
        raw = build_warc_record(headers, block)
        member = gzip.compress(raw, mtime=0)
        offset = self._fh.tell()
        self._fh.write(member)
        return offset, len(member)

    def _record_id(self, url: str, timestamp: str) -> str:
        self._serial += 1
        h = hashlib.sha1(f"{self.path.name}|{url}|{timestamp}|{self._serial}".encode()).hexdigest()
        return f"<urn:uuid:{h[:8]}-{h[8:12]}-{h[12:16]}-{h[16:20]}-{h[20:32]}>"

    def write_response(self, url: str, timestamp: str, payload: bytes, mime: str = "text/html", status: int = 200) -> CdxRecord:
        digest = payload_digest(payload, self.digest_algorithm)
        block = http_response_block(payload, f"{mime}; charset=utf-8" if mime.startswith("text/") else mime, status)
        headers = {
            "WARC-Type": "response",
            "WARC-Record-ID": self._record_id(url, timestamp),
            "WARC-Date": parse_timestamp(timestamp).strftime("%Y-%m-%dT%H:%M:%SZ"),
            "WARC-Target-URI": url,
            "WARC-Payload-Digest": f"{self.digest_algorithm}:{digest}",
            "Content-Type": "application/http; msgtype=response",
        }
        offset, size = self._write(headers, block)
        return CdxRecord(surt(url), timestamp, url, mime, status, digest, None, None, size, offset, self.path.name)

    def write_revisit(self, url: str, timestamp: str, digest: str, refers_to_date: str) -> CdxRecord:
        block = b"HTTP/1.1 200 OK\r\nContent-Type: text/html; charset=utf-8\r\n\r\n"
        headers = {
            "WARC-Type": "revisit",
            "WARC-Record-ID": self._record_id(url, timestamp),
            "WARC-Date": parse_timestamp(timestamp).strftime("%Y-%m-%dT%H:%M:%SZ"),
            "WARC-Target-URI": url,
            "WARC-Payload-Digest": f"{self.digest_algorithm}:{digest}",
            "WARC-Profile": "http://netpreserve.org/warc/1.0/revisit/identical-payload-digest",
            "WARC-Refers-To-Date": parse_timestamp(refers_to_date).strftime("%Y-%m-%dT%H:%M:%SZ"),
            "Content-Type": "application/http; msgtype=response",
        }
        offset, size = self._write(headers, block)
        return CdxRecord(surt(url), timestamp, url, "warc/revisit", None, digest, None, None, size, offset, self.path.name)


def index_warc(path, digest_algorithm: str = "sha1") -> list[CdxRecord]:
    """Scan a gzip-per-record WARC and build CDX entries for response/revisit records."""
    path = Path(path)
    out = []
    data = path.read_bytes()
    WARC_IO.record(len(data))
    pos = 0
    while pos < len(data):
        decomp = zlib.decompressobj(wbits=31)
        raw = decomp.decompress(data[pos:])
        size = len(data) - pos - len(decomp.unused_data)
        rec = parse_warc_bytes(raw)
        if rec.warc_type in ("response", "revisit"):
            url = rec.target_uri
            ts = format_timestamp(datetime.strptime(rec.warc_headers["WARC-Date"], "%Y-%m-%dT%H:%M:%SZ"))
            if rec.warc_type == "revisit":
                digest = rec.warc_headers.get("WARC-Payload-Digest", "-").split(":", 1)[-1]
                out.append(CdxRecord(surt(url), ts, url, "warc/revisit", None, digest, None, None, size, pos, path.name))
            else:
                ctype = (rec.http_header("Content-Type") or "unk").split(";")[0].strip()
                digest = payload_digest(rec.payload, digest_algorithm)
                out.append(CdxRecord(surt(url), ts, url, ctype, rec.http_status, digest, None, None, size, pos, path.name))
        pos += size
    return out
