"""Minimal SPARQL-over-HTTP endpoint for a sealed layer store.

``GET /sparql?query=...&format=csv|table`` and ``POST /sparql`` (body is the
query; ``format`` still comes from the query string). Errors answer 400 with a
plain-text diagnostic.
"""

from __future__ import annotations

import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from owa.sparql.engine import Engine, UnregisteredService
from owa.sparql.expressions import ExprError
from owa.sparql.parser import QuerySyntaxError

log = logging.getLogger(__name__)

MAX_BODY = 1 << 20


def render(engine: Engine, query: str, fmt: str) -> tuple[int, str, str]:
    """Evaluate and render; returns (status, content type, body)."""
    if fmt not in ("csv", "table"):
        return 400, "text/plain; charset=utf-8", f"unknown format {fmt!r}; use csv or table\n"
    try:
        table = engine.evaluate(query)
    except QuerySyntaxError as exc:
        return 400, "text/plain; charset=utf-8", f"{exc}\n"
    except UnregisteredService as exc:
        return 400, "text/plain; charset=utf-8", f"{exc}\n"
    except ExprError as exc:
        return 400, "text/plain; charset=utf-8", f"evaluation error: {exc}\n"
    if fmt == "csv":
        return 200, "text/csv; charset=utf-8", table.to_csv()
    return 200, "text/plain; charset=utf-8", table.to_text()


def make_handler(engine: Engine):
    class SparqlHandler(BaseHTTPRequestHandler):
        server_version = "owa-sparql/1.0"
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # route through logging
            log.info("%s %s", self.address_string(), fmt % args)

        def _send(self, status: int, ctype: str, body: str) -> None:
            data = body.encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _target(self):
            parts = urlsplit(self.path)
            if parts.path != "/sparql":
                self._send(404, "text/plain; charset=utf-8", "not found; use /sparql\n")
                return None
            return parse_qs(parts.query)

        def do_GET(self):
            params = self._target()
            if params is None:
                return
            query = params.get("query", [""])[0]
            if not query.strip():
                self._send(400, "text/plain; charset=utf-8", "missing query parameter\n")
                return
            self._send(*render(engine, query, params.get("format", ["table"])[0]))

        def do_POST(self):
            params = self._target()
            if params is None:
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
            except ValueError:
                length = -1
            if length < 0 or length > MAX_BODY:
                self._send(400, "text/plain; charset=utf-8", "bad Content-Length\n")
                return
            query = self.rfile.read(length).decode("utf-8", "replace")
            if not query.strip():
                self._send(400, "text/plain; charset=utf-8", "empty query body\n")
                return
            self._send(*render(engine, query, params.get("format", ["table"])[0]))

    return SparqlHandler


def make_server(engine: Engine, host: str, port: int) -> ThreadingHTTPServer:
    """Bind (raises OSError on failure) without starting the loop."""
    server = ThreadingHTTPServer((host, port), make_handler(engine))
    server.daemon_threads = True
    return server


def serve_in_thread(engine: Engine, host: str = "127.0.0.1", port: int = 0):
    """Start a server on a background thread; returns (server, thread). Used by tests."""
    server = make_server(engine, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread
