"""``owa`` command line.

Exit codes:
  0  success
  1  other runtime error (unreadable input, evaluation error)
  2  configuration or usage error
  3  SPARQL syntax error
  4  SERVICE IRI not mounted
  5  server could not bind its address
"""

from __future__ import annotations

import logging
import sys
from argparse import ArgumentParser
from pathlib import Path

from owa.analytics import Analytics, UnknownDocument, format_ranking
from owa.archive_io import ArchiveError
from owa.pipeline import ConfigError, build_layer, load_config, load_store
from owa.rdf.n3 import ParseError
from owa.sparql.engine import Engine, ServiceRegistry, UnregisteredService
from owa.sparql.expressions import ExprError
from owa.sparql.parser import QuerySyntaxError

log = logging.getLogger("owa")

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_SYNTAX, EXIT_SERVICE, EXIT_BIND = 0, 1, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _mounts(pairs) -> dict[str, list[Path]]:
    out: dict[str, list[Path]] = {}
    for pair in pairs or []:
        iri, sep, path = pair.partition("=")
        if not sep or not iri or not path:
            raise UsageError(f"expected IRI=PATH for -k, got {pair!r}")
        out.setdefault(iri, []).append(Path(path))
    return out


def _engine(args) -> Engine:
    layers = [Path(p) for group in args.layer for p in group]
    if not layers:
        raise UsageError("at least one -l LAYER is required")
    store = load_store(layers, name="layer")
    registry = ServiceRegistry()
    for iri, paths in _mounts(args.kb).items():
        registry.register_service(iri, load_store(paths, name=iri))
    log.info("loaded %d layer triples, %d service(s)", len(store), len(registry.iris()))
    return Engine(store, registry)


def _add_store_args(p) -> None:
    p.add_argument("-l", "--layer", action="append", nargs="+", default=[], metavar="LAYER",
                   help="layer file(s), N3/N-Triples, optionally gzipped")
    p.add_argument("-k", "--kb", action="append", metavar="IRI=PATH",
                   help="mount an RDF file as the store behind a SERVICE IRI")


def argparser() -> ArgumentParser:
    ap = ArgumentParser(prog="owa", description="Semantic layers over web archives, news and tweets.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a semantic layer from a config file")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--threads", type=int, help="override the config thread count")

    p = sub.add_parser("query", help="evaluate a SPARQL query over layers")
    _add_store_args(p)
    p.add_argument("-q", "--query", required=True, help="query file ('-' for stdin)")
    p.add_argument("--format", choices=("csv", "table"), default="table")
    p.add_argument("--explain", action="store_true", help="print the plan instead of results")

    p = sub.add_parser("serve", help="serve /sparql over HTTP")
    _add_store_args(p)
    p.add_argument("-b", "--bind", default="127.0.0.1:8890", metavar="HOST:PORT")

    p = sub.add_parser("eval", help="run an information-need suite")
    _add_store_args(p)
    p.add_argument("--needs", required=True)
    p.add_argument("--judgments", required=True)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--corpus", action="append", default=[],
                   help="JSONL corpus for the keyword baseline (default: layer text)")
    p.add_argument("--out", help="directory for metrics.csv and timing.csv")

    p = sub.add_parser("analytics", help="entity analytics")
    asub = p.add_subparsers(dest="analysis", required=True)
    a = asub.add_parser("popularity")
    _add_store_args(a)
    a.add_argument("--entity", required=True)
    a.add_argument("--year", type=int, required=True)
    a = asub.add_parser("cooccur")
    _add_store_args(a)
    a.add_argument("--entity", required=True)
    a.add_argument("--type", required=True, dest="kb_type")
    a.add_argument("--from", required=True, dest="date_from")
    a.add_argument("--to", required=True, dest="date_to")
    a.add_argument("-n", type=int, default=5)
    a = asub.add_parser("similar")
    _add_store_args(a)
    a.add_argument("--doc", required=True)
    a.add_argument("-n", type=int, default=5)
    a = asub.add_parser("top")
    _add_store_args(a)
    a.add_argument("--type", required=True, dest="kb_type")
    a.add_argument("--from", dest="date_from")
    a.add_argument("--to", dest="date_to")
    a.add_argument("-n", type=int, default=10)
    for a in asub.choices.values():
        a.add_argument("--service", default="http://dbpedia.org/sparql",
                       help="SERVICE IRI whose mount answers type lookups")
        a.add_argument("--sparql", action="store_true", help="compute through the SPARQL form")

    p = sub.add_parser("fixtures", help="write the synthetic fixture collection")
    p.add_argument("--out", required=True)
    p.add_argument("--scale", choices=("full", "small"), default="full")
    p.add_argument("--build", action="store_true", help="also build the three layers")
    return ap


def cmd_build(args) -> int:
    overrides = {"threads": args.threads} if args.threads is not None else None
    cfg = load_config(args.config, overrides)
    manifest = build_layer(cfg)
    print(f"layer: {cfg.output}")
    print(manifest.to_text(), end="")
    return EXIT_OK


def cmd_query(args) -> int:
    engine = _engine(args)
    text = sys.stdin.read() if args.query == "-" else Path(args.query).read_text(encoding="utf-8")
    if args.explain:
        print(engine.explain(text), end="")
        return EXIT_OK
    table = engine.evaluate(text)
    sys.stdout.write(table.to_csv() if args.format == "csv" else table.to_text())
    return EXIT_OK


def cmd_serve(args) -> int:
    from owa.server import make_server

    host, sep, port = args.bind.rpartition(":")
    if not sep or not port.isdigit():
        raise UsageError(f"expected HOST:PORT for -b, got {args.bind!r}")
    engine = _engine(args)
    try:
        server = make_server(engine, host or "127.0.0.1", int(port))
    except OSError as exc:
        print(f"owa: cannot bind {args.bind}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_BIND
    print(f"serving http://{host or '127.0.0.1'}:{server.server_address[1]}/sparql", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_eval(args) -> int:
    from owa import evaluation as ev

    engine = _engine(args)
    needs = ev.load_needs(args.needs)
    judgments = ev.load_judgments(args.judgments)
    layer_docs = ev.layer_documents(engine.store)
    if args.corpus:
        docs = [d for path in args.corpus for d in ev.corpus_documents(path)]
    else:
        docs = layer_docs
    metrics = ev.run_suite(needs, judgments, engine, docs, {d.id for d in layer_docs})
    timing = ev.time_queries(needs, engine, args.runs)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.csv").write_text(ev.metrics_csv(metrics), encoding="utf-8")
        (out / "timing.csv").write_text(ev.timing_csv(timing), encoding="utf-8")
    print(ev.summary_text(metrics, timing), end="")
    return EXIT_OK


def cmd_analytics(args) -> int:
    engine = _engine(args)
    kb = engine.registry.get(args.service)
    tool = Analytics(engine.store, kb, args.service)

    def run(op, *a):
        return tool.via_sparql(op, *a) if args.sparql else getattr(tool, op)(*a)

    if args.analysis == "popularity":
        print(format_ranking(run("popularity", args.entity, args.year), ("month", "popularity")), end="")
    elif args.analysis == "cooccur":
        rows = run("cooccurring", args.entity, args.kb_type, args.date_from, args.date_to, args.n)
        print(format_ranking(rows, ("entity", "documents")), end="")
    elif args.analysis == "similar":
        print(format_ranking(run("similar", args.doc, args.n), ("document", "common entities")), end="")
    else:
        rows = run("top_entities", args.kb_type, args.date_from, args.date_to, args.n)
        print(format_ranking(rows, ("entity", "documents")), end="")
    return EXIT_OK


def cmd_fixtures(args) -> int:
    from owa.fixtures import write_fixtures

    fs = write_fixtures(args.out, args.scale)
    print(f"wrote fixtures to {fs.root}")
    if args.build:
        for kind, path in fs.configs.items():
            manifest = build_layer(load_config(path))
            print(f"{kind}: {manifest.triples} triples")
    return EXIT_OK


COMMANDS = {
    "build": cmd_build, "query": cmd_query, "serve": cmd_serve, "eval": cmd_eval,
    "analytics": cmd_analytics, "fixtures": cmd_fixtures,
}


def main(argv=None) -> int:
    args = argparser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        print(f"owa: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuerySyntaxError as exc:
        print(f"owa: {exc}", file=sys.stderr)
        return EXIT_SYNTAX
    except UnregisteredService as exc:
        print(f"owa: {exc}", file=sys.stderr)
        return EXIT_SERVICE
    except (ParseError, ArchiveError, ExprError, UnknownDocument, OSError, ValueError) as exc:
        print(f"owa: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
