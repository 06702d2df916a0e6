"""Helpers shared by several test modules."""

from __future__ import annotations

from pathlib import Path

from owa.fixtures import KB_SERVICE
from owa.pipeline import load_store
from owa.rdf.store import store_from
from owa.sparql.engine import Engine, ServiceRegistry

QUERY_DIR = Path(__file__).resolve().parents[1] / "src" / "owa" / "queries"


def engine_for(fs, kinds, with_kb: bool = True) -> Engine:
    store = load_store([fs.layers[k] for k in kinds], name="layer")
    registry = ServiceRegistry()
    if with_kb:
        registry.register_service(KB_SERVICE, load_store([fs.kb], name="kb"))
    return Engine(store, registry)


def triples_engine(triples, kb_triples=None) -> Engine:
    registry = ServiceRegistry()
    if kb_triples is not None:
        registry.register_service(KB_SERVICE, store_from(kb_triples, name="kb"))
    return Engine(store_from(triples, name="layer"), registry)


def listing(n: int) -> str:
    return (QUERY_DIR / f"listing{n:02d}.rq").read_text(encoding="utf-8")


# criterion number -> "PASS ..." / "FAIL ..." line, printed by conftest
ACCEPTANCE_RESULTS: dict[int, str] = {}
