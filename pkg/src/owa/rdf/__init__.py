"""RDF data model, triple store and N3-subset I/O."""

from owa.rdf.n3 import ParseError, UnserializableTerm, parse, serialize, serialize_ntriples
from owa.rdf.store import DEFAULT_TABLE, GraphStore, StoreSealed, TermTable, store_from
from owa.rdf.terms import IRI, BNode, Literal, Term, Triple

__all__ = [
    "BNode", "DEFAULT_TABLE", "GraphStore", "IRI", "Literal", "ParseError", "StoreSealed",
    "Term", "TermTable", "Triple", "UnserializableTerm", "parse", "serialize",
    "serialize_ntriples", "store_from",
]
