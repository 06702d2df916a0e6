"""Syntax tree for the supported SPARQL subset.

Expression nodes are frozen dataclasses so that structurally equal
expressions compare equal; grouping relies on that to match a projected
``month(?date)`` against ``GROUP BY month(?date)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from owa.rdf.terms import Term


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name if self.name.startswith("_:") else f"?{self.name}"


PatternTerm = Union[Var, Term]


# -- expressions --


@dataclass(frozen=True)
class VarExpr:
    name: str


@dataclass(frozen=True)
class ConstExpr:
    term: Term


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnaryOp:
    op: str
    arg: "Expr"


@dataclass(frozen=True)
class Call:
    """Built-in function (lowercased name) or cast (name is a datatype IRI)."""

    name: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Aggregate:
    name: str
    arg: Optional["Expr"]  # None for COUNT(*)
    distinct: bool = False


Expr = Union[VarExpr, ConstExpr, BinOp, UnaryOp, Call, Aggregate]


def expr_vars(expr: Expr) -> set[str]:
    if isinstance(expr, VarExpr):
        return {expr.name}
    if isinstance(expr, BinOp):
        return expr_vars(expr.left) | expr_vars(expr.right)
    if isinstance(expr, UnaryOp):
        return expr_vars(expr.arg)
    if isinstance(expr, Call):
        out: set[str] = set()
        for a in expr.args:
            out |= expr_vars(a)
        return out
    if isinstance(expr, Aggregate):
        return expr_vars(expr.arg) if expr.arg is not None else set()
    return set()


def aggregates_in(expr: Expr) -> list[Aggregate]:
    if isinstance(expr, Aggregate):
        return [expr]
    if isinstance(expr, BinOp):
        return aggregates_in(expr.left) + aggregates_in(expr.right)
    if isinstance(expr, UnaryOp):
        return aggregates_in(expr.arg)
    if isinstance(expr, Call):
        out: list[Aggregate] = []
        for a in expr.args:
            out += aggregates_in(a)
        return out
    return []


# -- graph patterns --


@dataclass(frozen=True)
class TriplePattern:
    s: PatternTerm
    p: PatternTerm
    o: PatternTerm

    def vars(self) -> list[str]:
        out = []
        for t in (self.s, self.p, self.o):
            if isinstance(t, Var) and t.name not in out:
                out.append(t.name)
        return out

    def __str__(self) -> str:
        return " ".join(str(t) for t in (self.s, self.p, self.o))


@dataclass
class Filter:
    expr: Expr


@dataclass
class OptionalBlock:
    group: "Group"


@dataclass
class ServiceBlock:
    iri: str
    group: "Group"
    silent: bool = False


@dataclass
class SubQuery:
    query: "SelectQuery"


@dataclass
class Group:
    elements: list = field(default_factory=list)

    @property
    def filters(self) -> list[Filter]:
        return [e for e in self.elements if isinstance(e, Filter)]


@dataclass
class SelectItem:
    expr: Optional[Expr]  # None: plain variable projection
    var: str
    explicit_alias: bool = True


@dataclass
class GroupCondition:
    expr: Expr
    alias: Optional[str] = None


@dataclass
class OrderCondition:
    expr: Expr
    descending: bool = False


@dataclass
class SelectQuery:
    items: list[SelectItem]
    where: Group
    star: bool = False
    distinct: bool = False
    group_by: list[GroupCondition] = field(default_factory=list)
    order_by: list[OrderCondition] = field(default_factory=list)
    limit: Optional[int] = None
    offset: int = 0
    prefixes: dict[str, str] = field(default_factory=dict)

    @property
    def is_aggregate(self) -> bool:
        if self.group_by:
            return True
        return any(i.expr is not None and aggregates_in(i.expr) for i in self.items)


def group_vars(group: Group) -> list[str]:
    """In-scope variables of a group in order of first appearance (blank-node vars excluded)."""
    out: list[str] = []

    def add(name: str) -> None:
        if name not in out and not name.startswith("_:"):
            out.append(name)

    for el in group.elements:
        if isinstance(el, TriplePattern):
            for v in el.vars():
                add(v)
        elif isinstance(el, OptionalBlock):
            for v in group_vars(el.group):
                add(v)
        elif isinstance(el, ServiceBlock):
            for v in group_vars(el.group):
                add(v)
        elif isinstance(el, Group):
            for v in group_vars(el):
                add(v)
        elif isinstance(el, SubQuery):
            for v in projected_vars(el.query):
                add(v)
    return out


def projected_vars(query: SelectQuery) -> list[str]:
    if query.star:
        return group_vars(query.where)
    return [i.var for i in query.items]
