"""Query evaluation over GraphStore instances.

Solutions are dicts from variable name to term id. Within a group the
elements between OPTIONALs form a block; a block's triple patterns are
evaluated by bind-join in a greedy order (connected patterns first, then by
estimated cardinality), while SERVICE blocks, sub-selects and nested groups
are evaluated on their own and hash-joined in. FILTERs run as soon as all of
their variables are bound in every solution, otherwise at the end of the
group.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from owa.rdf.store import GraphStore, TermTable
from owa.rdf.terms import LITERAL_KIND, Term, order_key, term_sort_bytes
from owa.sparql.ast import (
    Aggregate, BinOp, Filter, VarExpr, Group, OptionalBlock, SelectQuery, ServiceBlock, SubQuery, TriplePattern, Var,
    aggregates_in, expr_vars, group_vars, projected_vars,
)
from owa.sparql.expressions import Context, aggregate_values, filter_passes, try_evaluate
from owa.sparql.parser import parse_query

log = logging.getLogger(__name__)

Row = dict


class UnregisteredService(LookupError):
    def __init__(self, iri: str) -> None:
        self.iri = iri
        super().__init__(f"no knowledge base registered for SERVICE <{iri}>")


class ServiceRegistry:
    """Maps SERVICE IRIs to local stores; nothing is ever fetched over the network."""

    def __init__(self) -> None:
        self._stores: dict[str, GraphStore] = {}

    def register_service(self, iri: str, store: GraphStore) -> None:
        self._stores[iri] = store

    def get(self, iri: str) -> Optional[GraphStore]:
        return self._stores.get(iri)

    def __contains__(self, iri: str) -> bool:
        return iri in self._stores

    def iris(self) -> list[str]:
        return sorted(self._stores)


def render_value(term: Optional[Term]) -> str:
    if term is None:
        return ""
    if term.is_blank:
        return f"_:{term.value}"
    return term.value


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def column(self, name: str) -> list[Optional[Term]]:
        idx = self.columns.index(name)
        return [r[idx] for r in self.rows]

    def records(self) -> list[dict[str, Optional[Term]]]:
        return [dict(zip(self.columns, r)) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([render_value(t) for t in row])
        return buf.getvalue()

    def to_text(self) -> str:
        cells = [list(self.columns)] + [[render_value(t) for t in row] for row in self.rows]
        widths = [max(len(c[i]) for c in cells) for i in range(len(self.columns))]
        lines = []
        for n, row in enumerate(cells):
            lines.append(" | ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
            if n == 0:
                lines.append("-+-".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


# -- planning --


@dataclass
class _TripleStep:
    pattern: TriplePattern
    slots: tuple  # per position: ("c", id-or-None) or ("v", name)
    estimate: int
    index: str

    def binds(self) -> set[str]:
        return {s[1] for s in self.slots if s[0] == "v"}


@dataclass
class _JoinStep:
    label: str
    rows: list
    vars: set[str]
    certain: set[str]
    sub_lines: list = field(default_factory=list)

    def binds(self) -> set[str]:
        return self.certain


def _certain_vars(rows: list[Row]) -> set[str]:
    if not rows:
        return set()
    it = iter(rows)
    common = set(next(it))
    for r in it:
        common &= r.keys()
        if not common:
            break
    return common


def _equality_aliases(exprs: Iterable) -> dict[str, set[str]]:
    """Variable pairs constrained by ``?a = ?b`` in a conjunctive position."""
    out: dict[str, set[str]] = {}
    stack = list(exprs)
    while stack:
        e = stack.pop()
        if isinstance(e, BinOp) and e.op == "&&":
            stack.extend((e.left, e.right))
        elif isinstance(e, BinOp) and e.op == "=" and isinstance(e.left, VarExpr) and isinstance(e.right, VarExpr):
            a, b = e.left.name, e.right.name
            out.setdefault(a, set()).add(b)
            out.setdefault(b, set()).add(a)
    return out


def _all_vars(rows: list[Row]) -> set[str]:
    out: set[str] = set()
    for r in rows:
        out.update(r)
    return out


class Engine:
    def __init__(self, store: GraphStore, registry: Optional[ServiceRegistry] = None) -> None:
        self.store = store
        self.registry = registry or ServiceRegistry()
        self.table: TermTable = store.table

    # public API

    def evaluate(self, query: Union[str, SelectQuery]) -> ResultTable:
        if isinstance(query, str):
            query = parse_query(query)
        columns, rows = self._select(query, self.store)
        term = self.table.term
        return ResultTable(columns, [tuple(None if v is None else term(v) for v in r) for r in rows])

    def explain(self, query: Union[str, SelectQuery]) -> str:
        if isinstance(query, str):
            query = parse_query(query)
        lines: list[str] = []
        self._explain_select(query, self.store, set(), lines, 0)
        return "\n".join(lines) + "\n"

    # pattern compilation

    def _slots(self, pattern: TriplePattern) -> tuple:
        out = []
        for t in (pattern.s, pattern.p, pattern.o):
            if isinstance(t, Var):
                out.append(("v", t.name))
            else:
                out.append(("c", self.table.lookup(t)))
        return tuple(out)

    def _triple_step(self, pattern: TriplePattern, store: GraphStore, bound: set[str],
                     aliases: Optional[dict] = None) -> _TripleStep:
        slots = []
        for slot in self._slots(pattern):
            if slot[0] == "v" and slot[1] not in bound and aliases:
                partners = sorted(aliases.get(slot[1], set()) & bound)
                if partners:
                    slot = ("a", slot[1], partners[0])
            slots.append(slot)
        slots = tuple(slots)
        if any(s[0] == "c" and s[1] is None for s in slots):
            est = 0
        else:
            est = store.estimate(*(s[1] if s[0] == "c" else None for s in slots))
        flags = [s[0] != "v" or s[1] in bound for s in slots]
        return _TripleStep(pattern, slots, est, store.index_for(*flags))

    def _plan(self, triples: list[TriplePattern], joins: list[_JoinStep], bound: set[str],
              store: GraphStore, aliases: Optional[dict] = None) -> list:
        remaining: list = [("t", i, tp) for i, tp in enumerate(triples)] + [("j", i, j) for i, j in enumerate(joins)]
        bound = set(bound)
        steps = []
        while remaining:
            best_key, best_pos, best_step = None, 0, None
            for pos, (kind, order, obj) in enumerate(remaining):
                if kind == "t":
                    step = self._triple_step(obj, store, bound, aliases)
                    shared = sum(1 for sl in step.slots if sl[0] == "a" or (sl[0] == "v" and sl[1] in bound))
                    est = step.estimate
                else:
                    step = obj
                    shared = len(obj.vars & bound)
                    est = len(obj.rows)
                connected = shared > 0 or not bound
                key = (0 if est == 0 else 1, 0 if connected else 1, -shared, est, kind == "j", order)
                if best_key is None or key < best_key:
                    best_key, best_pos, best_step = key, pos, step
            remaining.pop(best_pos)
            steps.append(best_step)
            bound |= best_step.binds()
        return steps

    # execution

    def _bind_join(self, rows: list[Row], step: _TripleStep, store: GraphStore) -> list[Row]:
        slots = step.slots
        if any(sl[0] == "c" and sl[1] is None for sl in slots):
            return []
        term = self.table.term
        out = []
        match = store.match_ids
        for row in rows:
            key = []
            for sl in slots:
                if sl[0] == "c":
                    key.append(sl[1])
                    continue
                val = row.get(sl[1])
                if val is None and sl[0] == "a":
                    # an equality filter partner is bound; IRIs and blank nodes are only
                    # equal to themselves, so it can drive the lookup (the filter still runs)
                    partner = row.get(sl[2])
                    if partner is not None and term(partner).kind != LITERAL_KIND:
                        val = partner
                key.append(val)
            for triple in match(*key):
                new = None
                ok = True
                for sl, val in zip(slots, triple):
                    if sl[0] == "c":
                        continue
                    name = sl[1]
                    cur = (new if new is not None else row).get(name)
                    if cur is None:
                        if new is None:
                            new = dict(row)
                        new[name] = val
                    elif cur != val:
                        ok = False
                        break
                if ok:
                    out.append(new if new is not None else dict(row))
        return out

    @staticmethod
    def _hash_join(left: list[Row], right: list[Row], left_certain: set[str], right_certain: set[str],
                   right_vars: set[str]) -> list[Row]:
        if not left or not right:
            return []
        shared_possible = _all_vars(left) & right_vars
        out = []
        if shared_possible and shared_possible <= left_certain and shared_possible <= right_certain:
            keys = sorted(shared_possible)
            buckets: dict[tuple, list[Row]] = {}
            for r in right:
                buckets.setdefault(tuple(r[k] for k in keys), []).append(r)
            for l in left:
                for r in buckets.get(tuple(l[k] for k in keys), ()):
                    merged = dict(l)
                    merged.update(r)
                    out.append(merged)
            return out
        for l in left:
            for r in right:
                if all(l[k] == v for k, v in r.items() if k in l):
                    merged = dict(l)
                    merged.update(r)
                    out.append(merged)
        return out

    def _ctx(self, row: Row) -> Context:
        term = self.table.term

        def get(name: str) -> Optional[Term]:
            v = row.get(name)
            return None if v is None else term(v)

        return Context(get)

    def _apply_filters(self, rows: list[Row], exprs: list) -> list[Row]:
        if not exprs:
            return rows
        return [r for r in rows if all(filter_passes(e, self._ctx(r)) for e in exprs)]

    def _pushable(self, pending: list, certain: set[str]) -> list:
        ready = [e for e in pending if expr_vars(e) <= certain]
        for e in ready:
            pending.remove(e)
        return ready

    def _independent(self, el, store: GraphStore) -> _JoinStep:
        if isinstance(el, ServiceBlock):
            target = self.registry.get(el.iri)
            if target is None:
                if el.silent:
                    return _JoinStep(f"SERVICE SILENT <{el.iri}> (unavailable)", [{}], set(), set())
                raise UnregisteredService(el.iri)
            rows = self._eval_group(el.group, target)
            label = f"SERVICE <{el.iri}>"
        elif isinstance(el, SubQuery):
            _, rows = self._select(el.query, store, as_dicts=True)
            label = "SUBSELECT"
        else:
            rows = self._eval_group(el, store)
            label = "GROUP"
        return _JoinStep(label, rows, _all_vars(rows), _certain_vars(rows))

    def _run_block(self, block: list, store: GraphStore, rows: list[Row], pending: list) -> list[Row]:
        certain = _certain_vars(rows)
        rows = self._apply_filters(rows, self._pushable(pending, certain))
        if not block or not rows:
            return rows
        triples = [e for e in block if isinstance(e, TriplePattern)]
        joins = [self._independent(e, store) for e in block if not isinstance(e, TriplePattern)]
        for step in self._plan(triples, joins, certain, store, _equality_aliases(pending)):
            if isinstance(step, _TripleStep):
                rows = self._bind_join(rows, step, store)
            else:
                rows = self._hash_join(rows, step.rows, certain, step.certain, step.vars)
            certain = certain | step.binds()
            rows = self._apply_filters(rows, self._pushable(pending, certain))
            if not rows:
                return rows
        return rows

    def _eval_group(self, group: Group, store: GraphStore, rows: Optional[list[Row]] = None,
                    with_filters: bool = True) -> list[Row]:
        rows = [{}] if rows is None else rows
        pending = [f.expr for f in group.filters] if with_filters else []
        block: list = []
        for el in group.elements:
            if isinstance(el, Filter):
                continue
            if isinstance(el, OptionalBlock):
                rows = self._run_block(block, store, rows, pending)
                block = []
                rows = self._left_join(rows, el.group, store)
            else:
                block.append(el)
        rows = self._run_block(block, store, rows, pending)
        return self._apply_filters(rows, pending)

    def _left_join(self, rows: list[Row], group: Group, store: GraphStore) -> list[Row]:
        if not rows:
            return rows
        conds = [f.expr for f in group.filters]
        out: list[Row] = []
        if all(isinstance(e, (TriplePattern, Filter)) for e in group.elements):
            triples = [e for e in group.elements if isinstance(e, TriplePattern)]
            steps = self._plan(triples, [], _certain_vars(rows), store, _equality_aliases(conds))
            for row in rows:
                ext = [row]
                for step in steps:
                    ext = self._bind_join(ext, step, store)
                    if not ext:
                        break
                ext = self._apply_filters(ext, conds)
                out.extend(ext if ext else [row])
            return out
        right = self._eval_group(group, store, with_filters=False)
        right_vars = _all_vars(right)
        for row in rows:
            ext = self._hash_join([row], right, set(row), _certain_vars(right), right_vars)
            ext = self._apply_filters(ext, conds)
            out.extend(ext if ext else [row])
        return out

    # SELECT

    def _select(self, q: SelectQuery, store: GraphStore, as_dicts: bool = False):
        rows = self._eval_group(q.where, store)
        columns = projected_vars(q)
        intern = self.table.intern
        term = self.table.term
        if q.is_aggregate:
            solved = self._aggregate(q, rows)
        else:
            solved = []
            for row in rows:
                for item in q.items:
                    if item.expr is not None:
                        value = try_evaluate(item.expr, self._ctx(row))
                        if value is not None:
                            row[item.var] = intern(value)
                order_terms = tuple(try_evaluate(c.expr, self._ctx(row)) for c in q.order_by)
                solved.append((row, order_terms))
        if q.order_by:
            def tiebreak(pair):
                row = pair[0]
                return tuple(term_sort_bytes(None if row.get(c) is None else term(row[c])) for c in columns)

            solved.sort(key=tiebreak)
            for i in range(len(q.order_by) - 1, -1, -1):
                solved.sort(key=lambda pair, i=i: order_key(pair[1][i]), reverse=q.order_by[i].descending)
        projected = [tuple(row.get(c) for c in columns) for row, _ in solved]
        if q.distinct:
            seen = set()
            unique = []
            for r in projected:
                if r not in seen:
                    seen.add(r)
                    unique.append(r)
            projected = unique
        end = None if q.limit is None else q.offset + q.limit
        projected = projected[q.offset:end]
        if as_dicts:
            return columns, [{c: v for c, v in zip(columns, r) if v is not None} for r in projected]
        return columns, projected

    def _aggregate(self, q: SelectQuery, rows: list[Row]) -> list:
        intern = self.table.intern
        if not rows:
            return []
        groups: dict[tuple, list[Row]] = {}
        for row in rows:
            ctx = self._ctx(row)
            key = []
            for cond in q.group_by:
                v = try_evaluate(cond.expr, ctx)
                key.append(None if v is None else intern(v))
            groups.setdefault(tuple(key), []).append(row)
        aggs: list[Aggregate] = []
        for expr in [i.expr for i in q.items if i.expr is not None] + [c.expr for c in q.order_by]:
            for a in aggregates_in(expr):
                if a not in aggs:
                    aggs.append(a)
        term = self.table.term
        out = []
        for key, members in groups.items():
            bindings: dict[str, int] = {}
            group_values: dict = {}
            for cond, kid in zip(q.group_by, key):
                value = None if kid is None else term(kid)
                if cond.alias:
                    if kid is not None:
                        bindings[cond.alias] = kid
                elif isinstance(cond.expr, VarExpr):
                    if kid is not None:
                        bindings[cond.expr.name] = kid
                else:
                    group_values[cond.expr] = value
            agg_values = {}
            for a in aggs:
                if a.arg is None:
                    agg_values[a] = aggregate_values(a, [], len(members))
                    continue
                vals = [try_evaluate(a.arg, self._ctx(r)) for r in members]
                agg_values[a] = aggregate_values(a, vals, len(members))
            ctx = Context(lambda name: None if bindings.get(name) is None else term(bindings[name]),
                          group_values, agg_values)
            for item in q.items:
                if item.expr is not None:
                    value = try_evaluate(item.expr, ctx)
                    if value is not None:
                        bindings[item.var] = intern(value)
            order_terms = tuple(try_evaluate(c.expr, ctx) for c in q.order_by)
            out.append((bindings, order_terms))
        return out

    # explain

    def _explain_select(self, q: SelectQuery, store: GraphStore, bound: set[str], lines: list[str], depth: int):
        pad = "  " * depth
        head = "SELECT DISTINCT" if q.distinct else "SELECT"
        lines.append(f"{pad}{head} {' '.join('?' + c for c in projected_vars(q))}")
        self._explain_group(q.where, store, set(), lines, depth + 1)
        if q.group_by:
            lines.append(f"{pad}  GROUP BY {len(q.group_by)} key(s)")
        if q.order_by:
            lines.append(f"{pad}  ORDER BY {len(q.order_by)} key(s)")
        if q.limit is not None or q.offset:
            lines.append(f"{pad}  SLICE offset={q.offset} limit={q.limit}")

    def _explain_group(self, group: Group, store: GraphStore, bound: set[str], lines: list[str], depth: int):
        pad = "  " * depth
        block: list = []
        bound = set(bound)
        aliases = _equality_aliases(f.expr for f in group.filters)

        def flush():
            nonlocal bound
            if not block:
                return
            triples = [e for e in block if isinstance(e, TriplePattern)]
            others = [e for e in block if not isinstance(e, TriplePattern)]
            joins = []
            for el in others:
                sub_lines: list[str] = []
                if isinstance(el, ServiceBlock):
                    target = self.registry.get(el.iri)
                    label = f"SERVICE <{el.iri}>" + ("" if target is not None else " (unregistered)")
                    if target is not None:
                        self._explain_group(el.group, target, set(), sub_lines, depth + 2)
                    names = set(group_vars(el.group))
                    est = _static_size(el.group, target) if target is not None else 0
                elif isinstance(el, SubQuery):
                    label = "SUBSELECT"
                    self._explain_select(el.query, store, set(), sub_lines, depth + 2)
                    names = set(projected_vars(el.query))
                    est = 1
                else:
                    label = "GROUP"
                    self._explain_group(el, store, set(), sub_lines, depth + 2)
                    names = set(group_vars(el))
                    est = _static_size(el, store)
                joins.append(_JoinStep(label, [None] * est, names, names, sub_lines))
            for n, step in enumerate(self._plan(triples, joins, bound, store, aliases), 1):
                if isinstance(step, _TripleStep):
                    lines.append(f"{pad}[{n}] {step.pattern}  index={step.index} est={step.estimate}")
                else:
                    lines.append(f"{pad}[{n}] HASH JOIN {step.label} on {sorted(step.vars & bound) or '-'}")
                    lines.extend(step.sub_lines)
                bound |= step.binds()
            block.clear()

        for el in group.elements:
            if isinstance(el, Filter):
                continue
            if isinstance(el, OptionalBlock):
                flush()
                lines.append(f"{pad}LEFT JOIN OPTIONAL")
                self._explain_group(el.group, store, bound, lines, depth + 1)
            else:
                block.append(el)
        flush()
        for f in group.filters:
            lines.append(f"{pad}FILTER on {sorted(expr_vars(f.expr))}")


def _static_size(group: Group, store: GraphStore) -> int:
    """Smallest constant-only estimate among a group's patterns (rough size of its result)."""
    sizes = []
    for el in group.elements:
        if isinstance(el, TriplePattern):
            ids = []
            for t in (el.s, el.p, el.o):
                ids.append(None if isinstance(t, Var) else store.table.lookup(t))
            sizes.append(store.estimate(*ids))
    return min(sizes) if sizes else 1


def evaluate(query: Union[str, SelectQuery], store: GraphStore, registry: Optional[ServiceRegistry] = None) -> ResultTable:
    """Run a SELECT query against ``store``; SERVICE IRIs resolve through ``registry``."""
    return Engine(store, registry).evaluate(query)


def explain(query: Union[str, SelectQuery], store: GraphStore, registry: Optional[ServiceRegistry] = None) -> str:
    """Describe the join order and index choice for each block of the query."""
    return Engine(store, registry).explain(query)


def results_equal(a: ResultTable, b: ResultTable, ordered: bool = False) -> bool:
    if a.columns != b.columns:
        return False
    if ordered:
        return a.rows == b.rows
    return sorted(a.rows, key=_row_key) == sorted(b.rows, key=_row_key)


def _row_key(row: Iterable) -> tuple:
    return tuple(term_sort_bytes(t) for t in row)
