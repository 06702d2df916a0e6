"""Recursive-descent parser for the SELECT subset used by the layer queries.

Supported: PREFIX/BASE, SELECT [DISTINCT] with variables, ``(expr AS ?v)``
and bare expressions, WHERE groups with triple patterns (``a``, ``;``, ``,``),
FILTER, OPTIONAL, SERVICE [SILENT], nested groups and sub-selects,
GROUP BY, ORDER BY, LIMIT and OFFSET. Keywords are case-insensitive and the
usual prefixes (dc, dbo, oae, schema, ...) need no declaration.
"""

from __future__ import annotations

import re
from typing import Optional

from owa.rdf.terms import (
    STANDARD_PREFIXES, XSD, XSD_BOOLEAN, XSD_DECIMAL, XSD_DOUBLE, XSD_INTEGER, IRI, Literal, Term,
)
from owa.sparql.ast import (
    Aggregate, BinOp, Call, ConstExpr, Expr, Filter, Group, GroupCondition, OptionalBlock, OrderCondition,
    SelectItem, SelectQuery, ServiceBlock, SubQuery, TriplePattern, UnaryOp, Var, VarExpr, aggregates_in,
    expr_vars,
)

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"


class QuerySyntaxError(ValueError):
    def __init__(self, position: int, expected: str, text: str = "") -> None:
        self.position = position
        self.expected = expected
        line = text.count("\n", 0, position) + 1 if text else None
        where = f"line {line}, offset {position}" if line else f"offset {position}"
        super().__init__(f"syntax error at {where}: expected {expected}")


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\x00-\x20]*>)
  | (?P<string>\"\"\"(?:[^"\\]|\\.|"(?!""))*\"\"\"|'''(?:[^'\\]|\\.|'(?!''))*'''|"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*')
  | (?P<var>[?$][A-Za-z0-9_]+)
  | (?P<bnode>_:[A-Za-z0-9_][A-Za-z0-9_.\-]*(?<!\.))
  | (?P<lang>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<number>(?:\d+\.\d*[eE][+-]?\d+|\.\d+[eE][+-]?\d+|\d+[eE][+-]?\d+)|\d*\.\d+|\d+)
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_\-.]*)?:(?:[A-Za-z0-9_:%\-]|\.(?=[A-Za-z0-9_:%\-]))*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>\^\^|&&|\|\||!=|<=|>=|[{}()\[\].;,*=<>!+\-/])
    """,
    re.VERBOSE,
)

_ESCAPES = {"t": "\t", "n": "\n", "r": "\r", "b": "\b", "f": "\f", '"': '"', "'": "'", "\\": "\\"}

_AGGREGATES = {"count", "sum", "min", "max", "avg", "sample"}
BUILTINS = {
    "year", "month", "day", "hours", "minutes", "seconds", "lang", "str", "datatype", "bound",
    "isiri", "isuri", "isblank", "isliteral", "isnumeric", "langmatches", "contains", "strstarts",
    "strends", "lcase", "ucase", "strlen", "regex", "abs", "round", "floor", "ceil", "sameterm", "if",
    "coalesce",
}
_UNSUPPORTED = {"union", "minus", "bind", "values", "graph", "having", "construct", "ask", "describe",
                "exists", "not", "from", "in"}


class _Tok:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind: str, text: str, pos: int) -> None:
        self.kind, self.text, self.pos = kind, text, pos

    def __repr__(self) -> str:
        return f"{self.kind}:{self.text}"


def tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise QuerySyntaxError(pos, "a token", text)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", n))
    return toks


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            if nxt in _ESCAPES:
                out.append(_ESCAPES[nxt])
                i += 2
                continue
            if nxt == "u":
                out.append(chr(int(body[i + 2:i + 6], 16)))
                i += 6
                continue
            if nxt == "U":
                out.append(chr(int(body[i + 2:i + 10], 16)))
                i += 10
                continue
        out.append(c)
        i += 1
    return "".join(out)


class _Parser:
    def __init__(self, text: str, prefixes: Optional[dict[str, str]] = None) -> None:
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.prefixes = dict(STANDARD_PREFIXES)
        if prefixes:
            self.prefixes.update(prefixes)
        self.base = ""

    # token helpers

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, expected: str) -> QuerySyntaxError:
        return QuerySyntaxError(self.tok.pos, expected, self.text)

    def advance(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def is_kw(self, *words: str) -> bool:
        return self.tok.kind == "name" and self.tok.text.lower() in words

    def is_punct(self, *symbols: str) -> bool:
        return self.tok.kind == "punct" and self.tok.text in symbols

    def expect_kw(self, word: str) -> None:
        if not self.is_kw(word):
            raise self.error(word.upper())
        self.advance()

    def expect_punct(self, sym: str) -> None:
        if not self.is_punct(sym):
            raise self.error(f"'{sym}'")
        self.advance()

    def reject_unsupported(self) -> None:
        if self.tok.kind == "name" and self.tok.text.lower() in _UNSUPPORTED:
            raise self.error(f"a supported construct ({self.tok.text.upper()} is not supported)")

    # terms

    def iri_text(self, tok: _Tok) -> str:
        if tok.kind == "iri":
            value = tok.text[1:-1]
            if self.base and ":" not in value:
                value = self.base + value
            return value
        prefix, _, local = tok.text.partition(":")
        if prefix not in self.prefixes:
            raise QuerySyntaxError(tok.pos, f"a declared prefix (unknown prefix '{prefix}:')", self.text)
        return self.prefixes[prefix] + re.sub(r"\\(.)", r"\1", local)

    def literal(self) -> Term:
        tok = self.advance()
        if tok.kind == "number":
            if "e" in tok.text.lower():
                return Literal(tok.text, XSD_DOUBLE)
            if "." in tok.text:
                return Literal(tok.text, XSD_DECIMAL)
            return Literal(tok.text, XSD_INTEGER)
        if tok.kind == "name" and tok.text.lower() in ("true", "false"):
            return Literal(tok.text.lower(), XSD_BOOLEAN)
        if tok.kind != "string":
            self.i -= 1
            raise self.error("a literal")
        q = 3 if tok.text[:3] in ('"""', "'''") else 1
        value = _unescape(tok.text[q:-q])
        if self.tok.kind == "lang":
            return Literal(value, lang=self.advance().text[1:])
        if self.is_punct("^^"):
            self.advance()
            if self.tok.kind not in ("iri", "pname"):
                raise self.error("a datatype IRI")
            return Literal(value, self.iri_text(self.advance()))
        return Literal(value)

    def pattern_term(self, position: str):
        tok = self.tok
        if tok.kind == "var":
            self.advance()
            return Var(tok.text[1:])
        if tok.kind in ("iri", "pname"):
            self.advance()
            return IRI(self.iri_text(tok))
        if tok.kind == "bnode":
            if position == "p":
                raise self.error("a predicate")
            self.advance()
            return Var(tok.text)
        if position == "p" and self.is_kw("a"):
            self.advance()
            return IRI(RDF_TYPE)
        if position == "o" and (tok.kind in ("string", "number") or self.is_kw("true", "false")):
            return self.literal()
        if position == "o" and self.is_punct("-", "+") and self.peek().kind == "number":
            sign = self.advance().text
            lit = self.literal()
            return Literal(("-" if sign == "-" else "") + lit.value, lit.datatype)
        if self.is_punct("[", "("):
            raise self.error("a term (blank node property lists and collections are not supported)")
        raise self.error({"s": "a subject", "p": "a predicate", "o": "an object"}[position])

    # query structure

    def parse_query(self) -> SelectQuery:
        self.prologue()
        q = self.select_query(top=True)
        if self.tok.kind != "eof":
            self.reject_unsupported()
            raise self.error("end of query")
        return q

    def prologue(self) -> None:
        while True:
            if self.is_kw("prefix"):
                self.advance()
                tok = self.tok
                if tok.kind != "pname" or not tok.text.endswith(":") or tok.text.count(":") != 1:
                    raise self.error("a prefix name ending in ':'")
                self.advance()
                if self.tok.kind != "iri":
                    raise self.error("an IRI")
                self.prefixes[tok.text[:-1]] = self.advance().text[1:-1]
            elif self.is_kw("base"):
                self.advance()
                if self.tok.kind != "iri":
                    raise self.error("an IRI")
                self.base = self.advance().text[1:-1]
            else:
                return

    def select_query(self, top: bool = False) -> SelectQuery:
        if not self.is_kw("select"):
            self.reject_unsupported()
            raise self.error("SELECT")
        self.advance()
        q = SelectQuery(items=[], where=Group())
        if self.is_kw("distinct", "reduced"):
            q.distinct = self.advance().text.lower() == "distinct"
        if self.is_punct("*"):
            self.advance()
            q.star = True
        else:
            self.select_items(q)
        if self.is_kw("from"):
            self.reject_unsupported()
        if self.is_kw("where"):
            self.advance()
        if not self.is_punct("{"):
            raise self.error("'{'")
        q.where = self.group()
        self.modifiers(q)
        self.validate(q)
        if top:
            q.prefixes = dict(self.prefixes)
        return q

    def select_items(self, q: SelectQuery) -> None:
        names: set[str] = set()
        while True:
            tok = self.tok
            if tok.kind == "var":
                self.advance()
                item = SelectItem(None, tok.text[1:])
            elif self.is_punct("("):
                self.advance()
                expr = self.expression()
                self.expect_kw("as")
                if self.tok.kind != "var":
                    raise self.error("a variable")
                item = SelectItem(expr, self.advance().text[1:])
                self.expect_punct(")")
            elif self.is_kw("where") or self.is_punct("{") or self.is_kw("from"):
                break
            elif tok.kind in ("name", "pname", "iri"):
                expr = self.primary()
                # bare expression column, named after its position
                while self.is_punct("*", "/", "+", "-"):
                    op = self.advance().text
                    expr = BinOp(op, expr, self.unary())
                item = SelectItem(expr, f"callret-{len(q.items)}", explicit_alias=False)
            else:
                raise self.error("a variable or expression")
            if item.var in names:
                raise QuerySyntaxError(tok.pos, f"distinct projection names (?{item.var} repeated)", self.text)
            names.add(item.var)
            q.items.append(item)
        if not q.items:
            raise self.error("a projection")

    def modifiers(self, q: SelectQuery) -> None:
        if self.is_kw("group"):
            self.advance()
            self.expect_kw("by")
            while True:
                cond = self.group_condition()
                if cond is None:
                    break
                q.group_by.append(cond)
            if not q.group_by:
                raise self.error("a grouping condition")
        if self.is_kw("having"):
            self.reject_unsupported()
        if self.is_kw("order"):
            self.advance()
            self.expect_kw("by")
            while True:
                cond = self.order_condition()
                if cond is None:
                    break
                q.order_by.append(cond)
            if not q.order_by:
                raise self.error("an ordering condition")
        for _ in range(2):
            if self.is_kw("limit"):
                self.advance()
                if self.tok.kind != "number" or not self.tok.text.isdigit():
                    raise self.error("a non-negative integer")
                q.limit = int(self.advance().text)
            elif self.is_kw("offset"):
                self.advance()
                if self.tok.kind != "number" or not self.tok.text.isdigit():
                    raise self.error("a non-negative integer")
                q.offset = int(self.advance().text)

    def group_condition(self) -> Optional[GroupCondition]:
        if self.tok.kind == "var":
            return GroupCondition(VarExpr(self.advance().text[1:]))
        if self.is_punct("("):
            self.advance()
            expr = self.expression()
            alias = None
            if self.is_kw("as"):
                self.advance()
                if self.tok.kind != "var":
                    raise self.error("a variable")
                alias = self.advance().text[1:]
            self.expect_punct(")")
            return GroupCondition(expr, alias)
        if self._starts_call():
            return GroupCondition(self.primary())
        return None

    def order_condition(self) -> Optional[OrderCondition]:
        if self.is_kw("asc", "desc"):
            desc = self.advance().text.lower() == "desc"
            if not self.is_punct("("):
                raise self.error("'('")
            return OrderCondition(self.bracketted(), desc)
        if self.tok.kind == "var":
            return OrderCondition(VarExpr(self.advance().text[1:]))
        if self.is_punct("("):
            return OrderCondition(self.bracketted())
        if self._starts_call():
            return OrderCondition(self.primary())
        return None

    def _starts_call(self) -> bool:
        tok = self.tok
        if tok.kind == "name" and tok.text.lower() in ("limit", "offset", "order", "having", "group"):
            return False
        return tok.kind in ("name", "pname", "iri") and self.peek().kind == "punct" and self.peek().text == "("

    def validate(self, q: SelectQuery) -> None:
        if not q.is_aggregate:
            return
        if q.star:
            raise self.error("explicit projection (SELECT * cannot be combined with grouping)")
        grouped = set()
        group_exprs = set()
        for cond in q.group_by:
            if cond.alias:
                grouped.add(cond.alias)
            elif isinstance(cond.expr, VarExpr):
                grouped.add(cond.expr.name)
            group_exprs.add(cond.expr)
        for item in q.items:
            if item.expr is None:
                if item.var not in grouped:
                    raise self.error(f"?{item.var} to be grouped or aggregated")
                continue
            self._check_grouped(item.expr, grouped | {i.var for i in q.items if i.expr is not None}, group_exprs)

    def _check_grouped(self, expr: Expr, grouped: set[str], group_exprs: set) -> None:
        if expr in group_exprs or isinstance(expr, Aggregate):
            return
        if isinstance(expr, VarExpr):
            if expr.name not in grouped:
                raise self.error(f"?{expr.name} to be grouped or aggregated")
            return
        for child in _children(expr):
            self._check_grouped(child, grouped, group_exprs)

    # graph patterns

    def group(self) -> Group:
        self.expect_punct("{")
        if self.is_kw("select"):
            sub = self.select_query()
            self.expect_punct("}")
            return Group([SubQuery(sub)])
        g = Group()
        need_dot = False
        while not self.is_punct("}"):
            tok = self.tok
            if self.is_punct("."):
                self.advance()
                need_dot = False
                continue
            if self.is_kw("filter"):
                self.advance()
                g.elements.append(Filter(self.constraint()))
                need_dot = False
            elif self.is_kw("optional"):
                self.advance()
                if not self.is_punct("{"):
                    raise self.error("'{'")
                g.elements.append(OptionalBlock(self.group()))
                need_dot = False
            elif self.is_kw("service"):
                self.advance()
                silent = False
                if self.is_kw("silent"):
                    self.advance()
                    silent = True
                if self.tok.kind not in ("iri", "pname"):
                    raise self.error("a service IRI")
                iri = self.iri_text(self.advance())
                if not self.is_punct("{"):
                    raise self.error("'{'")
                g.elements.append(ServiceBlock(iri, self.group(), silent))
                need_dot = False
            elif self.is_punct("{"):
                inner = self.group()
                if self.is_kw("union"):
                    self.reject_unsupported()
                if len(inner.elements) == 1 and isinstance(inner.elements[0], SubQuery):
                    g.elements.append(inner.elements[0])
                else:
                    g.elements.append(inner)
                need_dot = False
            elif tok.kind in ("var", "iri", "pname", "bnode"):
                if need_dot:
                    raise self.error("'.'")
                g.elements.extend(self.triples_same_subject())
                need_dot = True
            elif tok.kind == "eof":
                raise self.error("'}'")
            else:
                self.reject_unsupported()
                raise self.error("a triple pattern, FILTER, OPTIONAL, SERVICE or '}'")
        self.advance()
        return g

    def triples_same_subject(self) -> list[TriplePattern]:
        subj = self.pattern_term("s")
        out = []
        while True:
            pred = self.pattern_term("p")
            while True:
                out.append(TriplePattern(subj, pred, self.pattern_term("o")))
                if not self.is_punct(","):
                    break
                self.advance()
            if not self.is_punct(";"):
                break
            while self.is_punct(";"):
                self.advance()
            if self.is_punct(".", "}") or self.is_kw("filter", "optional", "service"):
                break
        return out

    def constraint(self) -> Expr:
        if self.is_punct("("):
            return self.bracketted()
        if self._starts_call():
            return self.primary()
        self.reject_unsupported()
        raise self.error("'(' or a function call after FILTER")

    def bracketted(self) -> Expr:
        self.expect_punct("(")
        expr = self.expression()
        self.expect_punct(")")
        return expr

    # expressions

    def expression(self) -> Expr:
        left = self.conjunction()
        while self.is_punct("||"):
            self.advance()
            left = BinOp("||", left, self.conjunction())
        return left

    def conjunction(self) -> Expr:
        left = self.relational()
        while self.is_punct("&&"):
            self.advance()
            left = BinOp("&&", left, self.relational())
        return left

    def relational(self) -> Expr:
        left = self.additive()
        if self.is_punct("=", "!=", "<", ">", "<=", ">="):
            op = self.advance().text
            return BinOp(op, left, self.additive())
        if self.is_kw("in", "not"):
            self.reject_unsupported()
        return left

    def additive(self) -> Expr:
        left = self.multiplicative()
        while self.is_punct("+", "-"):
            op = self.advance().text
            left = BinOp(op, left, self.multiplicative())
        return left

    def multiplicative(self) -> Expr:
        left = self.unary()
        while self.is_punct("*", "/"):
            op = self.advance().text
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.is_punct("!", "-", "+"):
            op = self.advance().text
            return UnaryOp(op, self.unary())
        return self.primary()

    def args(self) -> tuple[Expr, ...]:
        self.expect_punct("(")
        out = []
        if not self.is_punct(")"):
            out.append(self.expression())
            while self.is_punct(","):
                self.advance()
                out.append(self.expression())
        self.expect_punct(")")
        return tuple(out)

    def primary(self) -> Expr:
        tok = self.tok
        if self.is_punct("("):
            return self.bracketted()
        if tok.kind == "var":
            self.advance()
            return VarExpr(tok.text[1:])
        if tok.kind in ("string", "number") or self.is_kw("true", "false"):
            return ConstExpr(self.literal())
        if tok.kind == "name":
            name = tok.text.lower()
            if name in _AGGREGATES:
                return self.aggregate()
            if name in BUILTINS:
                self.advance()
                if not self.is_punct("("):
                    raise self.error("'('")
                return Call(name, self.args())
            self.reject_unsupported()
            raise self.error(f"a known function (unknown function '{tok.text}')")
        if tok.kind in ("iri", "pname"):
            self.advance()
            iri = self.iri_text(tok)
            if self.is_punct("("):
                if not iri.startswith(XSD):
                    raise QuerySyntaxError(tok.pos, f"a supported function (unknown function <{iri}>)", self.text)
                args = self.args()
                if len(args) != 1:
                    raise QuerySyntaxError(tok.pos, "exactly one argument to a cast", self.text)
                return Call(iri, args)
            return ConstExpr(IRI(iri))
        if tok.kind == "bnode":
            raise self.error("an expression (blank nodes are not allowed in expressions)")
        raise self.error("an expression")

    def aggregate(self) -> Aggregate:
        name = self.advance().text.lower()
        self.expect_punct("(")
        distinct = False
        if self.is_kw("distinct"):
            self.advance()
            distinct = True
        if self.is_punct("*"):
            if name != "count":
                raise self.error("an expression")
            self.advance()
            arg = None
        else:
            arg = self.expression()
            if aggregates_in(arg):
                raise self.error("a non-aggregate expression (aggregates cannot nest)")
        self.expect_punct(")")
        return Aggregate(name, arg, distinct)


def _children(expr: Expr) -> list[Expr]:
    if isinstance(expr, BinOp):
        return [expr.left, expr.right]
    if isinstance(expr, UnaryOp):
        return [expr.arg]
    if isinstance(expr, Call):
        return list(expr.args)
    return []


def parse_query(text: str, prefixes: Optional[dict[str, str]] = None) -> SelectQuery:
    """Parse a SELECT query; raises QuerySyntaxError with the failing offset."""
    return _Parser(text, prefixes).parse_query()


def parse_expression(text: str, prefixes: Optional[dict[str, str]] = None) -> Expr:
    p = _Parser(text, prefixes)
    expr = p.expression()
    if p.tok.kind != "eof":
        raise p.error("end of expression")
    return expr


__all__ = ["QuerySyntaxError", "parse_query", "parse_expression", "tokenize", "expr_vars"]
