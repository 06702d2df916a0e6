"""FILTER and projection expression evaluation over RDF terms.

Evaluation raises ExprError for type errors and unbound variables; FILTER
treats an error as false. ``&&`` and ``||`` follow the three-valued rules, so
``false && error`` is false and ``true || error`` is true.
"""

from __future__ import annotations

import math
import re
from datetime import datetime
from decimal import Decimal, DivisionByZero, InvalidOperation
from typing import Callable, Optional

from owa.rdf.terms import (
    IRI, LITERAL_KIND, RDF_LANGSTRING, V_BOOLEAN, V_LANG, V_NUMERIC, V_STRING, V_TEMPORAL, XSD, XSD_BOOLEAN,
    XSD_DATE, XSD_DATETIME, XSD_DECIMAL, XSD_DOUBLE, XSD_FLOAT, XSD_INTEGER, XSD_STRING, Literal, Term,
    order_key, term_value,
)
from owa.sparql.ast import Aggregate, BinOp, Call, ConstExpr, Expr, UnaryOp, VarExpr


class ExprError(Exception):
    pass


TRUE = Literal(True)
FALSE = Literal(False)

_INT_RE = re.compile(r"^\s*[+-]?\d+\s*$")
_DEC_RE = re.compile(r"^\s*[+-]?(\d+\.\d*|\.\d+|\d+)\s*$")
_DBL_RE = re.compile(r"^\s*[+-]?((\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?|INF|NaN)\s*$")


class Context:
    """Variable lookup plus, inside a group, precomputed group keys and aggregates."""

    __slots__ = ("get", "group_values", "aggregates")

    def __init__(self, get: Callable[[str], Optional[Term]], group_values: Optional[dict] = None,
                 aggregates: Optional[dict] = None) -> None:
        self.get = get
        self.group_values = group_values
        self.aggregates = aggregates


def context_for(row: dict[str, Term]) -> Context:
    return Context(row.get)


def _bool(value: bool) -> Term:
    return TRUE if value else FALSE


def ebv(term: Term) -> bool:
    """Effective boolean value."""
    kind, value = term_value(term)
    if kind == V_BOOLEAN:
        return value
    if kind == V_NUMERIC:
        return not (value == 0 or (isinstance(value, float) and math.isnan(value)))
    if kind in (V_STRING, V_LANG) and term.kind == LITERAL_KIND:
        return bool(term.value)
    raise ExprError(f"no boolean value for {term}")


def _coerce_numeric_text(text: str):
    if _INT_RE.match(text):
        return int(text)
    if _DEC_RE.match(text):
        return Decimal(text.strip())
    if _DBL_RE.match(text):
        return float(text)
    return None


def _comparable(a: Term, b: Term):
    """Value-space pair for comparison, or raise ExprError.

    A plain literal that looks like a number compares numerically against a
    number, so ``year(?d) = "1987"`` behaves as the query author intended.
    """
    ka, va = term_value(a)
    kb, vb = term_value(b)
    if ka == kb and ka in (V_NUMERIC, V_TEMPORAL, V_BOOLEAN, V_STRING):
        return va, vb
    if ka == V_NUMERIC and kb == V_STRING:
        num = _coerce_numeric_text(vb)
        if num is not None:
            return va, num
    if kb == V_NUMERIC and ka == V_STRING:
        num = _coerce_numeric_text(va)
        if num is not None:
            return num, vb
    raise ExprError(f"cannot compare {a} and {b}")


def terms_equal(a: Term, b: Term) -> bool:
    try:
        va, vb = _comparable(a, b)
        return va == vb
    except ExprError:
        pass
    if a == b:
        return True
    if a.kind == LITERAL_KIND and b.kind == LITERAL_KIND:
        ka, _ = term_value(a)
        kb, _ = term_value(b)
        if ka == kb == V_LANG:
            return False
        # distinct literals whose values cannot be compared
        raise ExprError(f"cannot compare {a} and {b}")
    return False


def compare(op: str, a: Term, b: Term) -> bool:
    if op == "=":
        return terms_equal(a, b)
    if op == "!=":
        return not terms_equal(a, b)
    va, vb = _comparable(a, b)
    if op == "<":
        return va < vb
    if op == ">":
        return va > vb
    if op == "<=":
        return va <= vb
    if op == ">=":
        return va >= vb
    raise ExprError(op)


def _number(term: Term):
    kind, value = term_value(term)
    if kind != V_NUMERIC:
        raise ExprError(f"{term} is not numeric")
    return value


def number_term(value) -> Term:
    if isinstance(value, bool):
        value = int(value)
    if isinstance(value, int):
        return Literal(value)
    if isinstance(value, Decimal):
        return Literal(value)
    return Literal(float(value))


def _promote(x, y):
    if isinstance(x, float) or isinstance(y, float):
        return float(x), float(y)
    if isinstance(x, Decimal) or isinstance(y, Decimal):
        return Decimal(x), Decimal(y)
    return x, y


def arithmetic(op: str, a: Term, b: Term) -> Term:
    x, y = _promote(_number(a), _number(b))
    if op == "+":
        return number_term(x + y)
    if op == "-":
        return number_term(x - y)
    if op == "*":
        return number_term(x * y)
    if op == "/":
        if isinstance(x, float):
            if y == 0:
                if x == 0 or math.isnan(x):
                    return number_term(math.nan)
                return number_term(math.copysign(math.inf, x) * math.copysign(1.0, y))
            return number_term(x / y)
        if y == 0:
            raise ExprError("division by zero")
        try:
            return number_term(Decimal(x) / Decimal(y))
        except (DivisionByZero, InvalidOperation) as exc:
            raise ExprError(str(exc)) from None
    raise ExprError(op)


def _string_arg(term: Term) -> Term:
    if term.kind != LITERAL_KIND or (term.datatype is not None):
        raise ExprError(f"{term} is not a string")
    return term


def _temporal(term: Term) -> datetime:
    kind, value = term_value(term)
    if kind != V_TEMPORAL:
        raise ExprError(f"{term} is not a date or dateTime")
    return value


def _lang_matches(tag: str, rng: str) -> bool:
    tag, rng = tag.lower(), rng.lower()
    if rng == "*":
        return bool(tag)
    return tag == rng or tag.startswith(rng + "-")


def cast(datatype: str, term: Term) -> Term:
    if term.kind != LITERAL_KIND:
        if datatype == XSD_STRING and term.is_iri:
            return Literal(term.value)
        raise ExprError(f"cannot cast {term}")
    kind, value = term_value(term)
    if kind == V_LANG:
        raise ExprError("cannot cast a language-tagged literal")
    text = term.value
    if datatype == XSD_STRING:
        return Literal(text)
    if datatype in (XSD_DOUBLE, XSD_FLOAT):
        if kind == V_NUMERIC:
            return Literal(float(value))
        if kind == V_BOOLEAN:
            return Literal(1.0 if value else 0.0)
        if kind == V_STRING and _DBL_RE.match(text):
            return Literal(float(text))
        raise ExprError(f"cannot cast {term} to double")
    if datatype == XSD_INTEGER:
        if kind == V_NUMERIC:
            if isinstance(value, float) and not math.isfinite(value):
                raise ExprError("cannot cast non-finite value to integer")
            return Literal(int(value))
        if kind == V_BOOLEAN:
            return Literal(int(value))
        if kind == V_STRING and _INT_RE.match(text):
            return Literal(int(text))
        raise ExprError(f"cannot cast {term} to integer")
    if datatype == XSD_DECIMAL:
        if kind == V_NUMERIC:
            if isinstance(value, float):
                if not math.isfinite(value):
                    raise ExprError("cannot cast non-finite value to decimal")
                return Literal(Decimal(repr(value)))
            return Literal(Decimal(value))
        if kind == V_BOOLEAN:
            return Literal(Decimal(int(value)))
        if kind == V_STRING and _DEC_RE.match(text):
            return Literal(Decimal(text.strip()))
        raise ExprError(f"cannot cast {term} to decimal")
    if datatype == XSD_BOOLEAN:
        if kind == V_BOOLEAN:
            return _bool(value)
        if kind == V_NUMERIC:
            return _bool(not (value == 0 or (isinstance(value, float) and math.isnan(value))))
        if kind == V_STRING and text.strip() in ("true", "false", "1", "0"):
            return _bool(text.strip() in ("true", "1"))
        raise ExprError(f"cannot cast {term} to boolean")
    if datatype == XSD_DATETIME:
        if term.datatype == XSD_DATETIME and kind == V_TEMPORAL:
            return term
        if term.datatype == XSD_DATE and kind == V_TEMPORAL:
            return Literal(text.strip()[:10] + "T00:00:00", XSD_DATETIME)
        if kind == V_STRING:
            candidate = Literal(text.strip(), XSD_DATETIME)
            if term_value(candidate)[0] == V_TEMPORAL:
                return candidate
        raise ExprError(f"cannot cast {term} to dateTime")
    if datatype == XSD_DATE:
        if term.datatype in (XSD_DATE, XSD_DATETIME) and kind == V_TEMPORAL:
            return Literal(text.strip()[:10], XSD_DATE)
        if kind == V_STRING:
            candidate = Literal(text.strip(), XSD_DATE)
            if term_value(candidate)[0] == V_TEMPORAL:
                return candidate
        raise ExprError(f"cannot cast {term} to date")
    if datatype.startswith(XSD):
        return Literal(text, datatype)
    raise ExprError(f"unknown cast {datatype}")


def evaluate(expr: Expr, ctx: Context) -> Term:
    gv = ctx.group_values
    if gv is not None and expr in gv:
        value = gv[expr]
        if value is None:
            raise ExprError("group key is unbound")
        return value
    if isinstance(expr, VarExpr):
        value = ctx.get(expr.name)
        if value is None:
            raise ExprError(f"?{expr.name} is unbound")
        return value
    if isinstance(expr, ConstExpr):
        return expr.term
    if isinstance(expr, BinOp):
        op = expr.op
        if op == "&&" or op == "||":
            return _logical(op, expr, ctx)
        left = evaluate(expr.left, ctx)
        right = evaluate(expr.right, ctx)
        if op in ("+", "-", "*", "/"):
            return arithmetic(op, left, right)
        return _bool(compare(op, left, right))
    if isinstance(expr, UnaryOp):
        value = evaluate(expr.arg, ctx)
        if expr.op == "!":
            return _bool(not ebv(value))
        num = _number(value)
        return number_term(-num if expr.op == "-" else num)
    if isinstance(expr, Aggregate):
        aggs = ctx.aggregates
        if aggs is None or expr not in aggs:
            raise ExprError("aggregate outside of a group")
        value = aggs[expr]
        if value is None:
            raise ExprError("aggregate error")
        return value
    if isinstance(expr, Call):
        return _call(expr, ctx)
    raise ExprError(f"unknown expression {expr!r}")


def _logical(op: str, expr: BinOp, ctx: Context) -> Term:
    results = []
    for side in (expr.left, expr.right):
        try:
            results.append(ebv(evaluate(side, ctx)))
        except ExprError:
            results.append(None)
    a, b = results
    if op == "&&":
        if a is False or b is False:
            return FALSE
        if a is None or b is None:
            raise ExprError("error in &&")
        return TRUE
    if a is True or b is True:
        return TRUE
    if a is None or b is None:
        raise ExprError("error in ||")
    return FALSE


def _call(expr: Call, ctx: Context) -> Term:
    name = expr.name
    args = expr.args
    if name == "bound":
        if len(args) != 1 or not isinstance(args[0], VarExpr):
            raise ExprError("bound() takes one variable")
        return _bool(ctx.get(args[0].name) is not None)
    if name == "if":
        if len(args) != 3:
            raise ExprError("if() takes three arguments")
        return evaluate(args[1] if ebv(evaluate(args[0], ctx)) else args[2], ctx)
    if name == "coalesce":
        for a in args:
            try:
                return evaluate(a, ctx)
            except ExprError:
                continue
        raise ExprError("coalesce() found no value")
    vals = [evaluate(a, ctx) for a in args]
    if name.startswith("http"):
        return cast(name, vals[0])
    return _builtin(name, vals)


def _arity(vals: list, *allowed: int) -> None:
    if len(vals) not in allowed:
        raise ExprError("wrong number of arguments")


def _builtin(name: str, vals: list[Term]) -> Term:
    if name in ("year", "month", "day", "hours", "minutes"):
        _arity(vals, 1)
        return Literal(getattr(_temporal(vals[0]), name.rstrip("s") if name != "minutes" else "minute"))
    if name == "seconds":
        _arity(vals, 1)
        t = _temporal(vals[0])
        return Literal(Decimal(t.second) + Decimal(t.microsecond) / Decimal(1000000))
    if name == "lang":
        _arity(vals, 1)
        if vals[0].kind != LITERAL_KIND:
            raise ExprError("lang() of a non-literal")
        return Literal(vals[0].lang or "")
    if name == "str":
        _arity(vals, 1)
        if vals[0].is_blank:
            raise ExprError("str() of a blank node")
        return Literal(vals[0].value)
    if name == "datatype":
        _arity(vals, 1)
        t = vals[0]
        if t.kind != LITERAL_KIND:
            raise ExprError("datatype() of a non-literal")
        return IRI(t.datatype or (RDF_LANGSTRING if t.lang else XSD_STRING))
    if name in ("isiri", "isuri"):
        _arity(vals, 1)
        return _bool(vals[0].is_iri)
    if name == "isblank":
        _arity(vals, 1)
        return _bool(vals[0].is_blank)
    if name == "isliteral":
        _arity(vals, 1)
        return _bool(vals[0].is_literal)
    if name == "isnumeric":
        _arity(vals, 1)
        return _bool(term_value(vals[0])[0] == V_NUMERIC)
    if name == "sameterm":
        _arity(vals, 2)
        return _bool(vals[0] == vals[1])
    if name == "langmatches":
        _arity(vals, 2)
        return _bool(_lang_matches(_string_arg(vals[0]).value, _string_arg(vals[1]).value))
    if name in ("contains", "strstarts", "strends"):
        _arity(vals, 2)
        a, b = vals
        if a.kind != LITERAL_KIND or b.kind != LITERAL_KIND or a.datatype or b.datatype:
            raise ExprError(f"{name}() needs string arguments")
        if b.lang and a.lang != b.lang:
            raise ExprError("incompatible language tags")
        fn = {"contains": str.__contains__, "strstarts": str.startswith, "strends": str.endswith}[name]
        return _bool(fn(a.value, b.value))
    if name in ("lcase", "ucase"):
        _arity(vals, 1)
        t = vals[0]
        if t.kind != LITERAL_KIND or t.datatype:
            raise ExprError(f"{name}() needs a string")
        text = t.value.lower() if name == "lcase" else t.value.upper()
        return Literal(text, lang=t.lang) if t.lang else Literal(text)
    if name == "strlen":
        _arity(vals, 1)
        t = vals[0]
        if t.kind != LITERAL_KIND or t.datatype:
            raise ExprError("strlen() needs a string")
        return Literal(len(t.value))
    if name == "regex":
        _arity(vals, 2, 3)
        text = vals[0]
        if text.kind != LITERAL_KIND or text.datatype:
            raise ExprError("regex() needs a string")
        flags = 0
        if len(vals) == 3:
            for ch in _string_arg(vals[2]).value:
                flags |= {"i": re.I, "s": re.S, "m": re.M, "x": re.X}.get(ch, 0)
        try:
            return _bool(re.search(_string_arg(vals[1]).value, text.value, flags) is not None)
        except re.error as exc:
            raise ExprError(f"bad pattern: {exc}") from None
    if name in ("abs", "round", "floor", "ceil"):
        _arity(vals, 1)
        x = _number(vals[0])
        if name == "abs":
            return number_term(abs(x))
        if isinstance(x, float) and not math.isfinite(x):
            return number_term(x)
        if name == "floor":
            r = math.floor(x)
        elif name == "ceil":
            r = math.ceil(x)
        else:
            r = math.floor(x + (Decimal("0.5") if isinstance(x, Decimal) else 0.5))
        return number_term(float(r) if isinstance(x, float) else (Decimal(r) if isinstance(x, Decimal) else r))
    raise ExprError(f"unknown function {name}")


def filter_passes(expr: Expr, ctx: Context) -> bool:
    try:
        return ebv(evaluate(expr, ctx))
    except ExprError:
        return False


def try_evaluate(expr: Expr, ctx: Context) -> Optional[Term]:
    try:
        return evaluate(expr, ctx)
    except ExprError:
        return None


def aggregate_values(agg: Aggregate, values: list[Optional[Term]], n_rows: int) -> Optional[Term]:
    """Fold one aggregate over the per-row argument values (None marks an error/unbound).

    Returns None when the aggregate itself is an error.
    """
    name = agg.name
    if agg.arg is None:
        return Literal(n_rows)
    present = [v for v in values if v is not None]
    if agg.distinct:
        seen = set()
        unique = []
        for v in present:
            if v not in seen:
                seen.add(v)
                unique.append(v)
        present = unique
    if name == "count":
        return Literal(len(present))
    if name == "sample":
        return present[0] if present else None
    if name in ("sum", "avg"):
        total = 0
        try:
            for v in present:
                a, b = _promote(total, _number(v))
                total = a + b
        except ExprError:
            return None
        if name == "sum":
            return number_term(total)
        if not present:
            return Literal(0)
        if isinstance(total, float):
            return number_term(total / len(present))
        return number_term(Decimal(total) / Decimal(len(present)))
    if name in ("min", "max"):
        if not present:
            return None
        pick = min if name == "min" else max
        return pick(present, key=order_key)
    return None


__all__ = [
    "Context", "ExprError", "aggregate_values", "cast", "compare", "context_for", "ebv", "evaluate",
    "filter_passes", "terms_equal", "try_evaluate",
]
