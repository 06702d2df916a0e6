"""SPARQL subset: parser, expression evaluator and query engine."""

from owa.sparql.engine import (
    Engine, ResultTable, ServiceRegistry, UnregisteredService, evaluate, explain, render_value, results_equal,
)
from owa.sparql.expressions import ExprError
from owa.sparql.parser import QuerySyntaxError, parse_query

__all__ = [
    "Engine", "ExprError", "QuerySyntaxError", "ResultTable", "ServiceRegistry", "UnregisteredService",
    "evaluate", "explain", "parse_query", "render_value", "results_equal",
]
