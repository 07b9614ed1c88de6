from .ast import BGP, BinOp, Call, Count, Filter, Join, LeftJoin, Not, OrderCondition, Query, Union_
from .evaluate import SolutionSeq, apply_modifiers, evaluate, evaluate_pattern
from .expressions import ExprError, holds, order_key
from .parser import SparqlSyntaxError, UnsupportedFeature, parse_query
from .results import parse_results, serialize_results
from .writer import query_to_sparql

__all__ = [
    "BGP", "BinOp", "Call", "Count", "ExprError", "Filter", "Join", "LeftJoin", "Not",
    "OrderCondition", "Query", "SolutionSeq", "SparqlSyntaxError", "Union_",
    "UnsupportedFeature", "apply_modifiers", "evaluate", "evaluate_pattern", "holds",
    "order_key", "parse_query", "parse_results", "query_to_sparql", "serialize_results",
]
