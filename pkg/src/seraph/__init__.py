"""Continuous graph queries over property graph streams."""

from .engine import Executor, run_query
from .errors import SeraphError
from .model import EMPTY_GRAPH, PropertyGraph, Table, TimestampedGraph, graph_union, graph_union_all
from .parser import parse_cypher_subset, parse_seraph

__all__ = [
    "EMPTY_GRAPH",
    "Executor",
    "PropertyGraph",
    "SeraphError",
    "Table",
    "TimestampedGraph",
    "graph_union",
    "graph_union_all",
    "parse_cypher_subset",
    "parse_seraph",
    "run_query",
]
__version__ = "0.1.0"
