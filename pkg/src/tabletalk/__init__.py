"""tabletalk: narrate relational data and explain SQL queries in English."""

from .classifier import QueryClass, classify
from .data import Database, RankSpec, Row, follow_join, load_data, select_tuples
from .evaluator import ResultSet, evaluate, random_database
from .narrator import NarrationPlan, Narrative, detect_patterns, fallback_mode, narrate
from .parser import parse_sql, render_sql, resolve_names
from .query_graph import QueryGraph, build, shape
from .rewriter import Motif, detect_motifs, flatten
from .schema import SchemaGraph, emit_dot, load_schema, serialize, validate
from .templates import Clause, instantiate, merge_common, parse_template
from .translator import (
    TranslationResult,
    lexicalize_predicate,
    translate,
    translate_procedural,
)

__version__ = "0.1.0"

__all__ = [
    "Clause",
    "Database",
    "Motif",
    "NarrationPlan",
    "Narrative",
    "QueryClass",
    "QueryGraph",
    "RankSpec",
    "ResultSet",
    "Row",
    "SchemaGraph",
    "TranslationResult",
    "build",
    "classify",
    "detect_motifs",
    "detect_patterns",
    "emit_dot",
    "evaluate",
    "fallback_mode",
    "flatten",
    "follow_join",
    "instantiate",
    "lexicalize_predicate",
    "load_data",
    "load_schema",
    "merge_common",
    "narrate",
    "parse_sql",
    "parse_template",
    "random_database",
    "render_sql",
    "resolve_names",
    "select_tuples",
    "serialize",
    "shape",
    "translate",
    "translate_procedural",
    "validate",
]
