"""Benchmark harness: fixtures, corpus, runs and reports."""

from .corpus import CORPUS_DIR, CorpusQuery, load_corpus
from .fixtures import FixtureSpec, GeneratedFederation, generate_federation, write_fixtures
from .harness import (
    BenchConfig, QueryResult, Report, run_benchmark, source_selection_report, summarize_counts,
)
from .report import emit_report, report_from_csv, report_from_json, report_to_csv, report_to_json
from .stats import geometric_mean

__all__ = [
    "BenchConfig", "CORPUS_DIR", "CorpusQuery", "FixtureSpec", "GeneratedFederation",
    "QueryResult", "Report", "emit_report", "generate_federation", "geometric_mean",
    "load_corpus", "report_from_csv", "report_from_json", "report_to_csv", "report_to_json",
    "run_benchmark", "source_selection_report", "summarize_counts", "write_fixtures",
]
