"""Report serialization: json, csv and markdown."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Union

from .harness import QueryResult, Report

CSV_COLUMNS = [
    "query", "scenario", "caching", "geomean_ms", "times_ms", "requests", "delayed_requests",
    "ask_count", "cold_ask_count", "savings", "cardinality", "per_endpoint", "error",
]
FORMATS = ("json", "csv", "markdown")


def report_to_json(report: Report) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def report_from_json(text: str) -> Report:
    return Report.from_dict(json.loads(text))


def _opt(v):
    return "" if v is None else v


def report_to_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for e in report.entries:
        w.writerow([
            e.query, e.scenario, e.caching, _opt(e.geomean_ms),
            ";".join(repr(t) for t in e.times_ms),
            e.requests, e.delayed_requests, e.ask_count, e.cold_ask_count, e.savings,
            _opt(e.cardinality),
            ";".join(f"{k}={v}" for k, v in sorted(e.per_endpoint.items())),
            _opt(e.error),
        ])
    return buf.getvalue()


def report_from_csv(text: str) -> Report:
    """Rebuild the per-query entries (source-selection stats are not in the csv)."""
    entries = []
    for row in csv.DictReader(io.StringIO(text)):
        per = {}
        if row["per_endpoint"]:
            for item in row["per_endpoint"].split(";"):
                k, _, v = item.rpartition("=")
                per[k] = int(v)
        entries.append(QueryResult(
            query=row["query"], scenario=row["scenario"], caching=row["caching"],
            times_ms=[float(t) for t in row["times_ms"].split(";") if t],
            geomean_ms=float(row["geomean_ms"]) if row["geomean_ms"] else None,
            requests=int(row["requests"]), delayed_requests=int(row["delayed_requests"]),
            per_endpoint=per, ask_count=int(row["ask_count"]),
            cold_ask_count=int(row["cold_ask_count"]), savings=int(row["savings"]),
            cardinality=int(row["cardinality"]) if row["cardinality"] else None,
            error=row["error"] or None,
        ))
    return Report(entries)


def _ms(v) -> str:
    return "-" if v is None else f"{v:.3f}"


def report_to_markdown(report: Report) -> str:
    scenarios = list(dict.fromkeys(e.scenario for e in report.entries)) or ["local"]
    cachings = {e.caching for e in report.entries}
    timed = "on" if "on" in cachings or not cachings else sorted(cachings)[0]
    lines = ["# Benchmark report", ""]

    lines += ["## Query evaluation", ""]
    head = ["Query"] + [f"{s} (ms)" for s in scenarios] + ["#Req", "#Req delayed", "Results"]
    lines += ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for q in report.queries():
        row = [q]
        last = None
        for s in scenarios:
            e = report.find(q, s, timed)
            row.append(_ms(e.geomean_ms) if e and not e.error else "error" if e else "-")
            last = e or last
        hybrid = report.find(q, "hybrid", timed) or last
        row += [str(last.requests) if last else "-",
                str(hybrid.delayed_requests) if hybrid else "-",
                str(last.cardinality) if last and last.cardinality is not None else "-"]
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")

    if {"on", "off"} <= cachings:
        lines += ["## Source selection cache", ""]
        for s in scenarios:
            lines += [f"Scenario: {s}", "",
                      "| Query | No caching (ms) | Caching (ms) | #Savings |", "|---|---|---|---|"]
            for q in report.queries():
                off, on = report.find(q, s, "off"), report.find(q, s, "on")
                lines.append(f"| {q} | {_ms(off.geomean_ms if off else None)} | "
                             f"{_ms(on.geomean_ms if on else None)} | {on.savings if on else '-'} |")
            lines.append("")

    lines += ["## Source selection", "",
              "| Query | #Patterns | Min | Max | Avg |", "|---|---|---|---|---|"]
    for q, st in report.source_selection.items():
        if st.get("error"):
            lines.append(f"| {q} | error | - | - | - |")
            continue
        lines.append(f"| {q} | {st['pattern_count']} | {st['min']} | {st['max']} | {st['avg']:.2f} |")
    lines.append("")
    return "\n".join(lines)


_RENDER = {"json": report_to_json, "csv": report_to_csv, "markdown": report_to_markdown}


def emit_report(report: Report, fmt: str, path: Union[str, Path]) -> Path:
    if fmt not in _RENDER:
        raise ValueError(f"unknown report format {fmt!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_RENDER[fmt](report), encoding="utf-8")
    return path
