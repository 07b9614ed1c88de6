"""Command line entry point: ``fedmesh <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import signal
import sys
import threading
from pathlib import Path

from . import __version__

log = logging.getLogger("fedmesh")


def _read_query(args) -> str:
    if args.query == "-":
        return sys.stdin.read()
    return Path(args.query).read_text(encoding="utf-8")


def _print_results(results, out=None):
    from .sparql.results import results_to_dict
    out = out or sys.stdout
    json.dump(results_to_dict(results), out, indent=2)
    out.write("\n")


def cmd_load(args) -> int:
    from .rdf.ntriples import NTriplesError, load_ntriples
    total = 0
    for path in args.files:
        try:
            n = len(load_ntriples([path]))
        except NTriplesError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            return 1
        print(f"{path}: {n} triples")
        total += n
    if len(args.files) > 1:
        print(f"total: {total} triples")
    return 0


def cmd_query(args) -> int:
    from .rdf.ntriples import load_ntriples
    from .sparql import evaluate, parse_query
    store = load_ntriples(args.store)
    _print_results(evaluate(parse_query(_read_query(args)), store))
    return 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve
    config = ServiceConfig.load(args.config)
    if args.port is not None:
        config.port = args.port
    if args.host is not None:
        config.host = args.host
    handle = serve(config)
    stop = threading.Event()

    def on_signal(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, on_signal)
    signal.signal(signal.SIGTERM, on_signal)
    print(f"listening on http://{handle.host}:{handle.port}", flush=True)
    stop.wait()
    log.info("shutting down")
    handle.shutdown()
    return 0


def cmd_mediate(args) -> int:
    from .federation import load_federation
    from .mediator import MediationError, Mediator, MediatorOptions
    opts = MediatorOptions(caching=not args.no_cache, exclusive_groups=not args.no_groups,
                           parallelism=args.parallel, skip_unreachable=args.skip_unreachable)
    federation = load_federation(args.federation, pool_size=args.parallel)
    status = 0
    try:
        with Mediator(federation, options=opts) as mediator:
            try:
                results, trace = mediator.query(_read_query(args))
                _print_results(results)
            except MediationError as exc:
                print(f"error: {exc}", file=sys.stderr)
                trace, status = exc.trace, 2
    finally:
        federation.close()
    if trace is not None:
        text = json.dumps(trace.to_dict(), indent=2) + "\n"
        if args.trace:
            Path(args.trace).write_text(text, encoding="utf-8")
        else:
            sys.stderr.write(text)
    return status


def cmd_bench(args) -> int:
    from .bench import BenchConfig, emit_report, run_benchmark
    from .bench.report import report_to_markdown
    config = BenchConfig.load(args.config)
    report = run_benchmark(config)
    for fmt, path in config.outputs.items():
        emit_report(report, fmt, path)
        log.info("wrote %s", path)
    if not config.outputs:
        print(report_to_markdown(report))
    problems = report.problems()
    for p in problems:
        print(f"warning: {p}", file=sys.stderr)
    return 1 if problems else 0


def cmd_gen_fixtures(args) -> int:
    from .bench import CORPUS_DIR, FixtureSpec, generate_federation, load_corpus, write_fixtures
    from .bench.harness import HYBRID_JITTER_MS, HYBRID_LATENCY_MS, HYBRID_MEMBERS
    from .rdf.ntriples import load_ntriples
    from .sparql import evaluate

    spec = FixtureSpec(seed=args.seed, members=args.members, min_triples=args.min_triples,
                       max_triples=args.max_triples, overlap=args.overlap)
    out = Path(args.out)
    gen = generate_federation(spec)
    write_fixtures(gen, out, port=args.port)
    corpus_out = out / "corpus"
    corpus_out.mkdir(exist_ok=True)
    for f in CORPUS_DIR.iterdir():
        if f.suffix in (".rq", ".json"):
            shutil.copy(f, corpus_out / f.name)

    # expected answers from the files as written, i.e. with document-scoped blank nodes
    merged = load_ntriples(out / "data" / f"{n}.nt" for n in gen.names)
    expected = {}
    for q in load_corpus(corpus_out):
        res = evaluate(q.query, merged)
        expected[q.id] = {"rows": len(res.rows), "distinct_rows": len(res.distinct_rows())}
    manifest = json.loads((out / "manifest.json").read_text())
    manifest["expected_cardinality"] = expected
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    bench = {
        "federation": "federation.json",
        "corpus": ["corpus"],
        "warmup_runs": 5,
        "measured_runs": 5,
        "caching": "both",
        "scenario": ["local", "hybrid"],
        "hybrid": {m: {"latency_ms": HYBRID_LATENCY_MS, "jitter_ms": HYBRID_JITTER_MS}
                   for m in HYBRID_MEMBERS if m in gen.names},
        "parallelism": 16,
        "output": {"json": "report.json", "csv": "report.csv", "markdown": "report.md"},
    }
    (out / "bench.json").write_text(json.dumps(bench, indent=2) + "\n")
    counts = gen.triple_counts()
    print(f"wrote {len(gen.names)} members ({sum(counts.values())} triples) to {out}")
    return 0


def cmd_analyze(args) -> int:
    from .bench import load_corpus, source_selection_report
    from .federation import load_federation
    federation = load_federation(args.federation)
    try:
        stats = source_selection_report(load_corpus(args.corpus), federation)
    finally:
        federation.close()
    if args.format == "json":
        print(json.dumps(stats, indent=2))
        return 0
    print("| Query | #Patterns | Min | Max | Avg |")
    print("|---|---|---|---|---|")
    for q, st in stats.items():
        if st.get("error"):
            print(f"| {q} | error | - | - | - |")
            continue
        print(f"| {q} | {st['pattern_count']} | {st['min']} | {st['max']} | {st['avg']:.2f} |")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fedmesh", description="Federated SPARQL query mediation")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("load", help="validate N-Triples files and report triple counts")
    s.add_argument("files", nargs="+")
    s.set_defaults(func=cmd_load)

    s = sub.add_parser("query", help="evaluate a query over local N-Triples files")
    s.add_argument("--store", nargs="+", required=True, metavar="FILE")
    s.add_argument("--query", required=True, help="query file, or - for stdin")
    s.set_defaults(func=cmd_query)

    s = sub.add_parser("serve", help="run the SPARQL endpoint service")
    s.add_argument("--config", required=True)
    s.add_argument("--port", type=int, default=None, help="override the configured port")
    s.add_argument("--host", default=None)
    s.set_defaults(func=cmd_serve)

    s = sub.add_parser("mediate", help="answer a query over a federation")
    s.add_argument("--federation", required=True)
    s.add_argument("--query", required=True, help="query file, or - for stdin")
    s.add_argument("--no-cache", action="store_true", help="disable the source selection cache")
    s.add_argument("--no-groups", action="store_true", help="disable exclusive groups")
    s.add_argument("--parallel", type=int, default=16, help="bound on concurrent requests")
    s.add_argument("--skip-unreachable", action="store_true")
    s.add_argument("--trace", default=None, help="write the execution trace here")
    s.set_defaults(func=cmd_mediate)

    s = sub.add_parser("bench", help="run the benchmark described by a config file")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("gen-fixtures", help="generate a synthetic federation")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--members", type=int, default=29)
    s.add_argument("--out", required=True)
    s.add_argument("--min-triples", type=int, default=5000)
    s.add_argument("--max-triples", type=int, default=50000)
    s.add_argument("--overlap", type=float, default=0.0,
                   help="fraction of each member copied into its neighbour")
    s.add_argument("--port", type=int, default=8890, help="port used in the generated service config")
    s.set_defaults(func=cmd_gen_fixtures)

    s = sub.add_parser("analyze", help="source selection statistics per query")
    s.add_argument("--federation", required=True)
    s.add_argument("--corpus", nargs="+", required=True)
    s.add_argument("--format", choices=("markdown", "json"), default="markdown")
    s.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"fedmesh: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
