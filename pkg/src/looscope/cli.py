"""Command line entry point: compute, serve, bench.

Exit codes: 0 ok, 2 I/O problems, 3 input validation, 4 internal errors.
Logs go to stderr; results only to the output file (or stdout with "-").
"""

from __future__ import annotations

import argparse
import json
import logging
import socket
import sys

from .bench import bench_dataset, write_csv, write_json
from .config import AnalysisConfig
from .errors import DataError
from .ingest import parse_dataset, sniff_format
from .pipeline import analyze_all, document_bytes, result_document
from .service import build_session, create_app, session_from_document

log = logging.getLogger("looscope")

EXIT_OK = 0
EXIT_IO = 2
EXIT_VALIDATION = 3
EXIT_INTERNAL = 4


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--workers", type=int, default=0,
                        help="worker processes; 0 = hardware concurrency")
    parser.add_argument("--iqr-factor", type=float, default=1.5,
                        help="fence multiplier on the interquartile range")
    parser.add_argument("--bin-min", type=int, default=50)
    parser.add_argument("--bin-max", type=int, default=250)
    parser.add_argument("--rank-agg", choices=["max", "sum"], default="max",
                        help="fold for overall instance scores")
    parser.add_argument("--top-k", type=int, default=5,
                        help="impact list length per timestep")


def _config_from_args(args: argparse.Namespace) -> AnalysisConfig:
    return AnalysisConfig(
        iqr_factor=args.iqr_factor,
        bin_min=args.bin_min,
        bin_max=args.bin_max,
        workers=args.workers,
        rank_agg=args.rank_agg,
        top_k=args.top_k,
    )


def _load_dataset(path: str, format: str):
    with open(path, "rb") as fh:
        raw = fh.read()
    fmt = sniff_format(raw) if format == "auto" else format
    return parse_dataset(raw, fmt)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="looscope")
    sub = parser.add_subparsers(dest="command", required=True)

    p_compute = sub.add_parser("compute", help="analyze a dataset to a result file")
    p_compute.add_argument("--input", required=True)
    p_compute.add_argument("--output", required=True, help="result path, - for stdout")
    p_compute.add_argument("--format", choices=["auto", "long_csv", "wide_json"],
                           default="auto")
    p_compute.add_argument("--timings", action="store_true",
                           help="embed wall/stage timings in the result")
    _add_config_flags(p_compute)

    p_serve = sub.add_parser("serve", help="serve results over HTTP")
    p_serve.add_argument("--input", help="dataset to compute then serve")
    p_serve.add_argument("--results", help="precomputed result file to serve")
    p_serve.add_argument("--format", choices=["auto", "long_csv", "wide_json"],
                         default="auto")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    _add_config_flags(p_serve)

    p_bench = sub.add_parser("bench", help="timing study on a dataset")
    p_bench.add_argument("--input", required=True)
    p_bench.add_argument("--format", choices=["auto", "long_csv", "wide_json"],
                         default="auto")
    p_bench.add_argument("--worker-counts", default="1",
                         help="comma separated, e.g. 1,2,4")
    p_bench.add_argument("--repeats", type=int, default=30)
    p_bench.add_argument("--output-prefix", required=True,
                         help="writes <prefix>.csv and <prefix>.json")
    _add_config_flags(p_bench)
    return parser


def cmd_compute(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    dataset, report = _load_dataset(args.input, args.format)
    log.info("parsed %d instances x %d timesteps (%d rows dropped)",
             len(dataset.instances), len(dataset.timesteps), report.rows_dropped)
    log.info("workers resolved to %d", config.resolved_workers())
    run = analyze_all(dataset, config, collect_timing=args.timings)
    doc = result_document(dataset, config, run)
    payload = document_bytes(doc) + b"\n"
    if args.output == "-":
        sys.stdout.buffer.write(payload)
    else:
        with open(args.output, "wb") as fh:
            fh.write(payload)
    log.info("wrote %s", args.output)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    config = _config_from_args(args)
    if not args.input and not args.results:
        raise DataError("serve needs --input and/or --results")

    dataset = None
    if args.input:
        dataset, _ = _load_dataset(args.input, args.format)
    if args.results:
        with open(args.results, "rb") as fh:
            document = json.loads(fh.read())
        session = session_from_document(document, dataset)
    else:
        log.info("computing results for %s before serving", args.input)
        session = build_session(dataset, config)

    # surface port collisions as a clean exit instead of a server stack trace
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((args.host, args.port))
    finally:
        probe.close()

    app = create_app(session)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    dataset, _ = _load_dataset(args.input, args.format)
    try:
        worker_counts = [int(w) for w in args.worker_counts.split(",") if w.strip()]
    except ValueError:
        raise DataError(f"bad --worker-counts {args.worker_counts!r}")
    if not worker_counts:
        raise DataError("--worker-counts is empty")
    report = bench_dataset(dataset, worker_counts, repeats=args.repeats,
                           config=config)
    write_csv(report, args.output_prefix + ".csv")
    write_json(report, args.output_prefix + ".json")
    log.info("wrote %s.csv and %s.json", args.output_prefix, args.output_prefix)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"compute": cmd_compute, "serve": cmd_serve, "bench": cmd_bench}
    try:
        return handlers[args.command](args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # pragma: no cover - defensive
        import traceback

        traceback.print_exc()
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
