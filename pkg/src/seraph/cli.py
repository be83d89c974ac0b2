"""Command-line entry point: ``seraph run|explain|validate|serve``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional

from . import ast
from .errors import DataError, QueryError, SeraphError, SourceError
from .parser import parse_seraph
from .printer import print_seraph
from .runtime import DEFAULT_CHUNK_SIZE, Registry, decode_lines, make_control_server, open_source, run_loop
from .timeutil import format_duration, format_instant

log = logging.getLogger("seraph")

EXIT_OK, EXIT_QUERY, EXIT_IO, EXIT_DATA = 0, 1, 2, 3


def _read_query(path: str) -> ast.SeraphQuery:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise SourceError(f"cannot read query {path}: {e.strerror}") from None
    return parse_seraph(text)


def describe_plan(q: ast.SeraphQuery) -> list[str]:
    """One ``key=value`` line per resolved setting."""
    if isinstance(q.window, ast.TimeWindow):
        window = f"Time({format_duration(q.window.width)})"
    else:
        window = f"Event({q.window.count})"
    if isinstance(q.every, ast.TimeCadence):
        cadence = f"Time({format_duration(q.every.interval)})"
        et = "ET = { t0 + k*" + format_duration(q.every.interval) + " | k >= 0 }"
    else:
        cadence = f"Event({q.every.count})"
        n = q.every.count
        which = "each event" if n == 1 else f"every {n}-th event"
        et = f"ET = timestamp of {which} at or after t0"
    if isinstance(q.start, ast.StartKind):
        start = f"{q.start.value} (timestamp of the first event consumed)"
    else:
        start = format_instant(q.start)
    return [
        f"id={q.id}",
        f"source={q.source}",
        f"start={start}",
        f"window={window}",
        f"emit={q.emit.stream_name}",
        f"cadence={cadence}",
        f"plan={et}",
        f"output={'graph' if q.construct is not None else 'table'}",
        f"sink={q.sink}",
    ]


def cmd_run(args) -> int:
    q = _read_query(args.query)
    metrics = run_loop(q, args.input, args.output, strict=args.strict,
                       max_varlen=args.max_varlen, chunk_size=args.chunk_size)
    if args.metrics:
        print(json.dumps(metrics.as_dict()), file=sys.stderr)
    return EXIT_OK


def cmd_explain(args) -> int:
    q = _read_query(args.query)
    print(print_seraph(q))
    print()
    print("\n".join(describe_plan(q)))
    return EXIT_OK


def cmd_validate(args) -> int:
    count = 0
    last = None
    with open_source(args.input) as lines:
        for e in decode_lines(lines, strict=True):
            if last is not None and e.time < last:
                raise DataError(f"event {count + 1} at {format_instant(e.time)} is earlier than "
                                f"its predecessor at {format_instant(last)}")
            last = e.time
            count += 1
    print(f"ok: {count} events")
    return EXIT_OK


def cmd_serve(args) -> int:
    host, _, port = args.control.rpartition(":")
    if not port.isdigit():
        raise SourceError(f"--control expects host:port, got {args.control!r}")
    registry = Registry(strict=args.strict, max_varlen=args.max_varlen)
    server = make_control_server(registry, host or "127.0.0.1", int(port))
    log.info("control protocol listening on %s:%s", *server.server_address[:2])
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seraph", description="Continuous Seraph queries over graph streams.")
    p.add_argument("-v", "--verbose", action="store_true", help="log debug output")
    sub = p.add_subparsers(dest="command", required=True)

    def engine_options(sp):
        sp.add_argument("--strict", action="store_true",
                        help="abort on malformed or out-of-order events and on incomparable values")
        sp.add_argument("--max-varlen", type=int, default=None,
                        help="cap for unbounded variable-length patterns (default $SERAPH_MAX_VARLEN or 10)")

    run = sub.add_parser("run", help="replay a stream through one query")
    run.add_argument("--query", required=True, help="file holding a REGISTER QUERY text")
    run.add_argument("--in", dest="input", required=True, help="source URI (file://, stdin://, tcp://)")
    run.add_argument("--out", dest="output", required=True, help="sink URI (file://, stdout://, tcp://)")
    run.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK_SIZE, help="bytes per source read")
    run.add_argument("--metrics", action="store_true", help="print metrics as JSON on stderr")
    engine_options(run)
    run.set_defaults(func=cmd_run)

    explain = sub.add_parser("explain", help="print the parsed query and its evaluation plan")
    explain.add_argument("--query", required=True, help="file holding a REGISTER QUERY text")
    explain.set_defaults(func=cmd_explain)

    validate = sub.add_parser("validate", help="check an envelope stream")
    validate.add_argument("--in", dest="input", required=True, help="source URI to read envelopes from")
    validate.set_defaults(func=cmd_validate)

    serve = sub.add_parser("serve", help="run a query registry behind a line-based control port")
    serve.add_argument("--control", required=True, help="host:port to listen on")
    engine_options(serve)
    serve.set_defaults(func=cmd_serve)
    return p


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except QueryError as e:
        print(f"query error: {e}", file=sys.stderr)
        return EXIT_QUERY
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (SourceError, OSError) as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except SeraphError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
