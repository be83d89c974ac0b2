"""Sources, sinks, the replay loop and the query registry.

Sources and sinks are addressed by URI: ``file://path``, ``stdin://`` (or
``-``), ``stdout://`` and ``tcp://host:port``, one NDJSON document per line.
Other schemes, such as ``kafka://``, need a plugin registered with
:func:`register_source` / :func:`register_sink`.
"""

from __future__ import annotations

import contextlib
import enum
import logging
import socket
import sys
import threading
from typing import Callable, Iterable, Iterator, Optional
from urllib.parse import urlsplit

from . import jsonpg
from .ast import SeraphQuery
from .engine import Executor, Metrics, Output
from .errors import DataError, LifecycleError, OutOfOrderError, SourceError
from .model import TimestampedGraph
from .parser import parse_seraph
from .streams import TimestampedTable

log = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 1 << 16

_source_plugins: dict[str, Callable[[str], Iterable[str]]] = {}
_sink_plugins: dict[str, Callable[[str], "Sink"]] = {}


def register_source(scheme: str, opener: Callable[[str], Iterable[str]]) -> None:
    """``opener(uri)`` returns an iterable of lines."""
    _source_plugins[scheme] = opener


def register_sink(scheme: str, opener: Callable[[str], "Sink"]) -> None:
    _sink_plugins[scheme] = opener


def _split(uri: str) -> tuple[str, str]:
    """(scheme, location); a bare path counts as a file."""
    if uri == "-":
        return "-", ""  # stdin as a source, stdout as a sink
    if uri in ("stdin", "stdout"):
        return uri, ""
    parts = urlsplit(uri)
    if not parts.scheme or len(parts.scheme) == 1:  # bare or Windows-style path
        return "file", uri
    if parts.scheme == "file":
        return "file", parts.netloc + parts.path
    if parts.scheme == "tcp":
        return "tcp", parts.netloc
    return parts.scheme, uri


def _tcp_address(where: str, uri: str) -> tuple[str, int]:
    host, _, port = where.rpartition(":")
    if not host or not port.isdigit():
        raise SourceError(f"{uri}: expected tcp://host:port")
    return host, int(port)


def iter_lines(read: Callable[[int], bytes], chunk_size: int = DEFAULT_CHUNK_SIZE) -> Iterator[str]:
    """Split a byte stream into decoded lines, reading ``chunk_size`` bytes at a time."""
    pending = b""
    while True:
        chunk = read(chunk_size)
        if not chunk:
            break
        pending += chunk
        *lines, pending = pending.split(b"\n")
        for line in lines:
            yield line.decode("utf-8")
    if pending:
        yield pending.decode("utf-8")


@contextlib.contextmanager
def open_source(uri: str, chunk_size: int = DEFAULT_CHUNK_SIZE) -> Iterator[Iterator[str]]:
    scheme, where = _split(uri)
    if scheme == "file":
        try:
            f = open(where, "rb")
        except OSError as e:
            raise SourceError(f"cannot open {uri}: {e.strerror}") from None
        with f:
            yield iter_lines(f.read, chunk_size)
    elif scheme in ("stdin", "-"):
        yield iter_lines(sys.stdin.buffer.read, chunk_size)
    elif scheme == "tcp":
        addr = _tcp_address(where, uri)
        try:
            conn = socket.create_connection(addr)
        except OSError as e:
            raise SourceError(f"cannot connect to {uri}: {e}") from None
        with conn:
            yield iter_lines(conn.recv, chunk_size)
    elif scheme in _source_plugins:
        yield iter(_source_plugins[scheme](uri))
    else:
        raise SourceError(f"{scheme}:// sources are not implemented; register a source plugin for {uri}")


class Sink:
    """Line-oriented output.  Subclasses override :meth:`write_line`."""

    def write_line(self, line: str) -> None:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def write(self, item: Output) -> None:
        if isinstance(item, TimestampedTable):
            line = jsonpg.encode_table_envelope(item.table, item.time)
        else:
            line = jsonpg.encode_envelope(item)
        try:
            self.write_line(line)
        except OSError as e:
            raise SourceError(f"sink write failed: {e}") from None


class StreamSink(Sink):
    def __init__(self, stream, owned: bool = True):
        self.stream = stream
        self.owned = owned

    def write_line(self, line: str) -> None:
        self.stream.write(line + "\n")
        self.stream.flush()

    def close(self) -> None:
        if self.owned:
            self.stream.close()


class SocketSink(Sink):
    def __init__(self, conn: socket.socket):
        self.conn = conn

    def write_line(self, line: str) -> None:
        self.conn.sendall(line.encode("utf-8") + b"\n")

    def close(self) -> None:
        self.conn.close()


class ListSink(Sink):
    """Collects outputs in memory."""

    def __init__(self):
        self.items: list[Output] = []
        self.lines: list[str] = []

    def write(self, item: Output) -> None:
        self.items.append(item)
        super().write(item)

    def write_line(self, line: str) -> None:
        self.lines.append(line)


def open_sink(uri: str) -> Sink:
    scheme, where = _split(uri)
    if scheme == "stdin":
        raise SourceError("stdin cannot be a sink; use stdout:// or -")
    if scheme in ("stdout", "-"):
        return StreamSink(sys.stdout, owned=False)
    if scheme == "file":
        try:
            return StreamSink(open(where, "w", encoding="utf-8", newline="\n"))
        except OSError as e:
            raise SourceError(f"cannot open {uri}: {e.strerror}") from None
    if scheme == "tcp":
        try:
            return SocketSink(socket.create_connection(_tcp_address(where, uri)))
        except OSError as e:
            raise SourceError(f"cannot connect to {uri}: {e}") from None
    if scheme in _sink_plugins:
        return _sink_plugins[scheme](uri)
    raise SourceError(f"{scheme}:// sinks are not implemented; register a sink plugin for {uri}")


def decode_lines(lines: Iterable[str], strict: bool = False) -> Iterator[TimestampedGraph]:
    """Envelopes from NDJSON lines; bad lines abort when strict, else are logged and skipped."""
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            yield jsonpg.decode_envelope(line)
        except DataError as e:
            if strict:
                raise DataError(f"line {lineno}: {e}") from e
            log.warning("skipping line %d: %s", lineno, e)


def feed(executor: Executor, events: Iterable[TimestampedGraph], sink: Sink, strict: bool = False,
         should_stop: Callable[[], bool] = lambda: False) -> None:
    """Push ``events`` into ``executor``; ``should_stop`` is consulted before each one."""
    for e in events:
        if should_stop():
            return
        try:
            outputs = executor.push(e)
        except OutOfOrderError as err:
            if strict:
                raise
            log.warning("skipping event: %s", err)
            continue
        for item in outputs:
            sink.write(item)


def run_loop(query: SeraphQuery, source: str, sink: str, *, strict: bool = False,
             max_varlen: Optional[int] = None, chunk_size: int = DEFAULT_CHUNK_SIZE) -> Metrics:
    """Replay ``source`` through ``query`` into ``sink`` until end of stream."""
    executor = Executor(query, max_varlen=max_varlen, strict=strict)
    out = open_sink(sink)
    try:
        with open_source(source, chunk_size) as lines:
            feed(executor, decode_lines(lines, strict), out, strict)
        for item in executor.finish():
            out.write(item)
    finally:
        out.close()
    return executor.metrics


# -- registry ----------------------------------------------------------------


class Status(enum.Enum):
    REGISTERED = "registered"
    RUNNING = "running"
    PAUSED = "paused"
    STOPPED = "stopped"


_TRANSITIONS = {
    "start": {Status.REGISTERED, Status.PAUSED},
    "pause": {Status.RUNNING},
    "stop": {Status.REGISTERED, Status.RUNNING, Status.PAUSED},
    "delete": {Status.STOPPED},
}


class Registration:
    def __init__(self, query: SeraphQuery, executor: Executor):
        self.query = query
        self.executor = executor
        self.status = Status.REGISTERED
        self.error: Optional[BaseException] = None
        self.thread: Optional[threading.Thread] = None
        self.cond = threading.Condition()

    @property
    def metrics(self) -> Metrics:
        return self.executor.metrics


class Registry:
    """Registered queries and their lifecycle.

    Each started query gets a worker thread that reads its source, so queries
    never share mutable state.  ``source_override`` and ``sink_override``
    replace the URIs written in the queries, which is how tests and the
    ``serve`` command point them at local files.
    """

    def __init__(self, *, strict: bool = False, max_varlen: Optional[int] = None,
                 source_override: Optional[Callable[[SeraphQuery], str]] = None,
                 sink_override: Optional[Callable[[SeraphQuery], str]] = None):
        self.strict = strict
        self.max_varlen = max_varlen
        self.source_override = source_override
        self.sink_override = sink_override
        self.join_timeout = 5.0
        self._queries: dict[str, Registration] = {}
        self._lock = threading.Lock()

    def register(self, text: str) -> str:
        query = parse_seraph(text)
        with self._lock:
            if query.id in self._queries:
                raise LifecycleError(f"query {query.id!r} is already registered")
            self._queries[query.id] = Registration(
                query, Executor(query, max_varlen=self.max_varlen, strict=self.strict)
            )
        return query.id

    def get(self, qid: str) -> Registration:
        try:
            return self._queries[qid]
        except KeyError:
            raise LifecycleError(f"no query {qid!r}") from None

    def _transition(self, reg: Registration, action: str, to: Status) -> None:
        if reg.status not in _TRANSITIONS[action]:
            raise LifecycleError(f"cannot {action} query {reg.query.id!r} while {reg.status.value}")
        reg.status = to
        reg.cond.notify_all()

    def start(self, qid: str) -> None:
        reg = self.get(qid)
        with reg.cond:
            first = reg.status is Status.REGISTERED
            self._transition(reg, "start", Status.RUNNING)
        if first:
            reg.thread = threading.Thread(target=self._work, args=(reg,), name=f"seraph-{qid}", daemon=True)
            reg.thread.start()

    def pause(self, qid: str) -> None:
        reg = self.get(qid)
        with reg.cond:
            self._transition(reg, "pause", Status.PAUSED)

    def stop(self, qid: str) -> None:
        """Stop a query; its worker flushes pending time instants before exiting."""
        reg = self.get(qid)
        with reg.cond:
            self._transition(reg, "stop", Status.STOPPED)

    def delete(self, qid: str) -> None:
        reg = self.get(qid)
        with reg.cond:
            if reg.status not in _TRANSITIONS["delete"]:
                raise LifecycleError(f"cannot delete query {qid!r} while {reg.status.value}; stop it first")
        if reg.thread is not None:
            reg.thread.join(self.join_timeout)
            if reg.thread.is_alive():
                # blocked on a quiet source; it exits as soon as the source yields or closes
                log.warning("query %s deleted while its worker waits on %s", qid, reg.query.source)
        with self._lock:
            del self._queries[qid]

    def status(self, qid: str) -> dict:
        reg = self.get(qid)
        out = {"id": qid, "status": reg.status.value, **reg.metrics.as_dict()}
        if reg.error is not None:
            out["error"] = str(reg.error)
        return out

    def ids(self) -> list[str]:
        return sorted(self._queries)

    def wait(self, qid: str, timeout: Optional[float] = None) -> bool:
        """Block until the query's worker has finished; False on timeout."""
        thread = self.get(qid).thread
        if thread is None:
            return True
        thread.join(timeout)
        return not thread.is_alive()

    def _gate(self, reg: Registration) -> bool:
        """Wait while paused; True once the query has been stopped."""
        with reg.cond:
            while reg.status is Status.PAUSED:
                reg.cond.wait()
            return reg.status is Status.STOPPED

    def _work(self, reg: Registration) -> None:
        q = reg.query
        source = self.source_override(q) if self.source_override else q.source
        sink_uri = self.sink_override(q) if self.sink_override else q.sink
        sink = None
        try:
            sink = open_sink(sink_uri)
            with open_source(source) as lines:
                feed(reg.executor, decode_lines(lines, self.strict), sink, self.strict,
                     lambda: self._gate(reg))
            for item in reg.executor.finish():
                sink.write(item)
        except Exception as e:  # reported through STATUS
            log.error("query %s failed: %s", q.id, e)
            reg.error = e
        finally:
            if sink is not None:
                sink.close()
            with reg.cond:
                reg.status = Status.STOPPED
                reg.cond.notify_all()


# -- control protocol --------------------------------------------------------


def handle_command(registry: Registry, line: str) -> str:
    """Execute one control line and return the reply."""
    verb, _, arg = line.strip().partition(" ")
    verb, arg = verb.upper(), arg.strip()
    try:
        if verb == "REGISTER":
            try:
                with open(arg, encoding="utf-8") as f:
                    text = f.read()
            except OSError as e:
                return f"ERR cannot read {arg}: {e.strerror}"
            return f"OK {registry.register(text)}"
        if verb == "STATUS":
            if not arg:
                return "OK " + " ".join(registry.ids())
            info = registry.status(arg)
            return "OK " + " ".join(f"{k}={v}" for k, v in info.items() if k != "id")
        actions = {"START": registry.start, "PAUSE": registry.pause,
                   "STOP": registry.stop, "DELETE": registry.delete}
        if verb in actions:
            if not arg:
                return f"ERR {verb} needs a query id"
            actions[verb](arg)
            return "OK"
        return f"ERR unknown command {verb or '(empty)'}"
    except Exception as e:  # every failure becomes a reply, never a dropped connection
        return f"ERR {e}"


def make_control_server(registry: Registry, host: str, port: int):
    """A threading TCP server speaking the line protocol; call ``serve_forever``."""
    import socketserver

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            for raw in self.rfile:
                line = raw.decode("utf-8", "replace").strip()
                if not line:
                    continue
                if line.upper() in ("QUIT", "EXIT"):
                    self.wfile.write(b"OK bye\n")
                    return
                self.wfile.write((handle_command(registry, line) + "\n").encode("utf-8"))

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    return Server((host, port), Handler)
