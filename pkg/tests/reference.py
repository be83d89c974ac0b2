"""Brute-force continuous evaluation used as a differential oracle.

Nothing here touches the incremental window buffer, the executor or the
emit-state machinery: instants are enumerated up front, each window is
filtered from the recorded stream and folded with the binary union, the
query is evaluated one-shot, and the emit operator is applied with Counter
arithmetic.
"""

from collections import Counter
from functools import reduce

from seraph.ast import EmitOperator, EventCadence, EventWindow, StartKind
from seraph.cypher import evaluate_query
from seraph.model import EMPTY_GRAPH, graph_union
from seraph.values import value_key


def canonical_rows(table) -> Counter:
    """Bag of rows keyed by sorted (field, value key) pairs."""
    out = Counter()
    for row, n in table.items():
        out[tuple(sorted((k, value_key(v)) for k, v in row.items()))] += n
    return out


def instants(query, stream):
    """(t, consumed prefix length) for each evaluation, in firing order."""
    if not stream:
        return []
    t0 = stream[0].time if isinstance(query.start, StartKind) else query.start
    last = stream[-1].time
    if isinstance(query.every, EventCadence):
        out, seen = [], 0
        for j, e in enumerate(stream):
            if e.time >= t0:
                seen += 1
                if seen % query.every.count == 0:
                    out.append((e.time, j + 1))
        return out
    out, t = [], t0
    while t <= last:
        out.append((t, sum(1 for e in stream if e.time <= t)))
        t += query.every.interval
    return out


def window(query, prefix, t):
    upto = [e for e in prefix if e.time <= t]
    if isinstance(query.window, EventWindow):
        chosen = upto[-query.window.count:]
    else:
        chosen = [e for e in upto if e.time > t - query.window.width]
    return reduce(graph_union, (e.graph for e in chosen), EMPTY_GRAPH)


def reference_outputs(query, stream, max_varlen=None):
    """[(t, Counter of rows)] the continuous query should emit."""
    out = []
    previous = Counter()
    for t, n in instants(query, stream):
        g = window(query, stream[:n], t)
        current = canonical_rows(evaluate_query(query.inner, g, max_varlen=max_varlen))
        if query.emit is EmitOperator.SNAPSHOT:
            out.append((t, current))
        else:
            delta = current - previous if query.emit is EmitOperator.ON_ENTERING else previous - current
            if delta:
                out.append((t, delta))
        previous = current
    return out


def engine_outputs(items):
    return [(x.time, canonical_rows(x.table)) for x in items]
