"""JSON-PG graphs and the NDJSON envelopes that carry them on streams.

A graph document has ``nodes`` and ``edges`` arrays.  Property values are
arrays: one element decodes to a scalar, two or more to a list.  Lists with
fewer than two elements are written as a nested array so that decoding
gives the list back.
"""

from __future__ import annotations

import json
from typing import Any

from . import values
from .errors import EnvelopeError, GraphError, JsonPgError
from .model import Node, PropertyGraph, Relationship, Table, TimestampedGraph
from .timeutil import TimeFormatError, format_instant, parse_datetime

StreamEnvelope = TimestampedGraph


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def _decode_value(x: Any, where: str):
    if x is None:
        raise JsonPgError(f"{where}: null is not a property value")
    if isinstance(x, list):
        return tuple(_decode_value(e, where) for e in x)
    if isinstance(x, dict):
        return {k: _decode_value(v, where) for k, v in x.items()}
    return x


def _decode_props(obj: Any, where: str) -> dict:
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise JsonPgError(f"{where}: properties must be an object")
    out = {}
    for key, arr in obj.items():
        if not isinstance(arr, list):
            raise JsonPgError(f"{where}: property {key!r} must be an array")
        if not arr:
            raise JsonPgError(f"{where}: property {key!r} has an empty value array")
        if len(arr) == 1:
            out[key] = _decode_value(arr[0], where)
        else:
            out[key] = tuple(_decode_value(e, where) for e in arr)
    return out


def _decode_id(x: Any, where: str) -> int:
    if type(x) is not int or x < 0:
        raise JsonPgError(f"{where}: id must be a non-negative integer, got {x!r}")
    return x


def _string_list(x: Any, where: str) -> list:
    if x is None:
        return []
    if not isinstance(x, list) or not all(isinstance(s, str) for s in x):
        raise JsonPgError(f"{where}: labels must be an array of strings")
    return x


def graph_from_obj(doc: Any) -> PropertyGraph:
    if not isinstance(doc, dict):
        raise JsonPgError("a JSON-PG document is an object")
    raw_nodes = doc.get("nodes", [])
    raw_edges = doc.get("edges", [])
    if not isinstance(raw_nodes, list) or not isinstance(raw_edges, list):
        raise JsonPgError("'nodes' and 'edges' must be arrays")

    nodes: dict[int, Node] = {}
    for i, item in enumerate(raw_nodes):
        where = f"nodes[{i}]"
        if not isinstance(item, dict):
            raise JsonPgError(f"{where}: node must be an object")
        nid = _decode_id(item.get("id"), where)
        labels = frozenset(_string_list(item.get("labels"), where))
        props = _decode_props(item.get("properties"), where)
        prev = nodes.get(nid)
        if prev is not None:
            if prev.labels != labels:
                raise JsonPgError(f"{where}: node {nid} repeated with different labels")
            for k, v in props.items():
                if k in prev.props and not values.values_equal(prev.props[k], v):
                    raise JsonPgError(f"{where}: node {nid} repeated with conflicting property {k!r}")
            props = {**prev.props, **props}
        nodes[nid] = Node(nid, labels, props)

    rels: dict[int, Relationship] = {}
    for i, item in enumerate(raw_edges):
        where = f"edges[{i}]"
        if not isinstance(item, dict):
            raise JsonPgError(f"{where}: edge must be an object")
        rid = _decode_id(item.get("id"), where)
        src = _decode_id(item.get("from"), where + ".from")
        trg = _decode_id(item.get("to"), where + ".to")
        for end in (src, trg):
            if end not in nodes:
                raise JsonPgError(f"{where}: edge {rid} references unknown node {end}")
        labels = _string_list(item.get("labels"), where)
        if len(labels) != 1:
            raise JsonPgError(f"{where}: edge {rid} must have exactly one label, got {len(labels)}")
        r = Relationship(rid, src, trg, labels[0], _decode_props(item.get("properties"), where))
        prev = rels.get(rid)
        if prev is not None and (prev.src, prev.trg, prev.type) != (r.src, r.trg, r.type):
            raise JsonPgError(f"{where}: edge {rid} repeated with a different shape")
        rels[rid] = r
    try:
        return PropertyGraph(nodes.values(), rels.values())
    except (GraphError, TypeError) as e:
        raise JsonPgError(str(e)) from None


def parse_jsonpg(text: str) -> PropertyGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise JsonPgError(f"malformed JSON: {e}") from None
    return graph_from_obj(doc)


def _encode_value(v: Any) -> Any:
    t = type(v)
    if t is tuple or t is list:
        return [_encode_value(x) for x in v]
    if t is dict:
        return {k: _encode_value(x) for k, x in v.items()}
    if t in (values.NodeRef, values.RelRef, values.Path):
        raise JsonPgError(f"graph references cannot be stored as properties: {v!r}")
    return v


def _encode_props(props) -> dict:
    out = {}
    for k in sorted(props):
        v = props[k]
        if type(v) is tuple and len(v) >= 2:
            out[k] = [_encode_value(x) for x in v]
        else:
            out[k] = [_encode_value(v)]
    return out


def graph_to_obj(g: PropertyGraph) -> dict:
    nodes = []
    for nid in sorted(g.nodes):
        n = g.nodes[nid]
        item = {"id": nid, "labels": sorted(n.labels)}
        if n.props:
            item["properties"] = _encode_props(n.props)
        nodes.append(item)
    edges = []
    for rid in sorted(g.rels):
        r = g.rels[rid]
        item = {"id": rid, "from": r.src, "to": r.trg, "labels": [r.type]}
        if r.props:
            item["properties"] = _encode_props(r.props)
        edges.append(item)
    return {"nodes": nodes, "edges": edges}


def serialize_jsonpg(g: PropertyGraph) -> str:
    return _dumps(graph_to_obj(g))


# -- envelopes ---------------------------------------------------------------


def decode_time(x: Any) -> int:
    if type(x) is int:
        if x < 0:
            raise EnvelopeError(f"negative timestamp {x}")
        return x
    if isinstance(x, str):
        try:
            return parse_datetime(x)
        except TimeFormatError as e:
            raise EnvelopeError(str(e)) from None
    raise EnvelopeError(f"'time' must be an ISO-8601 string or integer epoch-ms, got {x!r}")


def decode_envelope(line: str) -> StreamEnvelope:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as e:
        raise EnvelopeError(f"malformed JSON: {e}") from None
    if not isinstance(doc, dict):
        raise EnvelopeError("an envelope is a JSON object")
    if "time" not in doc:
        raise EnvelopeError("envelope has no 'time'")
    if "graph" not in doc:
        raise EnvelopeError("envelope has no 'graph'")
    t = decode_time(doc["time"])
    return StreamEnvelope(graph_from_obj(doc["graph"]), t)


def encode_envelope(e: StreamEnvelope) -> str:
    return _dumps({"time": format_instant(e.time), "graph": graph_to_obj(e.graph)})


def encode_table_envelope(table: Table, t: int) -> str:
    rows = [{f: values.to_json(v) for f, v in zip(table.fields, row)} for row in table.tuples()]
    return _dumps({"time": format_instant(t), "rows": rows})


def decode_table_envelope(line: str) -> tuple[int, list[dict]]:
    doc = json.loads(line)
    rows = [{k: values.from_json(v) for k, v in row.items()} for row in doc["rows"]]
    return decode_time(doc["time"]), rows
