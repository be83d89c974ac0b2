"""Runtime values.

Scalars use plain Python objects (``None``, ``bool``, ``int``, ``float``,
``str``).  Lists are tuples, maps are dicts with string keys.  Graph
element references and paths get their own small types so they never
compare equal to integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


@dataclass(frozen=True, slots=True)
class NodeRef:
    id: int


@dataclass(frozen=True, slots=True)
class RelRef:
    id: int


@dataclass(frozen=True, slots=True)
class Path:
    """Alternating node/relationship ids, starting and ending with a node."""

    ids: tuple

    def __post_init__(self):
        if len(self.ids) % 2 == 0:
            raise ValueError("a path has an odd number of elements")

    @classmethod
    def of(cls, *ids: int) -> "Path":
        return cls(tuple(ids))

    @property
    def nodes(self) -> tuple:
        return self.ids[0::2]

    @property
    def relationships(self) -> tuple:
        return self.ids[1::2]

    @property
    def length(self) -> int:
        return len(self.ids) // 2


# Tags keep keys of different types apart (True vs 1, 1 vs 1.0) and make
# keys totally ordered, which gives a canonical row order for free.
_NULL, _BOOL, _INT, _FLOAT, _STR, _LIST, _MAP, _NODE, _REL, _PATH = range(10)


def value_key(v: Any) -> tuple:
    """Hashable, totally ordered key implementing structural equality."""
    if v is None:
        return (_NULL,)
    t = type(v)
    if t is bool:
        return (_BOOL, v)
    if t is int:
        return (_INT, v)
    if t is float:
        return (_FLOAT, v)
    if t is str:
        return (_STR, v)
    if t is NodeRef:
        return (_NODE, v.id)
    if t is RelRef:
        return (_REL, v.id)
    if t is Path:
        return (_PATH, v.ids)
    if t is tuple or t is list:
        return (_LIST, tuple(value_key(x) for x in v))
    if t is dict:
        return (_MAP, tuple(sorted((k, value_key(x)) for k, x in v.items())))
    raise TypeError(f"not a value: {v!r}")


def values_equal(a: Any, b: Any) -> bool:
    return value_key(a) == value_key(b)


def is_value(v: Any) -> bool:
    try:
        value_key(v)
    except TypeError:
        return False
    return True


def to_json(v: Any) -> Any:
    """JSON-compatible encoding of a value; graph references become tagged objects."""
    t = type(v)
    if v is None or t in (bool, int, str):
        return v
    if t is float:
        if not math.isfinite(v):
            raise ValueError(f"non-finite float {v!r} has no JSON form")
        return v
    if t is NodeRef:
        return {"$node": v.id}
    if t is RelRef:
        return {"$rel": v.id}
    if t is Path:
        return {"$path": list(v.ids)}
    if t is tuple or t is list:
        return [to_json(x) for x in v]
    if t is dict:
        return {"$map": {k: to_json(x) for k, x in v.items()}}
    raise TypeError(f"not a value: {v!r}")


def from_json(obj: Any) -> Any:
    if isinstance(obj, list):
        return tuple(from_json(x) for x in obj)
    if isinstance(obj, dict):
        if len(obj) == 1:
            (tag, inner), = obj.items()
            if tag == "$node":
                return NodeRef(inner)
            if tag == "$rel":
                return RelRef(inner)
            if tag == "$path":
                return Path(tuple(inner))
            if tag == "$map":
                return {k: from_json(x) for k, x in inner.items()}
        raise ValueError(f"unrecognised tagged value {obj!r}")
    return obj


def type_name(v: Any) -> str:
    return {
        _NULL: "Null", _BOOL: "Boolean", _INT: "Integer", _FLOAT: "Float",
        _STR: "String", _LIST: "List", _MAP: "Map", _NODE: "Node",
        _REL: "Relationship", _PATH: "Path",
    }[value_key(v)[0]]
