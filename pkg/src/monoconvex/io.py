"""JSON file schemas and the report encoder.

Every rational is written as a "p/q" string and every extended scalar as
"p/q", "+inf" or "-inf"; the arctan instance alone carries binary64 values.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from fractions import Fraction
from pathlib import Path

from .algebra import NCombination, StructureDescriptor
from .errors import InvalidInstance
from .functions import PLUS_INFINITY, UNDEFINED, FunctionTable
from .instances import build_instance, build_window, parse_rational, window_json
from .maps import AdditiveMap
from .scalar import NINF, PINF, ExtendedScalar, fmt_rational


class SchemaError(ValueError):
    """Input file does not match its schema."""


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise SchemaError(f"{path}: {e}") from e


def _only(obj, allowed, what):
    if not isinstance(obj, dict):
        raise SchemaError(f"{what} must be a JSON object")
    extra = set(obj) - set(allowed)
    if extra:
        raise SchemaError(f"{what}: unknown field(s) {sorted(extra)}")


def parse_scalar(v) -> ExtendedScalar:
    if isinstance(v, str):
        s = v.strip()
        if s in ("+inf", "inf"):
            return PINF
        if s == "-inf":
            return NINF
        return ExtendedScalar(parse_rational(s))
    if isinstance(v, bool) or not isinstance(v, (int, str)):
        raise SchemaError(f"scalar {v!r} must be an integer or a 'p/q' string")
    return ExtendedScalar(Fraction(v))


INSTANCE_KEYS = {"kind", "dimension", "generators", "moduli", "modulus", "size", "boolean", "divisors",
                 "elements", "meet"}


def parse_instance(obj) -> StructureDescriptor:
    _only(obj, INSTANCE_KEYS, "instance")
    try:
        return build_instance(obj)
    except (KeyError, TypeError) as e:
        raise SchemaError(f"instance: {e}") from e


def parse_window(S, obj):
    if obj is None:
        return S.default_window()
    _only(obj, {"elements", "radius", "lo", "hi", "max_exp", "max_den", "step", "values", "carrier"}, "window")
    try:
        return build_window(S, obj)
    except (KeyError, TypeError) as e:
        raise SchemaError(f"window: {e}") from e


def parse_set(S, obj):
    if isinstance(obj, dict):
        _only(obj, {"elements"}, "set")
        obj = obj.get("elements", [])
    if not isinstance(obj, list):
        raise SchemaError("set must be a list of elements")
    return frozenset(S.decode(e) for e in obj)


def parse_table(S, obj, name="f") -> FunctionTable:
    """{"window", "values": [[element, value], ...], "default", "outside"}."""
    _only(obj, {"window", "values", "default", "outside", "name"}, "function table")
    W = parse_window(S, obj.get("window"))
    outside = obj.get("outside", PLUS_INFINITY)
    if outside not in (PLUS_INFINITY, UNDEFINED):
        raise SchemaError(f"outside must be {PLUS_INFINITY!r} or {UNDEFINED!r}")
    given = {}
    for pair in obj.get("values", []):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise SchemaError("values entries are [element, value] pairs")
        given[S.decode(pair[0])] = parse_scalar(pair[1])
    if "default" in obj:
        d = parse_scalar(obj["default"])
        for x in S.enumerate(W):
            given.setdefault(x, d)
    return FunctionTable(S, W, given, outside=outside, name=obj.get("name", name))


def parse_map(S1, S2, obj) -> AdditiveMap:
    if obj is None or obj == "identity":
        if S1 is not S2:
            raise SchemaError("identity map needs a single instance")
        return AdditiveMap.identity(S1)
    _only(obj, {"matrix", "name", "bijective"}, "map")
    M = [[parse_rational(v) for v in row] for row in obj["matrix"]]
    return AdditiveMap.linear(S1, S2, M, obj.get("name", "T"), bool(obj.get("bijective", False)))


# ---------------------------------------------------------------- encoding


def encode(obj, S: StructureDescriptor | None = None):
    """JSON-ready form: exact strings for numbers, elements through S.encode."""
    if isinstance(obj, ExtendedScalar):
        return str(obj)
    if isinstance(obj, Fraction):
        return fmt_rational(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, NCombination):
        return {"m": obj.m, "terms": [[c, encode_element(x, S)] for c, x in obj.terms],
                "text": obj.describe(S)}
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, str) else k: encode(v, S) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v, S) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted((encode(v, S) for v in obj), key=lambda v: json.dumps(v, sort_keys=True))
    if dataclasses.is_dataclass(obj):
        return {f.name: encode(getattr(obj, f.name), S) for f in dataclasses.fields(obj)
                if not callable(getattr(obj, f.name))}
    return repr(obj)


def encode_element(x, S):
    return S.encode(x) if S is not None else encode(x)


def encode_elements(xs, S):
    return sorted((S.encode(x) for x in xs), key=lambda v: json.dumps(v, sort_keys=True))


def digest(paths_and_flags: dict) -> str:
    h = hashlib.sha256()
    for key in sorted(paths_and_flags):
        val = paths_and_flags[key]
        h.update(key.encode())
        if isinstance(val, Path):
            h.update(val.read_bytes())
        else:
            h.update(json.dumps(val, sort_keys=True).encode())
    return h.hexdigest()


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


__all__ = [
    "SchemaError",
    "InvalidInstance",
    "load_json",
    "parse_scalar",
    "parse_instance",
    "parse_window",
    "parse_set",
    "parse_table",
    "parse_map",
    "encode",
    "encode_elements",
    "digest",
    "dumps",
    "window_json",
]
