"""Deterministic JSON encoding with exact rationals rendered as "p/q" strings."""

from __future__ import annotations

import json
from fractions import Fraction


def encode(obj):
    """Recursively convert an object into JSON-serializable form."""
    if isinstance(obj, Fraction):
        return "%d/%d" % (obj.numerator, obj.denominator)
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(x) for x in obj]
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    if hasattr(obj, "to_json_dict"):
        return encode(obj.to_json_dict())
    raise TypeError("cannot encode %r" % type(obj))


def dumps(obj) -> str:
    return json.dumps(encode(obj), sort_keys=True, indent=2)
