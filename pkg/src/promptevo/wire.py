"""Canonical JSON serialization for the worker protocol.

Replies must be reproducible byte-for-byte across independent worker
implementations, so the wire format pins down exactly one rendering of
every value: ECMAScript number-to-string semantics (what JSON.stringify
emits), minimal string escaping with lowercase hex, no whitespace, and
fixed field order per message kind (PROTOCOL.md).  64-bit seeds travel
as decimal strings because they exceed IEEE double integer range.
"""

from __future__ import annotations

import decimal
import json
import math
from typing import Any

__all__ = ["dumps", "loads", "js_number"]

_ESCAPES = {
    '"': '\\"',
    "\\": "\\\\",
    "\b": "\\b",
    "\f": "\\f",
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
}


def _js_string(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def js_number(x: float) -> str:
    """Render a float the way ECMAScript Number::toString(10) does."""
    if math.isnan(x) or math.isinf(x):
        raise ValueError("non-finite numbers are not representable on the wire")
    if x == 0.0:
        return "0"
    sign = "-" if x < 0 else ""
    # repr() gives the shortest round-trip decimal; reformat per ES rules
    tup = decimal.Decimal(repr(abs(x))).as_tuple()
    digits = "".join(map(str, tup.digits)).rstrip("0")
    k = tup.exponent + len(tup.digits)  # value = 0.digits * 10**k
    n = len(digits)
    if n <= k <= 21:
        body = digits + "0" * (k - n)
    elif 0 < k <= 21:
        body = digits[:k] + "." + digits[k:]
    elif -6 < k <= 0:
        body = "0." + "0" * (-k) + digits
    else:
        mant = digits[0] + ("." + digits[1:] if n > 1 else "")
        e = k - 1
        body = f"{mant}e{'+' if e >= 0 else '-'}{abs(e)}"
    return sign + body


def dumps(obj: Any) -> str:
    """Serialize with canonical formatting; dict insertion order is kept."""
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return _js_string(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return js_number(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{_js_string(str(k))}:{dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__} on the wire")


def loads(line: str) -> Any:
    return json.loads(line)
