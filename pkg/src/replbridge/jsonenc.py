"""JSON encoding of S-expression values.

Mapping: NIL -> null, T -> true, integers -> numbers (full decimal, never
rounded), strings -> strings, other symbols -> strings of their name, and
proper lists -> arrays, recursively.  Improper pairs have no JSON image
and are rejected.

The mapping is lossy by design: strings and symbols can collide ("a" and
the symbol a both become "a"), so no JSON-to-S-expression decoding is
offered.
"""

from __future__ import annotations

import json
from typing import Union

from .sexpr import Pair, SExpr, Symbol, is_nil, print_sexpr

__all__ = ["JsonValue", "UnencodableValue", "sexpr_to_json", "json_text", "sexpr_to_json_text"]

JsonValue = Union[None, bool, int, str, "list[JsonValue]"]


class UnencodableValue(ValueError):
    """The value contains an improper pair and has no JSON image."""


def sexpr_to_json(value: SExpr) -> JsonValue:
    """Encode ``value``; raises UnencodableValue on any improper pair."""
    root: list[JsonValue] = [None]
    stack: list[tuple[SExpr, list, int]] = [(value, root, 0)]
    while stack:
        v, target, index = stack.pop()
        if isinstance(v, Pair):
            elements: list[SExpr] = []
            cur: SExpr = v
            while isinstance(cur, Pair):
                elements.append(cur.car)
                cur = cur.cdr
            if not is_nil(cur):
                snippet = print_sexpr(v)
                if len(snippet) > 120:
                    snippet = snippet[:120] + "..."
                raise UnencodableValue(f"improper pair has no JSON encoding: {snippet}")
            array: list[JsonValue] = [None] * len(elements)
            target[index] = array
            for i, element in enumerate(elements):
                stack.append((element, array, i))
        elif isinstance(v, Symbol):
            if v.name == "NIL":
                target[index] = None
            elif v.name == "T":
                target[index] = True
            else:
                target[index] = v.name
        else:
            target[index] = v
    return root[0]


def json_text(value: JsonValue) -> str:
    """Serialize with no insignificant whitespace and only mandatory escapes."""
    return json.dumps(value, ensure_ascii=False, separators=(",", ":"))


def sexpr_to_json_text(value: SExpr) -> str:
    return json_text(sexpr_to_json(value))
