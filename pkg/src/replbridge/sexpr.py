"""S-expression values, parser, and canonical printer.

The value universe is deliberately small: arbitrary-precision integers,
Unicode strings, symbols, and pairs.  The symbol ``NIL`` doubles as the
empty list and the false value; the symbol ``T`` is canonical truth.
There are no floats, ratios, characters, or vectors.

Parsing and printing are exact inverses on this universe: for every
value ``x``, ``parse_sexpr(print_sexpr(x))`` is structurally equal to
``x``.  Both directions are iterative, so arbitrarily deep trees (e.g.
a megabyte of nested parentheses sent by a client) cannot overflow the
interpreter stack.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

__all__ = [
    "SExpr",
    "Symbol",
    "Pair",
    "NIL",
    "T",
    "SExprSyntaxError",
    "parse_sexpr",
    "print_sexpr",
    "sexpr_equal",
    "is_nil",
    "as_list",
    "make_list",
]

_INTEGER_RE = re.compile(r"-?[0-9]+\Z")
_FORBIDDEN_SYMBOL_CHARS = set('()"')


def _valid_symbol_name(name: str) -> bool:
    if not name or name == ".":
        return False
    if _INTEGER_RE.match(name):
        # would be read back as an integer, breaking the round-trip
        return False
    for ch in name:
        if ch.isspace() or ch in _FORBIDDEN_SYMBOL_CHARS:
            return False
    return True


@dataclass(frozen=True)
class Symbol:
    """Case-sensitive symbol; equality and hash are by name."""

    name: str

    def __post_init__(self) -> None:
        if not _valid_symbol_name(self.name):
            raise ValueError(f"invalid symbol name: {self.name!r}")


@dataclass(eq=False)
class Pair:
    """A cons cell.  Structural equality, iterative so deep chains are safe."""

    car: "SExpr"
    cdr: "SExpr"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pair):
            return NotImplemented
        return sexpr_equal(self, other)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"<sexpr {print_sexpr(self)}>"


SExpr = Union[int, str, Symbol, Pair]

NIL = Symbol("NIL")
T = Symbol("T")


def is_nil(value: SExpr) -> bool:
    return isinstance(value, Symbol) and value.name == "NIL"


def sexpr_equal(a: SExpr, b: SExpr) -> bool:
    """Structural equality without recursion."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x is y:
            continue
        if isinstance(x, Pair):
            if not isinstance(y, Pair):
                return False
            stack.append((x.car, y.car))
            stack.append((x.cdr, y.cdr))
        elif isinstance(x, Symbol):
            if not isinstance(y, Symbol) or x.name != y.name:
                return False
        elif isinstance(y, (Pair, Symbol)) or type(x) is not type(y) or x != y:
            return False
    return True


def make_list(items: Iterable[SExpr], tail: SExpr = NIL) -> SExpr:
    """Build a (by default proper) list from ``items``."""
    result = tail
    for item in reversed(list(items)):
        result = Pair(item, result)
    return result


def as_list(value: SExpr) -> "list[SExpr] | None":
    """Elements of a proper list, or None if ``value`` is not one."""
    items: list[SExpr] = []
    cur = value
    while isinstance(cur, Pair):
        items.append(cur.car)
        cur = cur.cdr
    if not is_nil(cur):
        return None
    return items


class SExprSyntaxError(ValueError):
    """Raised on malformed input; carries the byte offset of the problem."""

    def __init__(self, reason: str, offset: int):
        super().__init__(f"syntax error at byte {offset}: {reason}")
        self.reason = reason
        self.offset = offset


class _ListBuilder:
    __slots__ = ("items", "dot_seen", "tail", "has_tail")

    def __init__(self) -> None:
        self.items: list[SExpr] = []
        self.dot_seen = False
        self.tail: SExpr = NIL
        self.has_tail = False


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _byte_offset(self, pos: "int | None" = None) -> int:
        if pos is None:
            pos = self.pos
        try:
            return len(self.text[:pos].encode("utf-8"))
        except UnicodeEncodeError:
            return pos

    def _error(self, reason: str, pos: "int | None" = None) -> SExprSyntaxError:
        return SExprSyntaxError(reason, self._byte_offset(pos))

    def _skip_whitespace(self) -> None:
        text = self.text
        while self.pos < len(text) and text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self._skip_whitespace()
        return self.pos >= len(self.text)

    def parse_one(self) -> SExpr:
        text = self.text
        stack: list[_ListBuilder] = []
        if self.at_end():
            raise self._error("empty input")
        while True:
            if self.at_end():
                raise self._error("unbalanced parenthesis")
            ch = text[self.pos]
            value: SExpr
            if ch == "(":
                self.pos += 1
                stack.append(_ListBuilder())
                continue
            elif ch == ")":
                if not stack:
                    raise self._error("unbalanced parenthesis")
                self.pos += 1
                value = self._finish_list(stack.pop())
            elif ch == '"':
                value = self._scan_string()
            else:
                token_start = self.pos
                token = self._scan_token()
                if token == ".":
                    if not stack or stack[-1].dot_seen or not stack[-1].items:
                        raise self._error("stray dot", token_start)
                    stack[-1].dot_seen = True
                    continue
                if _INTEGER_RE.match(token):
                    value = int(token)
                else:
                    value = Symbol(token)
            if not stack:
                return value
            top = stack[-1]
            if top.dot_seen:
                if top.has_tail:
                    raise self._error("more than one value after dot")
                top.tail = value
                top.has_tail = True
            else:
                top.items.append(value)

    def _finish_list(self, builder: _ListBuilder) -> SExpr:
        if builder.dot_seen and not builder.has_tail:
            raise self._error("stray dot")
        return make_list(builder.items, builder.tail)

    def _scan_string(self) -> str:
        text = self.text
        i = self.pos + 1
        parts: list[str] = []
        while True:
            if i >= len(text):
                self.pos = i
                raise self._error("unterminated string")
            ch = text[i]
            if ch == '"':
                self.pos = i + 1
                return "".join(parts)
            if ch == "\\":
                if i + 1 >= len(text):
                    self.pos = len(text)
                    raise self._error("unterminated string")
                esc = text[i + 1]
                if esc not in ('"', "\\"):
                    raise self._error(f"invalid string escape \\{esc}", i)
                parts.append(esc)
                i += 2
            else:
                parts.append(ch)
                i += 1

    def _scan_token(self) -> str:
        text = self.text
        start = self.pos
        i = start
        while i < len(text):
            ch = text[i]
            if ch.isspace() or ch in '()"':
                break
            i += 1
        self.pos = i
        return text[start:i]


def parse_sexpr(text: str) -> SExpr:
    """Parse one complete S-expression; reject trailing input."""
    parser = _Parser(text)
    value = parser.parse_one()
    if not parser.at_end():
        raise parser._error("trailing data after expression")
    return value


def _escape_string(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def print_sexpr(value: SExpr) -> str:
    """Canonical single-line form; the exact inverse of parse_sexpr."""
    parts: list[str] = []
    # stack entries: ("t", literal text) or ("v", value to render)
    stack: list[tuple[str, object]] = [("v", value)]
    while stack:
        tag, item = stack.pop()
        if tag == "t":
            parts.append(item)  # type: ignore[arg-type]
            continue
        v = item
        if isinstance(v, Pair):
            elements: list[SExpr] = []
            cur: SExpr = v
            while isinstance(cur, Pair):
                elements.append(cur.car)
                cur = cur.cdr
            work: list[tuple[str, object]] = [("t", "(")]
            for i, element in enumerate(elements):
                if i:
                    work.append(("t", " "))
                work.append(("v", element))
            if not is_nil(cur):
                work.append(("t", " . "))
                work.append(("v", cur))
            work.append(("t", ")"))
            stack.extend(reversed(work))
        elif isinstance(v, Symbol):
            parts.append(v.name)
        elif isinstance(v, bool):
            raise TypeError(f"not an S-expression value: {v!r}")
        elif isinstance(v, int):
            parts.append(str(v))
        elif isinstance(v, str):
            parts.append(f'"{_escape_string(v)}"')
        else:
            raise TypeError(f"not an S-expression value: {v!r}")
    return "".join(parts)
