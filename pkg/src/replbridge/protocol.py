"""Framed wire format shared by server, client library, CLI, and console.

Every message travels as::

    <KIND> <LEN>\\n<BODY>\\n

where KIND is one of the kind names below in ASCII capitals, LEN is the
decimal byte length of BODY, and the trailing newline is mandatory.
Bodies are opaque byte strings; because the length is explicit, no
escaping is ever needed, so printed output containing newlines or NULs
passes through untouched.

Kinds and direction:

* server to client: HELLO, READY, RETURN, RETURN_JSON, STDOUT, ERROR
* client to server: COMMAND, COMMAND_JSON

After each COMMAND/COMMAND_JSON the server replies with messages
matching ``STDOUT* (RETURN | RETURN_JSON | ERROR) READY``; the READY is
how a client tells the server will accept another command.  On connect
the server speaks first: HELLO then READY.  The HELLO body is the
S-expression ``(bridge <protocol-version> <session-name>)``.

Over WebSocket the same messages travel one per text frame as the JSON
envelope ``{"kind": "<KIND>", "body": "<body text>"}`` (see the server's
WebSocket endpoint); the kinds and the reply grammar are identical.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .sexpr import Symbol, as_list, make_list, parse_sexpr, print_sexpr

__all__ = [
    "PROTOCOL_VERSION",
    "WS_PATH",
    "KINDS",
    "SERVER_KINDS",
    "CLIENT_KINDS",
    "Message",
    "FrameError",
    "BodyTooLarge",
    "encode_message",
    "decode_message",
    "ServerInfo",
    "hello_body",
    "parse_hello",
    "is_valid_transcript",
    "parse_endpoint",
]

PROTOCOL_VERSION = 1
WS_PATH = "/bridge"

KINDS = (
    "HELLO",
    "READY",
    "RETURN",
    "RETURN_JSON",
    "STDOUT",
    "ERROR",
    "COMMAND",
    "COMMAND_JSON",
)
_KIND_SET = frozenset(KINDS)
SERVER_KINDS = frozenset({"HELLO", "READY", "RETURN", "RETURN_JSON", "STDOUT", "ERROR"})
CLIENT_KINDS = frozenset({"COMMAND", "COMMAND_JSON"})

_LENGTH_RE = re.compile(rb"[0-9]+\Z")
_MAX_HEADER = 256
_DRAIN_CHUNK = 1 << 16


class FrameError(Exception):
    """Malformed frame; unrecoverable for the connection it came from."""


class BodyTooLarge(Exception):
    """Body exceeded the caller's limit; the frame was consumed, the stream
    is still positioned at a message boundary."""

    def __init__(self, kind: str, length: int, limit: int):
        super().__init__(f"{kind} body of {length} bytes exceeds limit {limit}")
        self.kind = kind
        self.length = length
        self.limit = limit


@dataclass(frozen=True)
class Message:
    """One protocol unit: a kind tag plus an opaque byte body."""

    kind: str
    body: bytes = b""

    def __post_init__(self) -> None:
        if self.kind not in _KIND_SET:
            raise ValueError(f"unknown message kind: {self.kind!r}")
        if isinstance(self.body, str):
            object.__setattr__(self, "body", self.body.encode("utf-8"))

    def text(self) -> str:
        return self.body.decode("utf-8")


def encode_message(msg: Message) -> bytes:
    return b"%s %d\n%s\n" % (msg.kind.encode("ascii"), len(msg.body), msg.body)


def decode_message(stream, max_body: "int | None" = None) -> Optional[Message]:
    """Read one message from a binary stream.

    Returns None on a clean end-of-stream at a message boundary.  With
    ``max_body`` set, an oversized body is drained and BodyTooLarge is
    raised, leaving the stream at the next boundary.
    """
    header = stream.readline(_MAX_HEADER)
    if header == b"":
        return None
    if not header.endswith(b"\n"):
        raise FrameError("header line too long or truncated")
    parts = header[:-1].split(b" ")
    if len(parts) != 2:
        raise FrameError(f"malformed header: {header[:-1]!r}")
    try:
        kind = parts[0].decode("ascii")
    except UnicodeDecodeError:
        raise FrameError(f"malformed header: {header[:-1]!r}") from None
    if kind not in _KIND_SET:
        raise FrameError(f"unknown message kind: {kind}")
    if not _LENGTH_RE.match(parts[1]):
        raise FrameError(f"non-decimal body length: {parts[1]!r}")
    length = int(parts[1])
    if max_body is not None and length > max_body:
        remaining = length + 1  # body plus trailing newline
        while remaining > 0:
            chunk = stream.read(min(remaining, _DRAIN_CHUNK))
            if not chunk:
                raise FrameError("stream ended mid-body")
            remaining -= len(chunk)
        raise BodyTooLarge(kind, length, max_body)
    body = stream.read(length)
    if len(body) != length:
        raise FrameError(f"stream ended mid-body (wanted {length} bytes, got {len(body)})")
    trailer = stream.read(1)
    if trailer != b"\n":
        raise FrameError("missing trailing newline after body")
    return Message(kind, body)


@dataclass(frozen=True)
class ServerInfo:
    """Parsed HELLO body."""

    protocol_version: int
    session_name: str


def hello_body(session_name: str) -> bytes:
    value = make_list([Symbol("bridge"), PROTOCOL_VERSION, session_name])
    return print_sexpr(value).encode("utf-8")


def parse_hello(body: bytes) -> ServerInfo:
    """Raises ValueError if the body is not a well-formed HELLO."""
    try:
        value = parse_sexpr(body.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise ValueError(f"malformed HELLO body: {exc}") from None
    items = as_list(value)
    if (
        items is None
        or len(items) != 3
        or not isinstance(items[0], Symbol)
        or items[0].name != "bridge"
        or isinstance(items[1], bool)
        or not isinstance(items[1], int)
        or not isinstance(items[2], str)
    ):
        raise ValueError(f"malformed HELLO body: {body!r}")
    return ServerInfo(protocol_version=items[1], session_name=items[2])


def parse_endpoint(text: str) -> "tuple[str, int]":
    """Parse a HOST:PORT endpoint string; raises ValueError."""
    host, sep, port_text = text.rpartition(":")
    if not sep or not host or not port_text.isdigit():
        raise ValueError(f"expected HOST:PORT, got {text!r}")
    port = int(port_text)
    if port > 65535:
        raise ValueError(f"port {port} out of range in {text!r}")
    if host.startswith("[") and host.endswith("]"):
        host = host[1:-1]
    return host, port


def is_valid_transcript(kinds: Sequence[str]) -> bool:
    """Check a complete per-connection sequence of server message kinds
    against HELLO READY (STDOUT* (RETURN | RETURN_JSON | ERROR) READY)*."""
    if len(kinds) < 2 or kinds[0] != "HELLO" or kinds[1] != "READY":
        return False
    state = "idle"  # idle | reply
    for kind in kinds[2:]:
        if kind == "STDOUT":
            if state not in ("idle", "reply"):
                return False
            state = "reply"
        elif kind in ("RETURN", "RETURN_JSON", "ERROR"):
            if state not in ("idle", "reply"):
                return False
            state = "need_ready"
        elif kind == "READY":
            if state != "need_ready":
                return False
            state = "idle"
        else:
            return False
    return state == "idle"
