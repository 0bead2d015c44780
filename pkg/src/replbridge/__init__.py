"""Expose an interactive S-expression session to client programs.

A server holds one shared evaluator session and serves it over TCP
(length-prefixed frames) and WebSocket (JSON envelopes).  This package
ships the value types and parser, the evaluator, the wire codec, a
client library, and a command-line front end.

Importing the server lives in :mod:`replbridge.server` (it pulls in the
web stack); everything exported here is dependency-light.
"""

from .client import (
    BridgeError,
    ClientConnection,
    ClientOutcome,
    ConnectError,
    ConnectionClosed,
    HandshakeError,
    ProtocolError,
    connect,
)
from .evaluator import CommandOutcome, Session, evaluate_command
from .jsonenc import UnencodableValue, sexpr_to_json, sexpr_to_json_text
from .protocol import (
    PROTOCOL_VERSION,
    WS_PATH,
    Message,
    ServerInfo,
    decode_message,
    encode_message,
    parse_hello,
)
from .sexpr import (
    NIL,
    T,
    Pair,
    SExprSyntaxError,
    Symbol,
    parse_sexpr,
    print_sexpr,
    sexpr_equal,
)

__all__ = [
    "BridgeError",
    "ClientConnection",
    "ClientOutcome",
    "ConnectError",
    "ConnectionClosed",
    "HandshakeError",
    "ProtocolError",
    "connect",
    "CommandOutcome",
    "Session",
    "evaluate_command",
    "UnencodableValue",
    "sexpr_to_json",
    "sexpr_to_json_text",
    "PROTOCOL_VERSION",
    "WS_PATH",
    "Message",
    "ServerInfo",
    "decode_message",
    "encode_message",
    "parse_hello",
    "NIL",
    "T",
    "Pair",
    "SExprSyntaxError",
    "Symbol",
    "parse_sexpr",
    "print_sexpr",
    "sexpr_equal",
]
