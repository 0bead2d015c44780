"""Client library for the TCP transport.

Wraps the socket, the framing, and the reply grammar so callers see one
blocking call per command: send it, stream printed chunks, and get the
value back or a BridgeError raised.  A connection is single-owner and
strictly request/reply; open several connections for parallelism.
"""

from __future__ import annotations

import socket
from dataclasses import dataclass
from typing import Callable, Optional

from .protocol import (
    PROTOCOL_VERSION,
    SERVER_KINDS,
    FrameError,
    Message,
    ServerInfo,
    decode_message,
    encode_message,
    parse_endpoint,
    parse_hello,
)

__all__ = [
    "AWAITING_HELLO",
    "READY",
    "IN_FLIGHT",
    "DEAD",
    "ConnectError",
    "HandshakeError",
    "BridgeError",
    "ProtocolError",
    "ConnectionClosed",
    "ClientOutcome",
    "ClientConnection",
    "connect",
]

AWAITING_HELLO = "awaiting-hello"
READY = "ready"
IN_FLIGHT = "in-flight"
DEAD = "dead"


class ConnectError(Exception):
    """The endpoint could not be reached (or parsed)."""


class HandshakeError(Exception):
    """The peer did not present a valid version-1 HELLO and READY."""


class BridgeError(Exception):
    """Server-reported command failure; the message text is exactly the
    ERROR body.  The connection stays usable."""


class ProtocolError(Exception):
    """The server violated the reply grammar; the connection is dead."""


class ConnectionClosed(Exception):
    """The transport is gone (peer closed, I/O failure, or local close)."""


@dataclass(frozen=True)
class ClientOutcome:
    """Result of one successful command."""

    value_text: str
    stdout: str
    mode: str


class ClientConnection:
    """One live connection; use :func:`connect` to create it."""

    def __init__(self, sock: socket.socket, endpoint: str):
        self._sock = sock
        self._stream = sock.makefile("rb")
        self._endpoint = endpoint
        self._state = AWAITING_HELLO
        self.server_info: Optional[ServerInfo] = None
        self.last_error: Optional[str] = None

    @property
    def state(self) -> str:
        return self._state

    @property
    def endpoint(self) -> str:
        return self._endpoint

    # -- lifecycle ---------------------------------------------------------

    def close(self) -> None:
        """Idempotent; afterwards every operation raises ConnectionClosed."""
        self._state = DEAD
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._stream.close()
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self) -> "ClientConnection":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- command execution -------------------------------------------------

    def run_command(
        self,
        command_text: str,
        mode: str = "sexpr",
        on_stdout: "Callable[[str], None] | None" = None,
    ) -> ClientOutcome:
        """Run one command and consume its full reply.

        Printed chunks are appended to the outcome's stdout and handed to
        ``on_stdout`` as they arrive.  A server-reported failure raises
        BridgeError after the reply is fully consumed; the connection is
        then immediately reusable.  An exception from ``on_stdout`` is
        deferred until the reply completes and re-raised then, unless the
        server reported an error, which takes precedence.
        """
        if not command_text:
            raise ValueError("command text must be nonempty")
        if mode not in ("sexpr", "json"):
            raise ValueError(f"unknown mode: {mode!r}")
        if self._state == DEAD:
            raise ConnectionClosed("connection is closed")
        if self._state != READY:
            raise ProtocolError(f"connection is not ready (state: {self._state})")

        self._state = IN_FLIGHT
        self._send(Message("COMMAND_JSON" if mode == "json" else "COMMAND", command_text))
        chunks: "list[str]" = []
        callback_error: "Exception | None" = None
        while True:
            msg = self._read_server_message()
            if msg.kind == "STDOUT":
                chunk = msg.text()
                chunks.append(chunk)
                if on_stdout is not None and callback_error is None:
                    try:
                        on_stdout(chunk)
                    except Exception as exc:
                        callback_error = exc  # keep consuming the reply
                    except BaseException:
                        self._die()
                        raise
                continue
            if msg.kind in ("RETURN", "RETURN_JSON", "ERROR"):
                expected = "RETURN_JSON" if mode == "json" else "RETURN"
                if msg.kind != "ERROR" and msg.kind != expected:
                    self._die()
                    raise ProtocolError(f"got {msg.kind} for a {mode}-mode command")
                ready = self._read_server_message()
                if ready.kind != "READY":
                    self._die()
                    raise ProtocolError(f"expected READY after {msg.kind}, got {ready.kind}")
                self._state = READY
                if msg.kind == "ERROR":
                    self.last_error = msg.text()
                    raise BridgeError(self.last_error)
                if callback_error is not None:
                    raise callback_error
                return ClientOutcome(msg.text(), "".join(chunks), mode)
            self._die()
            raise ProtocolError(f"unexpected {msg.kind} during a reply")

    # -- internals ---------------------------------------------------------

    def _die(self) -> None:
        self._state = DEAD
        try:
            self._sock.close()
        except OSError:
            pass

    def _send(self, msg: Message) -> None:
        try:
            self._sock.sendall(encode_message(msg))
        except OSError as exc:
            self._die()
            raise ConnectionClosed(f"send failed: {exc}") from None

    def _read_server_message(self) -> Message:
        try:
            msg = decode_message(self._stream)
        except FrameError as exc:
            self._die()
            raise ProtocolError(str(exc)) from None
        except OSError as exc:
            self._die()
            raise ConnectionClosed(f"receive failed: {exc}") from None
        if msg is None:
            self._die()
            raise ConnectionClosed("server closed the connection")
        if msg.kind not in SERVER_KINDS:
            self._die()
            raise ProtocolError(f"client-only kind {msg.kind} sent by server")
        return msg

    def _handshake(self) -> None:
        hello = self._handshake_read()
        if hello.kind != "HELLO":
            raise HandshakeError(f"expected HELLO first, got {hello.kind}")
        try:
            info = parse_hello(hello.body)
        except ValueError as exc:
            raise HandshakeError(str(exc)) from None
        if info.protocol_version != PROTOCOL_VERSION:
            raise HandshakeError(
                f"unsupported protocol version {info.protocol_version} "
                f"(supported: {PROTOCOL_VERSION})"
            )
        ready = self._handshake_read()
        if ready.kind != "READY":
            raise HandshakeError(f"expected READY after HELLO, got {ready.kind}")
        self.server_info = info
        self._state = READY

    def _handshake_read(self) -> Message:
        try:
            msg = decode_message(self._stream)
        except (FrameError, OSError) as exc:
            raise HandshakeError(f"handshake failed: {exc}") from None
        if msg is None:
            raise HandshakeError("connection closed before handshake completed")
        return msg


def connect(
    endpoint: str,
    connect_timeout: float = 10.0,
    read_timeout: "float | None" = None,
) -> ClientConnection:
    """Open a connection to HOST:PORT and complete the handshake.

    ``read_timeout`` bounds each wait for a server message during
    commands; the default (no limit) tolerates long evaluations.
    """
    try:
        host, port = parse_endpoint(endpoint)
    except ValueError as exc:
        raise ConnectError(str(exc)) from None
    try:
        sock = socket.create_connection((host, port), timeout=connect_timeout)
    except OSError as exc:
        raise ConnectError(f"cannot connect to {endpoint}: {exc}") from None
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    sock.settimeout(read_timeout)
    conn = ClientConnection(sock, endpoint)
    try:
        conn._handshake()
    except BaseException:
        conn.close()
        raise
    return conn
