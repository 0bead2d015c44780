"""Server embedding one shared evaluator session behind TCP and WebSocket.

Every accepted connection gets its own protocol loop (HELLO, READY, then
one reply per command).  All connections share one Session; a single
process-wide lock serializes command evaluation, so a long command on
one connection delays commands from others while their connections stay
open.  Printed chunks are sent as STDOUT messages the moment the
evaluator produces them.

There is no authentication: every client has full control of the
session.  Binding a non-loopback address logs a loud warning.
"""

from __future__ import annotations

import asyncio
import logging
import socket
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

from .evaluator import Session, evaluate_command
from .jsonenc import UnencodableValue, sexpr_to_json_text
from .protocol import (
    CLIENT_KINDS,
    BodyTooLarge,
    FrameError,
    Message,
    decode_message,
    encode_message,
    hello_body,
    parse_endpoint,
)
from .sexpr import SExprSyntaxError, parse_sexpr, print_sexpr

__all__ = ["ServerConfig", "BindError", "BridgeServer"]

log = logging.getLogger("replbridge.server")

_LOOPBACK_HOSTS = ("localhost", "::1")


class BindError(Exception):
    """A listen endpoint could not be bound."""


@dataclass
class ServerConfig:
    tcp_listen: Optional[str] = None
    ws_listen: Optional[str] = None
    session_name: str = "default"
    max_clients: int = 64
    max_command_bytes: int = 1024 * 1024

    def __post_init__(self) -> None:
        if self.tcp_listen is None and self.ws_listen is None:
            raise ValueError("at least one of tcp_listen / ws_listen is required")
        if self.max_clients < 1:
            raise ValueError("max_clients must be at least 1")
        if self.max_command_bytes < 1024:
            raise ValueError("max_command_bytes must be at least 1024")
        for endpoint in (self.tcp_listen, self.ws_listen):
            if endpoint is not None:
                parse_endpoint(endpoint)


class _TcpConnection:
    """Per-connection send side.  The worker thread is the only writer;
    ``busy`` is held across each command's full reply so shutdown can
    wait for a message boundary."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.busy = threading.Lock()
        self.dead = False

    def send(self, msg: Message) -> None:
        if self.dead:
            return
        try:
            self.sock.sendall(encode_message(msg))
        except OSError:
            self.dead = True


class BridgeServer:
    """Owns the listeners, the connection workers, and the shared session."""

    def __init__(self, config: ServerConfig, session: "Session | None" = None):
        self.config = config
        self.session = session if session is not None else Session()
        self._command_lock = threading.Lock()
        self._slots_lock = threading.Lock()
        self._client_count = 0
        self._stopping = threading.Event()
        self._started = False
        self._tcp_sock: "socket.socket | None" = None
        self._tcp_addr: "tuple[str, int] | None" = None
        self._accept_thread: "threading.Thread | None" = None
        self._workers: "list[threading.Thread]" = []
        self._conns: "set[_TcpConnection]" = set()
        self._conns_lock = threading.Lock()
        self._ws_sock: "socket.socket | None" = None
        self._ws_addr: "tuple[str, int] | None" = None
        self._uv_server = None
        self._uv_thread: "threading.Thread | None" = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        if self._started:
            raise RuntimeError("server already started")
        self._started = True
        try:
            if self.config.tcp_listen is not None:
                self._tcp_sock = self._bind(self.config.tcp_listen)
                self._tcp_addr = self._tcp_sock.getsockname()[:2]
                self._accept_thread = threading.Thread(
                    target=self._accept_loop, name="bridge-accept", daemon=True
                )
                self._accept_thread.start()
            if self.config.ws_listen is not None:
                self._start_ws()
        except BaseException:
            self.stop()
            raise

    def stop(self) -> None:
        self._stopping.set()
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=10)
        if self._tcp_sock is not None:
            try:
                self._tcp_sock.close()
            except OSError:
                pass
        with self._conns_lock:
            conns = list(self._conns)
        for conn in conns:
            # taking busy waits for any in-flight reply to finish first
            with conn.busy:
                conn.dead = True
                try:
                    conn.sock.shutdown(socket.SHUT_RDWR)
                except OSError:
                    pass
        for worker in self._workers:
            worker.join(timeout=10)
        if self._uv_server is not None:
            self._uv_server.should_exit = True
        if self._uv_thread is not None:
            self._uv_thread.join(timeout=10)
        if self._ws_sock is not None:
            try:
                self._ws_sock.close()
            except OSError:
                pass

    def __enter__(self) -> "BridgeServer":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.stop()

    @property
    def tcp_address(self) -> "tuple[str, int] | None":
        return self._tcp_addr

    @property
    def ws_address(self) -> "tuple[str, int] | None":
        return self._ws_addr

    @property
    def connected_clients(self) -> int:
        with self._slots_lock:
            return self._client_count

    # -- shared command path -----------------------------------------------

    def execute(
        self, body: bytes, json_mode: bool, emit: "Callable[[str], None]"
    ) -> "tuple[str, bytes]":
        """Run one command body; returns the terminating reply as
        (kind, body).  STDOUT chunks go through ``emit`` as produced."""
        try:
            text = body.decode("utf-8")
        except UnicodeDecodeError as exc:
            return "ERROR", f"command is not valid UTF-8: {exc}".encode("utf-8")
        try:
            expr = parse_sexpr(text)
        except SExprSyntaxError as exc:
            return "ERROR", str(exc).encode("utf-8")
        with self._command_lock:
            outcome = evaluate_command(self.session, expr, emit=emit)
        if not outcome.ok:
            return "ERROR", outcome.error_message.encode("utf-8")
        if json_mode:
            try:
                return "RETURN_JSON", sexpr_to_json_text(outcome.value).encode("utf-8")
            except UnencodableValue as exc:
                return "ERROR", str(exc).encode("utf-8")
        return "RETURN", print_sexpr(outcome.value).encode("utf-8")

    def hello_text(self) -> str:
        return hello_body(self.config.session_name).decode("utf-8")

    def try_acquire_slot(self) -> bool:
        with self._slots_lock:
            if self._client_count >= self.config.max_clients:
                return False
            self._client_count += 1
            return True

    def release_slot(self) -> None:
        with self._slots_lock:
            self._client_count -= 1

    # -- TCP ----------------------------------------------------------------

    def _bind(self, endpoint: str) -> socket.socket:
        host, port = parse_endpoint(endpoint)
        family = socket.AF_INET6 if ":" in host else socket.AF_INET
        try:
            sock = socket.create_server((host, port), family=family)
        except OSError as exc:
            raise BindError(f"cannot bind {endpoint}: {exc}") from None
        if not (host.startswith("127.") or host in _LOOPBACK_HOSTS):
            log.warning(
                "listening on non-loopback address %s: any connecting client "
                "gets full, unauthenticated control of the session",
                endpoint,
            )
        return sock

    def _accept_loop(self) -> None:
        assert self._tcp_sock is not None
        # a blocked accept() is not woken by close() from another thread,
        # so poll with a short timeout and watch the stopping flag
        self._tcp_sock.settimeout(0.1)
        while not self._stopping.is_set():
            try:
                sock, _addr = self._tcp_sock.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            sock.settimeout(None)
            # replies are several small writes; without this each one can
            # stall behind the peer's delayed ACK
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            if not self.try_acquire_slot():
                sock.close()
                continue
            self._workers = [w for w in self._workers if w.is_alive()]
            worker = threading.Thread(
                target=self._run_tcp_worker, args=(sock,), name="bridge-conn", daemon=True
            )
            self._workers.append(worker)
            worker.start()

    def _run_tcp_worker(self, sock: socket.socket) -> None:
        conn = _TcpConnection(sock)
        with self._conns_lock:
            self._conns.add(conn)
        try:
            stream = sock.makefile("rb")
            conn.send(Message("HELLO", hello_body(self.config.session_name)))
            conn.send(Message("READY"))
            while not conn.dead and not self._stopping.is_set():
                try:
                    msg = decode_message(stream, max_body=self.config.max_command_bytes)
                except BodyTooLarge as exc:
                    with conn.busy:
                        conn.send(Message("ERROR", str(exc)))
                        conn.send(Message("READY"))
                    continue
                except (FrameError, OSError, ValueError):
                    return
                if msg is None or msg.kind not in CLIENT_KINDS:
                    return
                with conn.busy:
                    kind, body = self.execute(
                        msg.body,
                        json_mode=(msg.kind == "COMMAND_JSON"),
                        emit=lambda chunk: conn.send(Message("STDOUT", chunk)),
                    )
                    conn.send(Message(kind, body))
                    conn.send(Message("READY"))
        finally:
            with self._conns_lock:
                self._conns.discard(conn)
            try:
                sock.close()
            except OSError:
                pass
            self.release_slot()

    # -- WebSocket -----------------------------------------------------------

    def _start_ws(self) -> None:
        import uvicorn

        from .wsapp import create_app

        assert self.config.ws_listen is not None
        self._ws_sock = self._bind(self.config.ws_listen)
        self._ws_addr = self._ws_sock.getsockname()[:2]
        uv_config = uvicorn.Config(
            create_app(self),
            log_level="warning",
            lifespan="off",
            timeout_graceful_shutdown=3,
        )
        self._uv_server = uvicorn.Server(uv_config)
        self._uv_thread = threading.Thread(
            target=self._run_uvicorn, name="bridge-ws", daemon=True
        )
        self._uv_thread.start()
        deadline = time.monotonic() + 15
        while not self._uv_server.started:
            if not self._uv_thread.is_alive():
                raise BindError(f"WebSocket listener failed to start on {self.config.ws_listen}")
            if time.monotonic() > deadline:
                raise BindError("WebSocket listener did not start within 15s")
            time.sleep(0.01)

    def _run_uvicorn(self) -> None:
        assert self._uv_server is not None and self._ws_sock is not None
        try:
            asyncio.run(self._uv_server.serve(sockets=[self._ws_sock]))
        except Exception:
            log.exception("WebSocket listener crashed")
