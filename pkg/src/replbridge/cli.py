"""Command-line entry points.

``serve`` starts a server, ``repl`` is an interactive terminal client,
``exec`` runs a single command for scripting.  ``repl`` and ``exec`` are
thin clients: they send command text verbatim and render the streamed
reply; the server is the only syntax authority.

Exit codes: 0 success / clean shutdown, 1 usage, bind, or connect
problems, 2 when an ``exec`` command fails on the server.
"""

from __future__ import annotations

import argparse
import logging
import os
import signal
import sys
import threading
from typing import Optional

from .client import (
    BridgeError,
    ConnectError,
    ConnectionClosed,
    HandshakeError,
    ProtocolError,
    connect,
)
from .protocol import WS_PATH
from .server import BindError, BridgeServer, ServerConfig

__all__ = ["main", "run"]


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2
    def error(self, message: str) -> "None":
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="replbridge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    serve = sub.add_parser("serve", help="start a server with a fresh session")
    serve.add_argument(
        "--listen",
        default=os.environ.get("BRIDGE_LISTEN"),
        metavar="HOST:PORT",
        help="TCP listen endpoint (default: $BRIDGE_LISTEN)",
    )
    serve.add_argument("--ws-listen", metavar="HOST:PORT", help="WebSocket listen endpoint")
    serve.add_argument("--session-name", default="default", metavar="NAME")
    serve.add_argument("--max-clients", type=int, default=64, metavar="N")
    serve.add_argument("--max-command-bytes", type=int, default=1024 * 1024, metavar="N")
    serve.set_defaults(func=cmd_serve)

    for name, help_text in (
        ("repl", "interactive prompt against a running server"),
        ("exec", "run one command and exit"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument(
            "--connect",
            default=os.environ.get("BRIDGE_CONNECT"),
            metavar="HOST:PORT",
            help="server endpoint (default: $BRIDGE_CONNECT)",
        )
        cmd.add_argument(
            "--json",
            action="store_true",
            help="send COMMAND_JSON and print the JSON value text",
        )
        cmd.add_argument("--connect-timeout", type=float, default=10.0, metavar="SECONDS")
    sub.choices["exec"].add_argument("--command", required=True, metavar="TEXT")
    sub.choices["repl"].set_defaults(func=cmd_repl)
    sub.choices["exec"].set_defaults(func=cmd_exec)
    return parser


def main(argv: "Optional[list[str]]" = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConnectError, HandshakeError, BindError, ValueError) as exc:
        print(f"replbridge: error: {exc}", file=sys.stderr)
        return 1
    except (ProtocolError, ConnectionClosed) as exc:
        print(f"replbridge: connection failed: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


# -- serve -----------------------------------------------------------------


def cmd_serve(args) -> int:
    if args.listen is None and args.ws_listen is None:
        print(
            "replbridge: error: serve needs --listen or --ws-listen "
            "(or $BRIDGE_LISTEN)",
            file=sys.stderr,
        )
        return 1
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    config = ServerConfig(
        tcp_listen=args.listen,
        ws_listen=args.ws_listen,
        session_name=args.session_name,
        max_clients=args.max_clients,
        max_command_bytes=args.max_command_bytes,
    )
    server = BridgeServer(config)
    server.start()
    try:
        if server.tcp_address is not None:
            host, port = server.tcp_address
            print(f"listening tcp://{host}:{port}", flush=True)
        if server.ws_address is not None:
            host, port = server.ws_address
            print(f"listening ws://{host}:{port}{WS_PATH}", flush=True)
        stop = threading.Event()
        for signum in (signal.SIGINT, signal.SIGTERM):
            signal.signal(signum, lambda *_: stop.set())
        stop.wait()
        print("shutting down", file=sys.stderr, flush=True)
    finally:
        server.stop()
    return 0


# -- repl ------------------------------------------------------------------


def expression_complete(text: str) -> bool:
    """Submission heuristic only: balanced parentheses outside strings and
    at least one token.  Real parsing stays on the server."""
    depth = 0
    in_string = False
    escaped = False
    saw_token = False
    for ch in text:
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
            saw_token = True
        elif ch == "(":
            depth += 1
            saw_token = True
        elif ch == ")":
            depth -= 1
            if depth <= 0:
                return True
        elif not ch.isspace():
            saw_token = True
    return saw_token and depth == 0 and not in_string


def cmd_repl(args) -> int:
    if args.connect is None:
        print(
            "replbridge: error: repl needs --connect or $BRIDGE_CONNECT",
            file=sys.stderr,
        )
        return 1
    mode = "json" if args.json else "sexpr"
    interactive = sys.stdin.isatty()
    conn = connect(args.connect, connect_timeout=args.connect_timeout)
    try:
        info = conn.server_info
        if interactive:
            print(f'connected to session "{info.session_name}" (protocol {info.protocol_version})')
        pending: "list[str]" = []
        while True:
            prompt = ""
            if interactive:
                prompt = "......> " if pending else "bridge> "
            try:
                line = input(prompt)
            except EOFError:
                if interactive:
                    print()
                return 0
            except KeyboardInterrupt:
                print(file=sys.stderr)
                pending = []
                continue
            pending.append(line)
            text = "\n".join(pending)
            if not text.strip():
                pending = []
                continue
            if not expression_complete(text):
                continue
            pending = []
            at_line_start = True

            def stream(chunk: str) -> None:
                nonlocal at_line_start
                sys.stdout.write(chunk)
                sys.stdout.flush()
                if chunk:
                    at_line_start = chunk.endswith("\n")

            try:
                outcome = conn.run_command(text, mode=mode, on_stdout=stream)
            except BridgeError as exc:
                if not at_line_start:
                    sys.stdout.write("\n")
                    sys.stdout.flush()
                print(f"error: {exc}", file=sys.stderr)
                continue
            except KeyboardInterrupt:
                print("interrupted mid-command; closing connection", file=sys.stderr)
                return 130
            if not at_line_start:
                sys.stdout.write("\n")
            sys.stdout.write(outcome.value_text + "\n")
            sys.stdout.flush()
    finally:
        conn.close()


# -- exec ------------------------------------------------------------------


def cmd_exec(args) -> int:
    if args.connect is None:
        print(
            "replbridge: error: exec needs --connect or $BRIDGE_CONNECT",
            file=sys.stderr,
        )
        return 1

    def stream(chunk: str) -> None:
        sys.stdout.write(chunk)
        sys.stdout.flush()

    conn = connect(args.connect, connect_timeout=args.connect_timeout)
    try:
        outcome = conn.run_command(
            args.command, mode="json" if args.json else "sexpr", on_stdout=stream
        )
    except BridgeError as exc:
        print(f"replbridge: command failed: {exc}", file=sys.stderr)
        return 2
    finally:
        conn.close()
    sys.stdout.write(outcome.value_text + "\n")
    return 0
