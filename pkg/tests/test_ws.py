import json
import urllib.request

import pytest
from websockets.sync.client import connect as ws_connect

from replbridge.protocol import parse_hello
from replbridge.server import BridgeServer, ServerConfig

from support import RawClient

RECV_TIMEOUT = 10


def ws_url(server) -> str:
    host, port = server.ws_address
    return f"ws://{host}:{port}/bridge"


def open_console(server):
    ws = ws_connect(ws_url(server), open_timeout=10)
    hello = recv_frame(ws)
    ready = recv_frame(ws)
    assert hello[0] == "HELLO" and ready == ("READY", "")
    return ws, hello


def recv_frame(ws):
    data = json.loads(ws.recv(timeout=RECV_TIMEOUT))
    return data["kind"], data.get("body", "")


def send_frame(ws, kind: str, body: str) -> None:
    ws.send(json.dumps({"kind": kind, "body": body}))


def run(ws, text: str, kind: str = "COMMAND"):
    send_frame(ws, kind, text)
    frames = []
    while True:
        frame = recv_frame(ws)
        frames.append(frame)
        if frame[0] == "READY":
            return frames


class TestWebSocket:
    def test_handshake_carries_session_info(self, ws_server):
        ws, hello = open_console(ws_server)
        with ws:
            info = parse_hello(hello[1].encode("utf-8"))
            assert info.protocol_version == 1
            assert info.session_name == "default"

    def test_simple_command(self, ws_server):
        ws, _ = open_console(ws_server)
        with ws:
            assert run(ws, "(+ 1 2)") == [("RETURN", "3"), ("READY", "")]

    def test_stdout_streams_before_return(self, ws_server):
        ws, _ = open_console(ws_server)
        with ws:
            frames = run(ws, '(progn (cw "a") (cw "b~%") (cw "c"))')
            assert frames == [
                ("STDOUT", "a"),
                ("STDOUT", "b\n"),
                ("STDOUT", "c"),
                ("RETURN", "NIL"),
                ("READY", ""),
            ]

    def test_json_mode(self, ws_server):
        ws, _ = open_console(ws_server)
        with ws:
            assert run(ws, "(list 1 2)", kind="COMMAND_JSON") == [
                ("RETURN_JSON", "[1,2]"),
                ("READY", ""),
            ]

    def test_error_then_recovery(self, ws_server):
        ws, _ = open_console(ws_server)
        with ws:
            frames = run(ws, "(")
            assert frames[0][0] == "ERROR"
            assert frames[0][1].startswith("syntax error at byte ")
            assert run(ws, "(+ 1 2)")[0] == ("RETURN", "3")

    def test_malformed_envelope_is_fatal(self, ws_server):
        ws, _ = open_console(ws_server)
        with ws:
            ws.send("this is not a JSON envelope")
            with pytest.raises(Exception):
                recv_frame(ws)

    def test_server_kind_from_client_is_fatal(self, ws_server):
        ws, _ = open_console(ws_server)
        with ws:
            send_frame(ws, "READY", "")
            with pytest.raises(Exception):
                recv_frame(ws)

    def test_oversized_command_is_error_not_fatal(self):
        server = BridgeServer(
            ServerConfig(ws_listen="127.0.0.1:0", max_command_bytes=1024)
        )
        server.start()
        try:
            ws, _ = open_console(server)
            with ws:
                frames = run(ws, "(list " + "1 " * 1000 + ")")
                assert frames[0][0] == "ERROR"
                assert "exceeds limit" in frames[0][1]
                assert run(ws, "(+ 1 2)")[0] == ("RETURN", "3")
        finally:
            server.stop()

    def test_max_clients_shared_with_ws(self):
        server = BridgeServer(ServerConfig(ws_listen="127.0.0.1:0", max_clients=1))
        server.start()
        try:
            ws, _ = open_console(server)
            with ws:
                with pytest.raises(Exception):
                    extra = ws_connect(ws_url(server), open_timeout=10)
                    extra.recv(timeout=2)
                assert run(ws, "(+ 1 2)")[0] == ("RETURN", "3")
        finally:
            server.stop()


class TestCrossTransport:
    def test_tcp_and_ws_share_one_session(self, dual_server):
        host, port = dual_server.tcp_address
        with RawClient(host, port) as tcp:
            tcp.handshake()
            tcp.command("(setq shared-flag 12)")
            ws, _ = open_console(dual_server)
            with ws:
                assert run(ws, "shared-flag")[0] == ("RETURN", "12")
                run(ws, "(setq shared-flag 13)")
            assert tcp.command("shared-flag")[0].body == b"13"


class TestInfoEndpoint:
    def test_info_reports_session_metadata(self, ws_server):
        host, port = ws_server.ws_address
        with urllib.request.urlopen(f"http://{host}:{port}/", timeout=10) as response:
            payload = json.load(response)
        assert payload["session_name"] == "default"
        assert payload["protocol_version"] == 1
        assert payload["connected_clients"] == 0

    def test_info_counts_connected_clients(self, ws_server):
        ws, _ = open_console(ws_server)
        with ws:
            host, port = ws_server.ws_address
            with urllib.request.urlopen(f"http://{host}:{port}/", timeout=10) as response:
                payload = json.load(response)
            assert payload["connected_clients"] == 1
