import pytest

from replbridge.server import BridgeServer, ServerConfig


def start_server(**kwargs) -> BridgeServer:
    server = BridgeServer(ServerConfig(**kwargs))
    server.start()
    return server


@pytest.fixture
def tcp_server():
    server = start_server(tcp_listen="127.0.0.1:0")
    yield server
    server.stop()


@pytest.fixture
def ws_server():
    server = start_server(ws_listen="127.0.0.1:0")
    yield server
    server.stop()


@pytest.fixture
def dual_server():
    server = start_server(tcp_listen="127.0.0.1:0", ws_listen="127.0.0.1:0")
    yield server
    server.stop()
