"""Frame-level TCP test client that records everything it receives."""

import socket

from replbridge.protocol import Message, decode_message, encode_message


class _Tee:
    """Read-through wrapper that copies every byte into a sink."""

    def __init__(self, stream, sink: bytearray):
        self._stream = stream
        self._sink = sink

    def readline(self, limit: int = -1) -> bytes:
        data = self._stream.readline(limit)
        self._sink.extend(data)
        return data

    def read(self, n: int = -1) -> bytes:
        data = self._stream.read(n)
        self._sink.extend(data)
        return data


class RawClient:
    """Speaks raw frames and keeps a transcript plus the exact reply bytes."""

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.raw = bytearray()
        self._file = self.sock.makefile("rb")
        self._stream = _Tee(self._file, self.raw)
        self.transcript: "list[Message]" = []

    def recv(self):
        msg = decode_message(self._stream)
        if msg is not None:
            self.transcript.append(msg)
        return msg

    def send(self, kind: str, body) -> None:
        self.sock.sendall(encode_message(Message(kind, body)))

    def send_raw(self, data: bytes) -> None:
        self.sock.sendall(data)

    def handshake(self) -> Message:
        hello = self.recv()
        assert hello is not None and hello.kind == "HELLO"
        ready = self.recv()
        assert ready is not None and ready.kind == "READY"
        return hello

    def command(self, text, kind: str = "COMMAND") -> "list[Message]":
        """Send one command and read its full reply through READY."""
        self.send(kind, text)
        reply = []
        while True:
            msg = self.recv()
            assert msg is not None, "connection closed mid-reply"
            reply.append(msg)
            if msg.kind == "READY":
                return reply

    def kinds(self) -> "list[str]":
        return [m.kind for m in self.transcript]

    def close(self) -> None:
        # shut down first: the makefile reader holds the descriptor open,
        # so close() alone would not send FIN to the server
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._file.close()
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass

    def __enter__(self) -> "RawClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
