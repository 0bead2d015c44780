"""FastAPI application carrying the WebSocket transport.

Each protocol message is one text frame holding the JSON envelope
``{"kind": "<KIND>", "body": "<body text>"}``.  Kinds and the reply
grammar are identical to the TCP transport; only the framing differs.
``GET /`` reports session metadata for probes and the web console.
"""

from __future__ import annotations

import asyncio
from typing import TYPE_CHECKING

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, ValidationError

from .protocol import CLIENT_KINDS, PROTOCOL_VERSION, WS_PATH, BodyTooLarge

if TYPE_CHECKING:
    from .server import BridgeServer

__all__ = ["Frame", "SessionInfo", "create_app"]


class Frame(BaseModel):
    """The JSON envelope for one protocol message."""

    kind: str
    body: str = ""


class SessionInfo(BaseModel):
    session_name: str
    protocol_version: int
    connected_clients: int


async def _send(ws: WebSocket, kind: str, body: str) -> None:
    await ws.send_text(Frame(kind=kind, body=body).model_dump_json())


def create_app(server: "BridgeServer") -> FastAPI:
    app = FastAPI(title="replbridge", version="1")

    @app.get("/", response_model=SessionInfo)
    def info() -> SessionInfo:
        return SessionInfo(
            session_name=server.config.session_name,
            protocol_version=PROTOCOL_VERSION,
            connected_clients=server.connected_clients,
        )

    @app.websocket(WS_PATH)
    async def bridge_socket(ws: WebSocket) -> None:
        if not server.try_acquire_slot():
            await ws.close(code=1013)  # try again later
            return
        loop = asyncio.get_running_loop()
        try:
            await ws.accept()
            await _send(ws, "HELLO", server.hello_text())
            await _send(ws, "READY", "")
            while True:
                raw = await ws.receive_text()
                try:
                    frame = Frame.model_validate_json(raw)
                except ValidationError:
                    await ws.close(code=1002)
                    return
                if frame.kind not in CLIENT_KINDS:
                    await ws.close(code=1002)
                    return
                body = frame.body.encode("utf-8")
                if len(body) > server.config.max_command_bytes:
                    oversized = BodyTooLarge(
                        frame.kind, len(body), server.config.max_command_bytes
                    )
                    await _send(ws, "ERROR", str(oversized))
                    await _send(ws, "READY", "")
                    continue

                def emit(chunk: str) -> None:
                    # called from the evaluator's worker thread; block until
                    # the frame is on the wire so ordering matches emission
                    future = asyncio.run_coroutine_threadsafe(
                        _send(ws, "STDOUT", chunk), loop
                    )
                    try:
                        future.result()
                    except Exception:
                        pass  # peer gone; evaluation still completes

                kind, reply = await loop.run_in_executor(
                    None,
                    server.execute,
                    body,
                    frame.kind == "COMMAND_JSON",
                    emit,
                )
                await _send(ws, kind, reply.decode("utf-8"))
                await _send(ws, "READY", "")
        except WebSocketDisconnect:
            pass
        except Exception:
            pass  # send/receive failure; this connection only
        finally:
            server.release_slot()

    return app
