"""WebSocket front door for the session server.

One canonical-encoded message per text frame.  A client's first frame must
be a join control event whose data names the session, client id and role;
the server answers with the join acknowledgment, then streams stamped log
envelopes.  Submissions are acknowledged (or rejected with the expected
seq) on the same connection.  Static materials are served under /assets.
"""

from __future__ import annotations

import asyncio
import logging
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from . import protocol
from .protocol import ControlEventMessage, ParseError, canonical_json
from .server import (
    SeqGapError,
    SessionError,
    SessionLogEntry,
    SessionServer,
    encode_entry,
)

logger = logging.getLogger(__name__)


def _error_frame(reason: str, **extra) -> str:
    return canonical_json({"kind": "error", "reason": reason, **extra})


def create_app(srv: SessionServer, assets_dir: str | None = None,
               log_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="syncroom")
    app.state.server = srv

    if assets_dir:
        app.mount("/assets", StaticFiles(directory=assets_dir), name="assets")

    @app.post("/sessions")
    async def create_session(body: dict):
        presenter = body.get("presenter-id", "")
        if not presenter:
            raise HTTPException(400, "presenter-id required")
        return {"session-id": srv.create_session(presenter)}

    @app.get("/sessions")
    async def list_sessions():
        return {"sessions": srv.session_ids()}

    @app.get("/sessions/{session_id}/log")
    async def get_log(session_id: str):
        try:
            entries = srv.log_entries(session_id)
        except SessionError as exc:
            raise HTTPException(404, str(exc)) from exc
        from fastapi.responses import PlainTextResponse
        text = "".join(encode_entry(e).decode("utf-8") + "\n" for e in entries)
        if log_dir:
            srv.persist_log(session_id, Path(log_dir) / f"{session_id}.log")
        return PlainTextResponse(text, media_type="application/x-ndjson")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session_id = client_id = None
        queue: asyncio.Queue[SessionLogEntry] = asyncio.Queue()
        loop = asyncio.get_running_loop()

        try:
            first = await ws.receive_text()
            msg = protocol.deserialize(first)
            data = msg.data or {}
            if (not isinstance(msg, ControlEventMessage) or msg.control_type != "join"
                    or not all(k in data for k in ("session-id", "client-id", "role"))):
                await ws.send_text(_error_frame(
                    "first frame must be a join control event with "
                    "session-id, client-id and role"))
                await ws.close()
                return
            session_id, client_id = data["session-id"], data["client-id"]
            ack = srv.join(session_id, client_id, data["role"])
            srv.set_on_entry(session_id, client_id,
                             lambda entry: loop.call_soon_threadsafe(
                                 queue.put_nowait, entry))
            await ws.send_text(ack.encode().decode("utf-8"))
        except ParseError as exc:
            await ws.send_text(_error_frame(str(exc)))
            await ws.close()
            return
        except SessionError as exc:
            await ws.send_text(_error_frame(str(exc)))
            await ws.close()
            return
        except WebSocketDisconnect:
            return

        async def pump():
            while True:
                entry = await queue.get()
                await ws.send_text(encode_entry(entry).decode("utf-8"))

        pump_task = asyncio.create_task(pump())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = protocol.deserialize(raw)
                except ParseError as exc:
                    await ws.send_text(_error_frame(str(exc)))
                    continue
                data = msg.data or {}
                # A resync frame without a state payload is a request for one;
                # the reply goes to this client only.
                if (isinstance(msg, ControlEventMessage) and msg.control_type == "resync"
                        and "media-state" not in data):
                    try:
                        reply = srv.resync(session_id, client_id, data.get("media-id", ""))
                    except SessionError as exc:
                        await ws.send_text(_error_frame(str(exc)))
                        continue
                    await ws.send_text(protocol.serialize(reply).decode("utf-8"))
                    continue
                try:
                    result = srv.submit(session_id, client_id, msg)
                except SeqGapError as exc:
                    await ws.send_text(_error_frame(
                        str(exc), **{"expected-seq": exc.expected}))
                    continue
                except (SessionError, protocol.EncodeError) as exc:
                    await ws.send_text(_error_frame(str(exc)))
                    continue
                ackobj = {"kind": "submit-ack", "global-seq": result.global_seq}
                if result.error is not None:
                    ackobj["error"] = result.error
                await ws.send_text(canonical_json(ackobj))
        except WebSocketDisconnect:
            pass
        finally:
            pump_task.cancel()
            if session_id and client_id:
                try:
                    srv.leave(session_id, client_id)
                except SessionError:
                    pass

    return app
