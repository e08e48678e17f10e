"""HTTP and WebSocket surface over the session service.

Thin transport layer: every payload in and out is the line-oriented
field:value format from the service module, served as plain text.  The
stream endpoint replays persisted round events past a client-supplied
last-seen round, then follows the live session until it completes.
"""

import asyncio
from typing import Optional

import uvicorn
from fastapi import FastAPI, Request, WebSocket
from fastapi.responses import PlainTextResponse

from .service import (
    PenniesService,
    ServiceError,
    UnknownSession,
    decode_frame,
    encode_frame,
)


def build_app(service: PenniesService) -> FastAPI:
    app = FastAPI(title="pennies", docs_url=None, redoc_url=None)
    app.state.service = service

    @app.exception_handler(ServiceError)
    async def on_service_error(request, exc):
        return PlainTextResponse(
            encode_frame({"error": exc.name}), status_code=exc.status
        )

    @app.post("/sessions")
    async def create(request: Request):
        body = (await request.body()).decode("utf-8", "replace")
        frame = await asyncio.to_thread(
            service.create_session, decode_frame(body)
        )
        return PlainTextResponse(frame)

    @app.post("/sessions/{sid}/moves")
    async def moves(sid: str, request: Request):
        body = (await request.body()).decode("utf-8", "replace")
        frame = await asyncio.to_thread(
            service.submit_move, sid, decode_frame(body)
        )
        return PlainTextResponse(frame)

    @app.get("/sessions/{sid}")
    async def snapshot(sid: str):
        return PlainTextResponse(service.snapshot(sid))

    @app.get("/sessions/{sid}/log")
    async def log(sid: str):
        return PlainTextResponse(service.log_bytes(sid))

    @app.websocket("/sessions/{sid}/stream")
    async def stream(ws: WebSocket, sid: str):
        await ws.accept()
        try:
            last_seen = int(ws.query_params.get("last", "0"))
        except ValueError:
            await ws.send_text(encode_frame({"error": "BadRequest"}))
            await ws.close()
            return
        try:
            session = service._session(sid)
        except UnknownSession as exc:
            await ws.send_text(encode_frame({"error": exc.name}))
            await ws.close()
            return
        sent = 0
        while True:
            events = session.events
            while sent < len(events):
                rnd, frame = events[sent]
                if rnd > last_seen:
                    await ws.send_text(frame)
                sent += 1
            if session.complete and sent == len(events):
                break
            await asyncio.sleep(0.02)
        await ws.close()

    return app


def serve(port: int, state_dir: str, seed: Optional[int] = None):
    """Run the service under uvicorn; blocks until interrupted."""
    app = build_app(PenniesService(state_dir, seed))
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
