"""Streaming chat service: WebSocket dialogue in, paced avatar frames out.

Wire protocol (UTF-8 text frames, one JSON message each):

    client -> server
        {"type": "chat",  "session_id": "...", "text": "..."}
        {"type": "audio", "session_id": "...", "wav_b64": "..."}

    server -> client
        {"type": "utterance_start", "utterance_id", "reply_text", "fps"}
        {"type": "frame", "utterance_id", "seq", "timestamp_ms", "frame_url"}
        {"type": "utterance_end", "utterance_id", "latency": {embed_ms,
             match_ms, reduce_ms, interpolate_ms, total_ms, real_time_factor}}
        {"type": "warning", "code", "message"}
        {"type": "error", "code", "message"}

Frames are paced at the utterance's fps and fetched by URL from
``GET /frames/{library_id}/{frame_key}``; late frames (client stalled more
than DROP_LATENESS_S behind schedule) are dropped in favor of recency.
"""

from __future__ import annotations

import asyncio
import base64
import io
import itertools
import json
import re
import threading
import time
import wave
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from aiohttp import WSMsgType, web

from .adapters import RemoteLlm, StubLlm, StubTts, respond_with_fallback
from .library import load_library
from .pipeline import (LatencyReport, PipelineContext, add_embed_time,
                       iter_utterance, summarize_reports)

DROP_LATENESS_S = 5.0     # frames further behind schedule than this are dropped
SYNTH_CACHE_FRAMES = 8192 # most recent interpolated frames kept fetchable

_LIBRARY_KEY_RE = re.compile(r"^(\d{6})\.(jpg|png)$")


@dataclass
class ServiceConfig:
    library: str = ""
    index_mode: str = "exact"
    candidate_k: int = 32
    target_fps: float | None = None
    interp_mode: str = "param_space"
    adapter: str = "stub"           # stub | remote
    remote_endpoint: str = ""
    remote_model: str = "default"
    remote_credential_env: str = ""
    fallback_to_stub: bool = True
    bind: str = "127.0.0.1:8089"
    static_dir: str = ""

    @property
    def host_port(self) -> tuple[str, int]:
        host, _, port = self.bind.rpartition(":")
        return host or "127.0.0.1", int(port)


def parse_config(path) -> ServiceConfig:
    """Read a key=value config file; unknown keys are rejected."""
    cfg = ServiceConfig()
    known = set(cfg.__dataclass_fields__)
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        current = getattr(cfg, key)
        if isinstance(current, bool):
            setattr(cfg, key, value.lower() in ("1", "true", "yes", "on"))
        elif key == "target_fps":
            cfg.target_fps = float(value) if value else None
        elif isinstance(current, int):
            setattr(cfg, key, int(value))
        else:
            setattr(cfg, key, value)
    return cfg


@dataclass
class SessionState:
    session_id: str
    history: list[tuple[str, str]] = field(default_factory=list)
    utterances: int = 0
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)


class MetricsAggregator:
    """Latency rollup behind a lock; written per utterance, read by /metrics."""

    def __init__(self):
        self._lock = threading.Lock()
        self._reports: list[LatencyReport] = []
        self.frames_sent = 0
        self.frames_dropped = 0

    def add_report(self, report: LatencyReport) -> None:
        with self._lock:
            self._reports.append(report)

    def add_frames(self, sent: int, dropped: int) -> None:
        with self._lock:
            self.frames_sent += sent
            self.frames_dropped += dropped

    def render_text(self) -> str:
        with self._lock:
            lines = [f"utterances_total={len(self._reports)}",
                     f"frames_sent_total={self.frames_sent}",
                     f"frames_dropped_total={self.frames_dropped}"]
            if self._reports:
                for key, value in summarize_reports(self._reports).items():
                    lines.append(f"{key}_mean={value:.3f}")
        return "\n".join(lines) + "\n"


class AvatarService:
    """One shared immutable pipeline context served to many sessions."""

    def __init__(self, ctx: PipelineContext, llm, tts, *,
                 library_id: str = "default", fallback_llm=None,
                 static_dir: str | Path | None = None):
        self.ctx = ctx
        self.llm = llm
        self.tts = tts
        self.fallback_llm = fallback_llm
        self.library_id = library_id
        self.static_dir = Path(static_dir) if static_dir else None
        self.metrics = MetricsAggregator()
        self._sessions: dict[str, SessionState] = {}
        self._utterance_ids = itertools.count(1)
        self._synth_cache: OrderedDict[str, bytes] = OrderedDict()

    @classmethod
    def from_config(cls, config: ServiceConfig) -> "AvatarService":
        if not config.library:
            raise ValueError("config must name a library directory")
        lib = load_library(config.library)
        ctx = PipelineContext.create(
            lib, index_mode=config.index_mode, candidate_k=config.candidate_k,
            target_fps=config.target_fps, interp_mode=config.interp_mode)
        if config.adapter == "remote":
            llm = RemoteLlm(endpoint=config.remote_endpoint,
                            model=config.remote_model,
                            credential_env=config.remote_credential_env)
            fallback = StubLlm() if config.fallback_to_stub else None
        elif config.adapter == "stub":
            llm, fallback = StubLlm(), None
        else:
            raise ValueError(f"unknown adapter {config.adapter!r}")
        tts = StubTts(cfg=ctx.embedder_cfg)
        return cls(ctx, llm, tts, library_id=Path(config.library).name or "default",
                   fallback_llm=fallback, static_dir=config.static_dir or None)

    # -- HTTP ---------------------------------------------------------------

    def make_app(self) -> web.Application:
        app = web.Application()
        app.router.add_get("/ws", self.handle_ws)
        app.router.add_get("/health", self.handle_health)
        app.router.add_get("/metrics", self.handle_metrics)
        app.router.add_get("/frames/{library_id}/{frame_key}", self.handle_frame)
        app.router.add_get("/", self.handle_root)
        if self.static_dir and self.static_dir.is_dir():
            app.router.add_static("/static/", self.static_dir)
        return app

    async def handle_health(self, request) -> web.Response:
        return web.Response(text="ok\n")

    async def handle_metrics(self, request) -> web.Response:
        return web.Response(text=self.metrics.render_text())

    async def handle_root(self, request) -> web.Response:
        if self.static_dir:
            index = self.static_dir / "index.html"
            if index.exists():
                return web.Response(body=index.read_bytes(),
                                    content_type="text/html")
        return web.Response(
            text="<html><body><h1>avatar service</h1>"
                 "<p>WebSocket endpoint at /ws</p></body></html>",
            content_type="text/html")

    async def handle_frame(self, request) -> web.Response:
        if request.match_info["library_id"] != self.library_id:
            raise web.HTTPNotFound(text="unknown library")
        key = request.match_info["frame_key"]
        data = self._synth_cache.get(key)
        fmt = key.rsplit(".", 1)[-1]
        if data is None:
            m = _LIBRARY_KEY_RE.match(key)
            if not m or fmt != self.ctx.library.image_format:
                raise web.HTTPNotFound(text="unknown frame")
            frame_id = int(m.group(1))
            if not 0 <= frame_id < self.ctx.library.k_frames:
                raise web.HTTPNotFound(text="frame id out of range")
            data = self.ctx.library.image_bytes(frame_id)
        ctype = "image/jpeg" if fmt == "jpg" else "image/png"
        return web.Response(body=data, content_type=ctype)

    # -- WebSocket ----------------------------------------------------------

    async def handle_ws(self, request) -> web.WebSocketResponse:
        ws = web.WebSocketResponse()
        await ws.prepare(request)
        async for msg in ws:
            if msg.type != WSMsgType.TEXT:
                continue
            try:
                doc = json.loads(msg.data)
            except json.JSONDecodeError:
                await self._send(ws, {"type": "error", "code": "bad_message",
                                      "message": "not valid JSON"})
                continue
            await self._dispatch(ws, doc)
        return ws

    async def _send(self, ws, payload: dict) -> None:
        if not ws.closed:
            await ws.send_str(json.dumps(payload))

    async def _dispatch(self, ws, doc: dict) -> None:
        mtype = doc.get("type")
        session_id = doc.get("session_id")
        if mtype not in ("chat", "audio"):
            await self._send(ws, {"type": "error", "code": "bad_message",
                                  "message": f"unknown message type {mtype!r}"})
            return
        if not session_id or not isinstance(session_id, str):
            await self._send(ws, {"type": "error", "code": "bad_message",
                                  "message": "session_id is required"})
            return
        if mtype == "chat":
            await self._handle_chat(ws, session_id, doc.get("text", ""))
        else:
            await self._handle_audio(ws, session_id, doc.get("wav_b64", ""))

    async def _handle_chat(self, ws, session_id: str, text) -> None:
        if not isinstance(text, str) or not text.strip():
            await self._send(ws, {"type": "error", "code": "empty_text",
                                  "message": "chat text is empty"})
            return
        session = self._sessions.setdefault(session_id, SessionState(session_id))
        async with session.lock:
            loop = asyncio.get_running_loop()
            history_before = list(session.history)
            try:
                reply, warning = await loop.run_in_executor(
                    None, respond_with_fallback, self.llm, self.fallback_llm,
                    history_before, text)
            except Exception as exc:
                await self._send(ws, {"type": "error", "code": "adapter_error",
                                      "message": str(exc)})
                return
            if warning:
                await self._send(ws, {"type": "warning",
                                      "code": "adapter_fallback",
                                      "message": warning})
            try:
                t0 = time.perf_counter()
                stream = await loop.run_in_executor(None, self.tts.synthesize, reply)
                embed_ms = (time.perf_counter() - t0) * 1000.0
            except Exception as exc:
                await self._send(ws, {"type": "error", "code": "adapter_error",
                                      "message": str(exc)})
                return
            session.history.append(("user", text))
            session.history.append(("assistant", reply))
            session.utterances += 1
            await self._stream_utterance(ws, session, stream, reply, embed_ms)

    async def _handle_audio(self, ws, session_id: str, wav_b64) -> None:
        session = self._sessions.setdefault(session_id, SessionState(session_id))
        async with session.lock:
            loop = asyncio.get_running_loop()
            try:
                t0 = time.perf_counter()
                samples, rate = _decode_wav_b64(wav_b64)
                stream = await loop.run_in_executor(
                    None, self.ctx.embed_audio, samples, rate)
                embed_ms = (time.perf_counter() - t0) * 1000.0
            except Exception as exc:
                await self._send(ws, {"type": "error", "code": "audio_error",
                                      "message": str(exc)})
                return
            session.utterances += 1
            await self._stream_utterance(ws, session, stream, "", embed_ms)

    async def _stream_utterance(self, ws, session: SessionState,
                                stream, reply_text: str,
                                embed_ms: float = 0.0) -> None:
        loop = asyncio.get_running_loop()
        utterance_id = f"u{next(self._utterance_ids)}"
        await self._send(ws, {"type": "utterance_start",
                              "utterance_id": utterance_id,
                              "reply_text": reply_text,
                              "fps": self.ctx.target_fps})

        queue: asyncio.Queue = asyncio.Queue()

        def produce():
            try:
                for event in iter_utterance(self.ctx, stream):
                    loop.call_soon_threadsafe(queue.put_nowait, event)
            except Exception as exc:  # surfaced as an error event below
                loop.call_soon_threadsafe(queue.put_nowait, ("failed", exc))
            loop.call_soon_threadsafe(queue.put_nowait, ("done", None))

        producer = loop.run_in_executor(None, produce)

        interval = 1.0 / self.ctx.target_fps
        started = loop.time()
        sent = dropped = 0
        report = None
        try:
            while True:
                event = await queue.get()
                kind = event[0]
                if kind == "done":
                    break
                if kind == "failed":
                    await self._send(ws, {"type": "error", "code": "internal",
                                          "message": str(event[1])})
                    break
                if kind == "report":
                    report = event[1]
                    continue
                frame = event[1]
                due = started + frame.seq * interval
                now = loop.time()
                if now - due > DROP_LATENESS_S:
                    dropped += 1
                    continue
                if due > now:
                    await asyncio.sleep(due - now)
                url = self._frame_url(utterance_id, frame)
                await self._send(ws, {"type": "frame",
                                      "utterance_id": utterance_id,
                                      "seq": frame.seq,
                                      "timestamp_ms": frame.timestamp_ms,
                                      "frame_url": url})
                sent += 1
        finally:
            await producer
            self.metrics.add_frames(sent, dropped)
        if report is not None:
            add_embed_time(report, embed_ms)
            self.metrics.add_report(report)
            await self._send(ws, {"type": "utterance_end",
                                  "utterance_id": utterance_id,
                                  "latency": report.wire_dict()})

    def _frame_url(self, utterance_id: str, frame) -> str:
        from .interpolation import LibraryFrameSource
        if isinstance(frame.source, LibraryFrameSource):
            key = f"{frame.source.frame_id:06d}.{frame.image_format}"
        else:
            key = f"{utterance_id}-{frame.seq:05d}.{frame.image_format}"
            self._synth_cache[key] = frame.data
            while len(self._synth_cache) > SYNTH_CACHE_FRAMES:
                self._synth_cache.popitem(last=False)
        return f"/frames/{self.library_id}/{key}"


def _decode_wav_b64(wav_b64: str) -> tuple[np.ndarray, int]:
    if not wav_b64 or not isinstance(wav_b64, str):
        raise ValueError("wav_b64 payload is empty")
    raw = base64.b64decode(wav_b64)
    with wave.open(io.BytesIO(raw), "rb") as w:
        if w.getnchannels() != 1:
            raise ValueError(f"{w.getnchannels()}-channel audio unsupported; "
                             "downmix to mono first")
        if w.getsampwidth() != 2:
            raise ValueError("expected 16-bit PCM")
        rate = w.getframerate()
        data = w.readframes(w.getnframes())
    return np.frombuffer(data, dtype="<i2"), rate


def run_service(config: ServiceConfig) -> None:
    """Blocking entry point used by the serve subcommand.

    Announces the bound address on stdout (port 0 picks a free one), then
    serves until interrupted.
    """
    service = AvatarService.from_config(config)
    host, port = config.host_port

    async def main():
        runner = web.AppRunner(service.make_app())
        await runner.setup()
        site = web.TCPSite(runner, host, port)
        await site.start()
        bound_host, bound_port = runner.addresses[0][:2]
        print(f"serving on http://{bound_host}:{bound_port}", flush=True)
        try:
            while True:
                await asyncio.sleep(3600)
        finally:
            await runner.cleanup()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
