"""End-to-end utterance pipeline: features -> match -> reduce -> interpolate,
with per-phase wall-clock accounting and streaming frame delivery.

Frames are yielded as soon as each is produced, so a consumer can start
playback while the tail of the utterance is still being synthesized; the
time-to-first-frame therefore sits far below total processing time.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
import numpy as np

from .embedder import EmbedderConfig, FeatureFrameStream, embed_text_stub, embed_wav
from .interpolation import OutputFrame, iter_materialize, plan_interpolation
from .library import FrameLibrary
from .matching import Index, build_index, match_sequence, reduce_frames
from .renderer import RenderSpec, make_renderer

# Reference per-phase timings measured for a neural-backend deployment of
# this pipeline shape; reported alongside benchmark output for comparison,
# never asserted.
REFERENCE_MATCH_S = 0.09
REFERENCE_INTERPOLATE_S = 3.97


@dataclass
class LatencyReport:
    """Wall-clock milliseconds per phase for one utterance."""

    embed_ms: float
    match_ms: float
    reduce_ms: float
    interpolate_ms: float
    total_ms: float
    audio_duration_ms: float
    real_time_factor: float
    ttff_ms: float  # delay from utterance start to first deliverable frame

    def wire_dict(self) -> dict:
        """Latency payload for the utterance_end protocol message."""
        return {
            "embed_ms": self.embed_ms,
            "match_ms": self.match_ms,
            "reduce_ms": self.reduce_ms,
            "interpolate_ms": self.interpolate_ms,
            "total_ms": self.total_ms,
            "real_time_factor": self.real_time_factor,
        }


@dataclass
class PipelineContext:
    """One immutable (library, index, renderer) bundle shared by all sessions."""

    library: FrameLibrary
    index: Index
    renderer: object
    target_fps: float
    interp_mode: str = "param_space"
    embedder_cfg: EmbedderConfig | None = None

    @classmethod
    def create(cls, library: FrameLibrary, *, index_mode: str = "exact",
               candidate_k: int = 32, target_fps: float | None = None,
               interp_mode: str = "param_space",
               render_size: tuple[int, int] | None = None) -> "PipelineContext":
        index = build_index(library, index_mode, candidate_k=candidate_k)
        spec = RenderSpec(*(render_size or (256, 256)),
                          renderer_id=library.manifest.renderer_id)
        renderer = make_renderer(library.manifest.renderer_id, spec)
        cfg = EmbedderConfig(n_dims=library.n_dims, fps=library.fps)
        return cls(library=library, index=index, renderer=renderer,
                   target_fps=target_fps or library.fps,
                   interp_mode=interp_mode, embedder_cfg=cfg)

    def embed_text(self, text: str) -> FeatureFrameStream:
        return embed_text_stub(text, self.embedder_cfg or
                               EmbedderConfig(n_dims=self.library.n_dims,
                                              fps=self.library.fps))

    def embed_audio(self, samples, sample_rate: int) -> FeatureFrameStream:
        return embed_wav(samples, sample_rate, self.embedder_cfg or
                         EmbedderConfig(n_dims=self.library.n_dims,
                                        fps=self.library.fps))


@dataclass
class UtteranceResult:
    frames: list[OutputFrame]
    report: LatencyReport
    matches: list = field(default_factory=list)
    kept_frame_ids: list[int] = field(default_factory=list)


def iter_utterance(ctx: PipelineContext, stream: FeatureFrameStream,
                   pad_to_duration: bool = True):
    """Run the pipeline over an embedded stream.

    Yields ("frame", OutputFrame) events as frames are produced, then one
    final ("report", LatencyReport). ``pad_to_duration`` duplicates the last
    frame until playback covers the audio duration (the interpolated count
    is one short for even-length inputs).

    Timings count processing only: frame production charges accumulate from
    each frame's own cost, so a slow consumer of this generator never
    inflates the report.
    """
    t0 = time.perf_counter()
    matches = match_sequence(ctx.index, stream)
    match_ms = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    reduced = reduce_frames(matches)
    reduce_ms = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    plan = plan_interpolation(reduced, ctx.target_fps, stream.fps)
    plan_ms = (time.perf_counter() - t0) * 1000.0

    n_target = len(plan.entries)
    if pad_to_duration:
        n_target = max(n_target, int(round(
            stream.duration_ms * ctx.target_fps / 1000.0)))

    interpolate_ms = plan_ms
    ttff_ms: float | None = None
    n_out = 0
    last: OutputFrame | None = None
    for frame in iter_materialize(plan, ctx.library, ctx.renderer, ctx.interp_mode):
        interpolate_ms += frame.produce_ms
        if ttff_ms is None:
            ttff_ms = match_ms + reduce_ms + plan_ms + frame.produce_ms
        last = frame
        n_out += 1
        yield ("frame", frame)

    step = int(round(1000.0 / ctx.target_fps))
    while last is not None and n_out < n_target:
        pad = OutputFrame(seq=n_out, timestamp_ms=n_out * step,
                          data=last.data, image_format=last.image_format,
                          source=last.source, produce_ms=0.0)
        n_out += 1
        yield ("frame", pad)

    total_ms = match_ms + reduce_ms + interpolate_ms
    duration = float(stream.duration_ms)
    report = LatencyReport(
        embed_ms=0.0,  # caller embedded; filled by run_utterance wrappers
        match_ms=match_ms,
        reduce_ms=reduce_ms,
        interpolate_ms=interpolate_ms,
        total_ms=total_ms,
        audio_duration_ms=duration,
        real_time_factor=total_ms / duration if duration > 0 else float("inf"),
        ttff_ms=ttff_ms if ttff_ms is not None else total_ms,
    )
    yield ("report", report, matches, [m.frame_id for m in reduced.kept])


def iter_utterance_text(ctx: PipelineContext, text: str,
                        pad_to_duration: bool = True):
    """Embed text through the stub TTS path, then run the pipeline."""
    t0 = time.perf_counter()
    stream = ctx.embed_text(text)
    embed_ms = (time.perf_counter() - t0) * 1000.0
    yield from _with_embed_time(ctx, stream, embed_ms, pad_to_duration)


def iter_utterance_wav(ctx: PipelineContext, samples, sample_rate: int,
                       pad_to_duration: bool = True):
    t0 = time.perf_counter()
    stream = ctx.embed_audio(samples, sample_rate)
    embed_ms = (time.perf_counter() - t0) * 1000.0
    yield from _with_embed_time(ctx, stream, embed_ms, pad_to_duration)


def add_embed_time(report: LatencyReport, embed_ms: float) -> LatencyReport:
    """Fold the caller-side embedding cost into a pipeline report."""
    report.embed_ms = embed_ms
    report.total_ms += embed_ms
    report.ttff_ms += embed_ms
    if report.audio_duration_ms > 0:
        report.real_time_factor = report.total_ms / report.audio_duration_ms
    return report


def _with_embed_time(ctx, stream, embed_ms, pad_to_duration):
    for event in iter_utterance(ctx, stream, pad_to_duration):
        if event[0] == "report":
            yield ("report", add_embed_time(event[1], embed_ms), event[2], event[3])
        else:
            yield event


def run_utterance(ctx: PipelineContext, *, text: str | None = None,
                  stream: FeatureFrameStream | None = None,
                  samples=None, sample_rate: int | None = None,
                  pad_to_duration: bool = True) -> UtteranceResult:
    """Batch convenience over the streaming generators."""
    if sum(x is not None for x in (text, stream, samples)) != 1:
        raise ValueError("provide exactly one of text, stream, or samples")
    if text is not None:
        events = iter_utterance_text(ctx, text, pad_to_duration)
    elif samples is not None:
        events = iter_utterance_wav(ctx, samples, sample_rate, pad_to_duration)
    else:
        events = iter_utterance(ctx, stream, pad_to_duration)

    frames: list[OutputFrame] = []
    report = None
    matches: list = []
    kept: list[int] = []
    for event in events:
        if event[0] == "frame":
            frames.append(event[1])
        else:
            _, report, matches, kept = event
    return UtteranceResult(frames=frames, report=report,
                           matches=matches, kept_frame_ids=kept)


def summarize_reports(reports) -> dict[str, float]:
    """Per-phase means over repeated runs."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to summarize")
    fields = ("embed_ms", "match_ms", "reduce_ms", "interpolate_ms",
              "total_ms", "ttff_ms", "real_time_factor")
    return {name: float(np.mean([getattr(r, name) for r in reports]))
            for name in fields}
