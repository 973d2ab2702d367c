"""Phase 3: restore frame rate by synthesizing in-between frames.

A render plan schedules retrieved library frames and interpolated fills at
the target cadence. Three fill strategies exist:

    param_space   blend the two embedding rows, re-render (default; exact
                  round trips with the deterministic renderer)
    crossfade     per-pixel blend of the two stored images
    external      hand two image files and a weight to a registered
                  out-of-process interpolator
"""

from __future__ import annotations

import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Union

import numpy as np

from .matching import ReducedSequence
from .metrics import DimensionMismatch, as_vector
from .renderer import decode_image, encode_image

INTERP_MODES = ("param_space", "crossfade", "external")


@dataclass(frozen=True)
class LibraryFrameSource:
    frame_id: int


@dataclass(frozen=True)
class InterpolatedSource:
    frame_id_a: int
    frame_id_b: int
    weight: float


PlanSource = Union[LibraryFrameSource, InterpolatedSource]


@dataclass(frozen=True)
class PlanEntry:
    timestamp_ms: int
    source: PlanSource


@dataclass
class RenderPlan:
    entries: list[PlanEntry]
    target_fps: float

    def __len__(self) -> int:
        return len(self.entries)


def plan_interpolation(reduced: ReducedSequence, target_fps: float,
                       source_fps: float) -> RenderPlan:
    """Schedule playback at target_fps from a reduced (half-cadence) sequence.

    With r = 2 * target_fps / source_fps (must be a whole number), r - 1
    evenly spaced fills go between consecutive kept frames; restoring the
    original rate means exactly one midpoint per gap and a plan of
    2 * len(kept) - 1 entries. First and last entries are always retrieved
    library frames.
    """
    kept = reduced.kept
    if not kept:
        raise ValueError("reduced sequence has no kept frames")
    if not target_fps > 0 or not source_fps > 0:
        raise ValueError("frame rates must be positive")
    ratio = 2.0 * target_fps / source_fps
    if ratio < 1.0 - 1e-9:
        raise ValueError(f"target_fps {target_fps} is below the reduced cadence "
                         f"({source_fps / 2})")
    r = max(int(round(ratio)), 1)
    if abs(ratio - r) > 1e-9:
        raise ValueError(f"target_fps {target_fps} must be a whole multiple of "
                         f"half the source fps ({source_fps / 2})")

    step = int(round(1000.0 / target_fps))
    entries: list[PlanEntry] = []
    for i, m in enumerate(kept):
        entries.append(PlanEntry(len(entries) * step, LibraryFrameSource(m.frame_id)))
        if i + 1 < len(kept):
            nxt = kept[i + 1]
            for j in range(1, r):
                entries.append(PlanEntry(len(entries) * step,
                                         InterpolatedSource(m.frame_id,
                                                            nxt.frame_id, j / r)))
    return RenderPlan(entries, target_fps)


def interpolate_params(a, b, t: float) -> np.ndarray:
    """Linear blend of two embedding vectors at weight t in (0, 1).

    Computed as a + t*(b - a) so identical endpoints reproduce exactly.
    """
    va = as_vector(a)
    vb = as_vector(b)
    if va.size != vb.size:
        raise DimensionMismatch(va.size, vb.size)
    if not 0.0 < t < 1.0:
        raise ValueError(f"weight must lie in (0, 1), got {t}")
    return va + t * (vb - va)


def crossfade_images(img_a: np.ndarray, img_b: np.ndarray, t: float) -> np.ndarray:
    """Per-pixel blend (1-t)*a + t*b, rounded half-up per channel."""
    a = np.asarray(img_a)
    b = np.asarray(img_b)
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {t}")
    mixed = np.floor((1.0 - t) * a.astype(np.float64) + t * b.astype(np.float64) + 0.5)
    return np.clip(mixed, 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# External interpolator registry
#
# Contract: fn(path_a, path_b, weight, out_path) reads two image files and
# writes one of identical dimensions.

ExternalInterpolator = Callable[[Path, Path, float, Path], None]

_EXTERNAL: dict[str, ExternalInterpolator] = {}


def register_interpolator(name: str, fn: ExternalInterpolator) -> None:
    _EXTERNAL[name] = fn


def available_interpolators() -> list[str]:
    return sorted(_EXTERNAL)


@dataclass
class OutputFrame:
    seq: int
    timestamp_ms: int
    data: bytes
    image_format: str
    source: PlanSource
    produce_ms: float


def iter_materialize(plan: RenderPlan, lib, renderer,
                     mode: str = "param_space",
                     external: str | None = None) -> Iterator[OutputFrame]:
    """Produce plan frames in order, yielding each as soon as it exists.

    Library entries pass the stored bytes through untouched; interpolated
    entries are synthesized per ``mode``. Per-frame production time rides
    along for latency accounting.
    """
    if mode not in INTERP_MODES:
        raise ValueError(f"mode must be one of {INTERP_MODES}, got {mode!r}")
    backend: ExternalInterpolator | None = None
    if mode == "external":
        name = external or (available_interpolators()[0] if _EXTERNAL else None)
        if name is None or name not in _EXTERNAL:
            raise ValueError(
                f"external interpolator {name!r} not registered; "
                f"available: {', '.join(available_interpolators()) or 'none'}")
        backend = _EXTERNAL[name]

    fmt = lib.image_format
    decoded: dict[int, np.ndarray] = {}

    def pixels(frame_id: int) -> np.ndarray:
        if frame_id not in decoded:
            decoded[frame_id] = decode_image(lib.image_bytes(frame_id))
        return decoded[frame_id]

    for seq, entry in enumerate(plan.entries):
        t0 = time.perf_counter()
        src = entry.source
        if isinstance(src, LibraryFrameSource):
            data = lib.image_bytes(src.frame_id)
        elif mode == "param_space":
            vec = interpolate_params(lib.param_matrix[src.frame_id_a],
                                     lib.param_matrix[src.frame_id_b], src.weight)
            data = encode_image(renderer.render(vec), fmt)
        elif mode == "crossfade":
            blended = crossfade_images(pixels(src.frame_id_a),
                                       pixels(src.frame_id_b), src.weight)
            data = encode_image(blended, fmt)
        else:
            data = _run_external(backend, lib, src, fmt)
        produce_ms = (time.perf_counter() - t0) * 1000.0
        yield OutputFrame(seq, entry.timestamp_ms, data, fmt, src, produce_ms)


def materialize(plan: RenderPlan, lib, renderer, mode: str = "param_space",
                external: str | None = None) -> list[OutputFrame]:
    return list(iter_materialize(plan, lib, renderer, mode, external))


def _run_external(backend: ExternalInterpolator, lib,
                  src: InterpolatedSource, fmt: str) -> bytes:
    with tempfile.TemporaryDirectory(prefix="rita-interp-") as tmp:
        tmp = Path(tmp)
        if lib.root is not None:
            path_a = lib.image_file(src.frame_id_a)
            path_b = lib.image_file(src.frame_id_b)
        else:
            path_a = tmp / f"a.{fmt}"
            path_b = tmp / f"b.{fmt}"
            path_a.write_bytes(lib.image_bytes(src.frame_id_a))
            path_b.write_bytes(lib.image_bytes(src.frame_id_b))
        out_path = tmp / f"out.{fmt}"
        backend(path_a, path_b, src.weight, out_path)
        if not out_path.exists():
            raise RuntimeError("external interpolator produced no output file")
        return out_path.read_bytes()
