"""Foundational frame library: rendered frames paired with their embedding rows.

On-disk layout:

    manifest.json   format_version, n_dims, n_frames, fps, renderer_id,
                    created_utc, image_format, records[]
    params.f32      K x N little-endian float32, row-major
    frames/         one %06d.jpg (or .png) per frame

Embedding rows are quantized to float32 before rendering, so the persisted
matrix reproduces the stored images exactly: re-rendering records[i].params
with the manifest's renderer yields the stored bytes again.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .embedder import FeatureFrameStream, frame_step_ms
from .renderer import encode_image

FORMAT_VERSION = 1
MANIFEST_FILE = "manifest.json"
PARAMS_FILE = "params.f32"
FRAMES_DIR = "frames"
IMAGE_FORMATS = ("jpg", "png")


class LibraryCorruptError(RuntimeError):
    """A stored frame is missing or its bytes no longer match the manifest."""

    def __init__(self, frame_id: int, message: str):
        super().__init__(f"frame {frame_id:06d}: {message}")
        self.frame_id = frame_id


def content_checksum(data: bytes) -> str:
    """64-bit content hash, hex encoded."""
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def quantize_params(vectors: np.ndarray) -> np.ndarray:
    """Round to float32 and widen back: the stored and in-memory values agree."""
    return np.asarray(vectors, dtype="<f4").astype(np.float64)


@dataclass(frozen=True)
class LibraryManifest:
    format_version: int
    n_dims: int
    n_frames: int
    fps: float
    renderer_id: str
    created_utc: str
    image_format: str


@dataclass
class FrameRecord:
    frame_id: int
    params: np.ndarray
    image_path: str       # relative to the library root
    image_checksum: str
    source_clip: str


class FrameLibrary:
    """Immutable after construction; safe to share across concurrent readers."""

    def __init__(self, manifest: LibraryManifest, records: list[FrameRecord],
                 param_matrix: np.ndarray, root: Path | None = None,
                 images: list[bytes] | None = None):
        if param_matrix.ndim != 2:
            raise ValueError("param_matrix must be 2-D")
        if len(records) != param_matrix.shape[0]:
            raise ValueError(f"{len(records)} records vs "
                             f"{param_matrix.shape[0]} parameter rows")
        if param_matrix.shape[0] != manifest.n_frames:
            raise ValueError(f"manifest says {manifest.n_frames} frames, "
                             f"matrix has {param_matrix.shape[0]} rows")
        if records and param_matrix.shape[1] != manifest.n_dims:
            raise ValueError(f"manifest says N={manifest.n_dims}, "
                             f"matrix has {param_matrix.shape[1]} columns")
        for i, rec in enumerate(records):
            if rec.frame_id != i:
                raise ValueError(f"frame ids must be dense 0..K-1; "
                                 f"record {i} has id {rec.frame_id}")
        if root is None and images is not None and len(images) != len(records):
            raise ValueError("one image blob per record required")
        self.manifest = manifest
        self.records = records
        self.param_matrix = np.ascontiguousarray(param_matrix, dtype=np.float64)
        self.root = Path(root) if root is not None else None
        self._images = images

    @property
    def k_frames(self) -> int:
        return self.manifest.n_frames

    @property
    def n_dims(self) -> int:
        return self.manifest.n_dims

    @property
    def fps(self) -> float:
        return self.manifest.fps

    @property
    def image_format(self) -> str:
        return self.manifest.image_format

    def has_images(self) -> bool:
        return self.root is not None or self._images is not None

    def image_bytes(self, frame_id: int) -> bytes:
        rec = self.records[frame_id]
        if self.root is not None:
            path = self.root / rec.image_path
            if not path.exists():
                raise LibraryCorruptError(frame_id, f"missing image {rec.image_path}")
            return path.read_bytes()
        if self._images is not None:
            return self._images[frame_id]
        raise LibraryCorruptError(frame_id, "library carries no image data")

    def image_array(self, frame_id: int) -> np.ndarray:
        from .renderer import decode_image
        return decode_image(self.image_bytes(frame_id))

    def image_file(self, frame_id: int) -> Path:
        if self.root is None:
            raise ValueError("in-memory library has no image files")
        return self.root / self.records[frame_id].image_path


# ---------------------------------------------------------------------------
# Building

def build_library(streams, renderer, out_dir=None, *, image_format: str = "jpg",
                  clip_names=None) -> FrameLibrary:
    """Phase 1: render one frame per stream vector and pair it with its row.

    Streams are concatenated in order; every stream must share one
    dimensionality and fps. With ``out_dir`` the library is written to disk
    as it is built; without it the images stay in memory.
    """
    streams = list(streams)
    if not streams:
        raise ValueError("at least one feature stream is required")
    if image_format not in IMAGE_FORMATS:
        raise ValueError(f"image_format must be one of {IMAGE_FORMATS}")
    n_dims = streams[0].n_dims
    fps = streams[0].fps
    for i, s in enumerate(streams[1:], start=1):
        if s.n_dims != n_dims:
            raise ValueError(f"stream {i} has N={s.n_dims}, expected {n_dims}")
        if s.fps != fps:
            raise ValueError(f"stream {i} has fps={s.fps}, expected {fps}")
    if clip_names is not None and len(clip_names) != len(streams):
        raise ValueError("one clip name per stream required")

    matrix = quantize_params(np.concatenate([s.vectors for s in streams]))

    root = None
    frames_dir = None
    if out_dir is not None:
        root = Path(out_dir)
        frames_dir = root / FRAMES_DIR
        frames_dir.mkdir(parents=True, exist_ok=True)

    records: list[FrameRecord] = []
    images: list[bytes] | None = None if root is not None else []
    frame_id = 0
    for si, stream in enumerate(streams):
        clip = clip_names[si] if clip_names else f"clip{si:02d}"
        for _ in range(len(stream)):
            data = encode_image(renderer.render(matrix[frame_id]), image_format)
            rel = f"{FRAMES_DIR}/{frame_id:06d}.{image_format}"
            if root is not None:
                (root / rel).write_bytes(data)
            else:
                images.append(data)
            records.append(FrameRecord(frame_id, matrix[frame_id], rel,
                                       content_checksum(data), clip))
            frame_id += 1

    manifest = LibraryManifest(
        format_version=FORMAT_VERSION,
        n_dims=n_dims,
        n_frames=frame_id,
        fps=fps,
        renderer_id=renderer.renderer_id,
        created_utc=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        image_format=image_format,
    )
    lib = FrameLibrary(manifest, records, matrix, root=root, images=images)
    if root is not None:
        _write_metadata(lib, root)
    return lib


def _write_metadata(lib: FrameLibrary, root: Path) -> None:
    doc = {
        "format_version": lib.manifest.format_version,
        "n_dims": lib.manifest.n_dims,
        "n_frames": lib.manifest.n_frames,
        "fps": lib.manifest.fps,
        "renderer_id": lib.manifest.renderer_id,
        "created_utc": lib.manifest.created_utc,
        "image_format": lib.manifest.image_format,
        "records": [
            {"frame_id": r.frame_id, "image": r.image_path,
             "checksum": r.image_checksum, "source_clip": r.source_clip}
            for r in lib.records
        ],
    }
    (root / MANIFEST_FILE).write_text(json.dumps(doc, indent=1), encoding="utf-8")
    (root / PARAMS_FILE).write_bytes(
        np.ascontiguousarray(lib.param_matrix, dtype="<f4").tobytes())


def save_library(lib: FrameLibrary, out_dir) -> None:
    """Persist a library; load_library(save_library(lib)) is bit-exact."""
    root = Path(out_dir)
    (root / FRAMES_DIR).mkdir(parents=True, exist_ok=True)
    for rec in lib.records:
        (root / rec.image_path).write_bytes(lib.image_bytes(rec.frame_id))
    _write_metadata(lib, root)


def load_library(lib_dir, verify: bool = True) -> FrameLibrary:
    """Load a library directory, verifying image checksums unless disabled."""
    root = Path(lib_dir)
    manifest_path = root / MANIFEST_FILE
    if not manifest_path.exists():
        raise FileNotFoundError(f"{manifest_path} not found")
    doc = json.loads(manifest_path.read_text(encoding="utf-8"))

    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported library format_version {version!r} "
                         f"(supported: {FORMAT_VERSION})")
    n_dims = int(doc["n_dims"])
    n_frames = int(doc["n_frames"])
    manifest = LibraryManifest(
        format_version=version,
        n_dims=n_dims,
        n_frames=n_frames,
        fps=float(doc["fps"]),
        renderer_id=str(doc["renderer_id"]),
        created_utc=str(doc["created_utc"]),
        image_format=str(doc.get("image_format", "jpg")),
    )

    raw = (root / PARAMS_FILE).read_bytes()
    expected = n_frames * n_dims * 4
    if len(raw) != expected:
        raise ValueError(f"{PARAMS_FILE} holds {len(raw)} bytes, expected "
                         f"{expected} for {n_frames}x{n_dims} float32 rows")
    matrix = np.frombuffer(raw, dtype="<f4").reshape(n_frames, n_dims).astype(np.float64)

    raw_records = doc.get("records", [])
    if len(raw_records) != n_frames:
        raise ValueError(f"manifest lists {len(raw_records)} records for "
                         f"{n_frames} frames")
    records = [
        FrameRecord(int(r["frame_id"]), matrix[i], str(r["image"]),
                    str(r["checksum"]), str(r.get("source_clip", "")))
        for i, r in enumerate(raw_records)
    ]
    lib = FrameLibrary(manifest, records, matrix, root=root)
    if verify:
        verify_library(lib)
    return lib


def verify_library(lib: FrameLibrary) -> None:
    for rec in lib.records:
        data = lib.image_bytes(rec.frame_id)  # raises on missing file
        actual = content_checksum(data)
        if actual != rec.image_checksum:
            raise LibraryCorruptError(
                rec.frame_id, f"checksum mismatch: stored {rec.image_checksum}, "
                              f"actual {actual}")


# ---------------------------------------------------------------------------
# Stats and coverage

@dataclass(frozen=True)
class LibraryStats:
    k_frames: int
    n_dims: int
    fps: float
    total_bytes: int
    seconds_of_video: float


def library_stats(lib: FrameLibrary) -> LibraryStats:
    total = 0
    if lib.root is not None:
        for rec in lib.records:
            path = lib.root / rec.image_path
            if path.exists():
                total += path.stat().st_size
        for meta in (MANIFEST_FILE, PARAMS_FILE):
            p = lib.root / meta
            if p.exists():
                total += p.stat().st_size
    elif lib._images is not None:
        total = sum(len(b) for b in lib._images)
        total += lib.param_matrix.size * 4
    seconds = lib.k_frames / lib.fps if lib.fps else 0.0
    return LibraryStats(lib.k_frames, lib.n_dims, lib.fps, total, seconds)


# Lattice resolution per semantic dimension:
# mouth open, mouth width, eye open, head tilt, brow raise.
GRID_STEPS = (6, 4, 3, 3, 3)


def grid_stream(n_dims: int = 8, fps: float = 25.0,
                steps: tuple[int, ...] = GRID_STEPS) -> FeatureFrameStream:
    """Coverage lattice sweeping the five semantic dimensions over [0, 1].

    Guarantees the library spans the renderer's full expressive range; extra
    dimensions carry a level correlated with mouth opening, mirroring how
    louder speech opens the mouth.
    """
    if len(steps) != 5:
        raise ValueError("steps must give a count for each of the 5 semantic dims")
    axes = [np.linspace(0.0, 1.0, s) for s in steps]
    lattice = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 5)
    rows = np.zeros((lattice.shape[0], n_dims))
    m = min(5, n_dims)
    rows[:, :m] = lattice[:, :m]
    if n_dims > 5:
        rows[:, 5:] = 0.75 * lattice[:, :1]
    step = frame_step_ms(fps)
    ts = np.arange(rows.shape[0], dtype=np.int64) * step
    return FeatureFrameStream(ts, rows, fps, "grid")
