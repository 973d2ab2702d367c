"""Feature extraction: turn audio (or stub-synthesized text) into a timestamped
stream of embedding vectors, one vector per output video frame.

Vector layout (N components, N >= 4):

    [0] normalized RMS energy        -> drives mouth openness
    [1] normalized zero-crossing rate
    [2] normalized spectral centroid
    [3..] normalized log band energies over N-3 frequency bands

Normalization is fixed-range (constants below), never per-utterance: query
vectors and library vectors must live in one shared coordinate system.
"""

from __future__ import annotations

import re
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Fixed-range normalization constants.
RMS_REF = 0.25          # RMS amplitude (full scale = 1.0) mapped to component value 1
BAND_EPS = 1e-12        # additive guard inside the band-power log
BAND_LOG_FLOOR = -10.0  # log10 band power mapped to 0
BAND_LOG_CEIL = 0.0     # log10 band power mapped to 1
CENTROID_MIN_MAG = 1e-9  # below this total spectral magnitude the centroid is 0

MIN_SAMPLE_RATE = 8000
SOURCE_KINDS = ("wav", "text_stub", "file", "grid")

FEATURE_FORMAT_HEADER = "# rita-features v1"
_HEADER_RE = re.compile(r"^#\s*rita-features\s+v1\s+N=(\d+)\s+fps=([0-9.]+)\s*$")


class FeatureParseError(ValueError):
    """Feature file rejected; ``line`` is the 1-based offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class EmbedderConfig:
    """Analysis settings for the deterministic feature extractor.

    ``band_edges_hz`` holds the N-3 lower band boundaries; band k spans
    [edges[k], edges[k+1]) and the last band runs up to Nyquist. When left
    unset, edges default to a geometric ladder from 100 Hz to 3 kHz.
    """

    n_dims: int = 8
    fps: float = 25.0
    band_edges_hz: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_dims < 4:
            raise ValueError(f"n_dims must be >= 4, got {self.n_dims}")
        if not self.fps > 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        edges = self.band_edges_hz
        if edges is not None:
            if len(edges) != self.n_bands:
                raise ValueError(
                    f"expected {self.n_bands} band edges for n_dims={self.n_dims}, "
                    f"got {len(edges)}")
            if any(b <= a for a, b in zip(edges, edges[1:])):
                raise ValueError("band edges must be strictly increasing")
            if edges[0] <= 0:
                raise ValueError("band edges must be positive frequencies")

    @property
    def n_bands(self) -> int:
        return self.n_dims - 3

    def edges(self) -> np.ndarray:
        if self.band_edges_hz is not None:
            return np.asarray(self.band_edges_hz, dtype=np.float64)
        return np.geomspace(100.0, 3000.0, self.n_bands)

    @property
    def frame_step_ms(self) -> int:
        return int(round(1000.0 / self.fps))


DEFAULT_EMBEDDER = EmbedderConfig()


def frame_step_ms(fps: float) -> int:
    step = int(round(1000.0 / fps))
    if step < 1:
        raise ValueError(f"fps {fps} leaves no whole millisecond per frame")
    return step


@dataclass
class FeatureFrameStream:
    """Timestamped sequence of embedding vectors at a uniform frame cadence."""

    timestamps_ms: np.ndarray  # (M,) int64, strictly increasing, uniform step
    vectors: np.ndarray        # (M, N) float64
    fps: float
    source_kind: str

    def __post_init__(self):
        self.timestamps_ms = np.asarray(self.timestamps_ms, dtype=np.int64)
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != self.timestamps_ms.shape[0]:
            raise ValueError("vectors must be (M, N) with one row per timestamp")
        if len(self) == 0:
            raise ValueError("feature stream must contain at least one frame")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("feature vectors must be finite")
        if self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source_kind {self.source_kind!r}")
        step = frame_step_ms(self.fps)
        deltas = np.diff(self.timestamps_ms)
        if np.any(deltas <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if np.any(deltas != step):
            raise ValueError(f"timestamps must advance by {step} ms at fps={self.fps}")

    def __len__(self) -> int:
        return int(self.timestamps_ms.shape[0])

    def __iter__(self):
        for ts, vec in zip(self.timestamps_ms, self.vectors):
            yield int(ts), vec

    @property
    def n_dims(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def duration_ms(self) -> int:
        """Audio duration represented by the stream (frames x frame step)."""
        return len(self) * frame_step_ms(self.fps)


# ---------------------------------------------------------------------------
# WAV path

def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a PCM 16-bit RIFF WAV file; returns (int16 samples, sample_rate)."""
    with wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1:
            raise ValueError(
                f"{path}: {w.getnchannels()}-channel audio unsupported; "
                "downmix to mono first")
        if w.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit PCM, got "
                             f"{8 * w.getsampwidth()}-bit")
        rate = w.getframerate()
        raw = w.readframes(w.getnframes())
    return np.frombuffer(raw, dtype="<i2"), rate


def write_wav(path, samples: np.ndarray, sample_rate: int) -> None:
    samples = np.asarray(samples, dtype="<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(samples.tobytes())


def embed_wav(samples, sample_rate: int,
              cfg: EmbedderConfig = DEFAULT_EMBEDDER) -> FeatureFrameStream:
    """Embed mono PCM audio: one vector per non-overlapping 1/fps window.

    Window equals hop, so the stream carries exactly
    floor(duration_ms * fps / 1000) frames. Deterministic: identical samples
    and config always produce identical streams.
    """
    x = np.asarray(samples)
    if x.ndim != 1:
        raise ValueError(f"expected mono samples, got shape {x.shape}; "
                         "downmix to mono first")
    if x.size == 0:
        raise ValueError("audio is empty")
    if sample_rate < MIN_SAMPLE_RATE:
        raise ValueError(f"sample_rate must be >= {MIN_SAMPLE_RATE} Hz, "
                         f"got {sample_rate}")
    if np.issubdtype(x.dtype, np.integer):
        x = x.astype(np.float64) / 32768.0
    else:
        x = x.astype(np.float64)

    nyquist = sample_rate / 2.0
    edges = cfg.edges()
    if edges[-1] >= nyquist:
        raise ValueError(f"band edge {edges[-1]} Hz is not below Nyquist "
                         f"({nyquist} Hz)")

    window = int(round(sample_rate / cfg.fps))
    n_frames = x.size // window
    if n_frames < 1:
        raise ValueError(f"audio shorter than one analysis window "
                         f"({window} samples at fps={cfg.fps})")

    freqs = np.fft.rfftfreq(window, 1.0 / sample_rate)
    band_masks = []
    for k in range(cfg.n_bands):
        lo = edges[k]
        if k + 1 < cfg.n_bands:
            band_masks.append((freqs >= lo) & (freqs < edges[k + 1]))
        else:
            band_masks.append(freqs >= lo)

    vectors = np.zeros((n_frames, cfg.n_dims))
    for i in range(n_frames):
        w = x[i * window:(i + 1) * window]
        vectors[i] = _window_features(w, freqs, band_masks, nyquist, cfg.n_dims)

    step = frame_step_ms(cfg.fps)
    ts = np.arange(n_frames, dtype=np.int64) * step
    return FeatureFrameStream(ts, vectors, cfg.fps, "wav")


def _window_features(w: np.ndarray, freqs: np.ndarray, band_masks,
                     nyquist: float, n_dims: int) -> np.ndarray:
    out = np.zeros(n_dims)

    rms = np.sqrt(np.mean(w * w))
    out[0] = min(rms / RMS_REF, 1.0)

    # strict sign changes; exact zeros do not count
    out[1] = np.count_nonzero(w[:-1] * w[1:] < 0) / (w.size - 1)

    mag = np.abs(np.fft.rfft(w))
    total = mag.sum()
    if total > CENTROID_MIN_MAG:
        out[2] = min(float((freqs * mag).sum() / total) / nyquist, 1.0)

    power = (mag * mag) / (w.size * w.size)
    span = BAND_LOG_CEIL - BAND_LOG_FLOOR
    for k, mask in enumerate(band_masks):
        level = (np.log10(power[mask].sum() + BAND_EPS) - BAND_LOG_FLOOR) / span
        out[3 + k] = min(max(level, 0.0), 1.0)
    return out


def embed_wav_file(path, cfg: EmbedderConfig = DEFAULT_EMBEDDER) -> FeatureFrameStream:
    samples, rate = read_wav(path)
    return embed_wav(samples, rate, cfg)


# ---------------------------------------------------------------------------
# Text stub path

VOWEL_CHARS = "aeiou"
BILABIAL_CHARS = "mbp"
FRICATIVE_CHARS = "fvsz"
FRAMES_PER_CHAR = 2

# class -> (mouth open, mouth width, eye open, head tilt, brow raise, band level)
# Dimensions beyond the five semantic ones repeat the band level.
VISEME_TABLE = {
    "vowel":     (0.90, 0.70, 0.60, 0.50, 0.55, 0.80),
    "bilabial":  (0.00, 0.40, 0.60, 0.50, 0.50, 0.35),
    "fricative": (0.25, 0.50, 0.55, 0.50, 0.50, 0.55),
    "rest":      (0.05, 0.45, 0.65, 0.50, 0.45, 0.05),
    "other":     (0.45, 0.55, 0.60, 0.50, 0.50, 0.60),
}


def classify_char(ch: str) -> str:
    if ch.isspace():
        return "rest"
    c = ch.lower()
    if c in VOWEL_CHARS:
        return "vowel"
    if c in BILABIAL_CHARS:
        return "bilabial"
    if c in FRICATIVE_CHARS:
        return "fricative"
    return "other"


def viseme_vector(cls: str, n_dims: int) -> np.ndarray:
    pattern = VISEME_TABLE[cls]
    vec = pattern[:5] + (pattern[5],) * max(0, n_dims - 5)
    return np.asarray(vec[:n_dims], dtype=np.float64)


def embed_text_stub(text: str,
                    cfg: EmbedderConfig = DEFAULT_EMBEDDER) -> FeatureFrameStream:
    """Deterministic stand-in for TTS + audio embedding.

    Each character maps to a viseme class (vowels open the mouth, bilabials
    close it, fricatives narrow it, whitespace rests) and is held for
    FRAMES_PER_CHAR frames at cfg.fps.
    """
    if not text or not text.strip():
        raise ValueError("text is empty")
    rows = []
    for ch in text:
        vec = viseme_vector(classify_char(ch), cfg.n_dims)
        rows.extend([vec] * FRAMES_PER_CHAR)
    vectors = np.stack(rows)
    step = frame_step_ms(cfg.fps)
    ts = np.arange(len(rows), dtype=np.int64) * step
    return FeatureFrameStream(ts, vectors, cfg.fps, "text_stub")


# ---------------------------------------------------------------------------
# Feature file format
#
#   # rita-features v1 N=<n> fps=<f>
#   <timestamp_ms>,<v1>,<v2>,...,<vN>

def _format_number(x: float) -> str:
    f = float(x)
    return str(int(f)) if f == int(f) else repr(f)


def save_features(stream: FeatureFrameStream, path) -> None:
    lines = [f"{FEATURE_FORMAT_HEADER} N={stream.n_dims} fps={_format_number(stream.fps)}"]
    for ts, vec in stream:
        lines.append(f"{ts}," + ",".join(repr(float(v)) for v in vec))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_features(path) -> FeatureFrameStream:
    """Parse a feature file, validating dimensionality and timestamp cadence.

    Errors carry the 1-based line number of the offending row.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise FeatureParseError(1, "empty file (missing header)")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise FeatureParseError(1, f"bad header {lines[0]!r}; expected "
                                   f"'{FEATURE_FORMAT_HEADER} N=<n> fps=<f>'")
    n_dims = int(m.group(1))
    fps = float(m.group(2))
    step = frame_step_ms(fps)

    timestamps: list[int] = []
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != n_dims + 1:
            raise FeatureParseError(
                lineno, f"expected {n_dims} components, got {len(parts) - 1}")
        try:
            ts = int(parts[0])
            vec = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise FeatureParseError(lineno, f"malformed number: {exc}") from None
        if not all(np.isfinite(vec)):
            raise FeatureParseError(lineno, "non-finite component")
        if timestamps:
            if ts <= timestamps[-1]:
                raise FeatureParseError(lineno, f"timestamp {ts} not increasing "
                                                f"(previous {timestamps[-1]})")
            if ts - timestamps[-1] != step:
                raise FeatureParseError(lineno, f"timestamp step {ts - timestamps[-1]} "
                                                f"!= {step} ms implied by fps={fps}")
        timestamps.append(ts)
        rows.append(vec)

    if not rows:
        raise FeatureParseError(len(lines), "no feature rows")
    return FeatureFrameStream(np.asarray(timestamps, dtype=np.int64),
                              np.asarray(rows, dtype=np.float64), fps, "file")
