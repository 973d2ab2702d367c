"""Deterministic parametric renderers mapping embedding vectors to face images.

The default backend draws a stylized face whose geometry is driven by the
first five vector components:

    [0] mouth openness   [1] mouth width   [2] eye openness
    [3] head tilt        [4] brow raise

Every backend must be a pure function of (vector, spec): same inputs, same
bytes. That property is what lets retrieval and interpolation be verified by
exact image comparison.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw

SEMANTIC_DIMS = 5
JPEG_QUALITY = 90

# Face geometry at the 256x256 reference size (scaled by spec dimensions).
FACE_CENTER = (128.0, 134.0)
FACE_RADII = (86.0, 104.0)
EYE_OFFSET_X = 38.0
EYE_Y = 108.0
EYE_HALF_W = 15.0
EYE_MIN_HALF_H = 1.0
EYE_MAX_HALF_H = 11.0
BROW_Y_BASE = 86.0
BROW_RAISE_RANGE = 14.0
BROW_HALF_W = 19.0
BROW_THICKNESS = 5.0
MOUTH_Y = 182.0
MOUTH_MIN_HALF_W = 14.0
MOUTH_MAX_HALF_W = 40.0
MOUTH_MIN_HALF_H = 2.0
MOUTH_MAX_HALF_H = 28.0
HEAD_TILT_DEGREES = 10.0  # full-range rotation for component 3

BG_COLOR = (30, 34, 44)
SKIN_COLOR = (224, 186, 158)
OUTLINE_COLOR = (96, 66, 48)
EYE_WHITE = (244, 244, 248)
PUPIL_COLOR = (40, 36, 34)
BROW_COLOR = (70, 48, 34)
MOUTH_COLOR = (122, 26, 34)
NOSE_COLOR = (176, 136, 110)


@dataclass(frozen=True)
class RenderSpec:
    width: int = 256
    height: int = 256
    renderer_id: str = "parametric-face-v1"

    def __post_init__(self):
        if self.width < 32 or self.height < 32:
            raise ValueError(f"render size must be >= 32x32, "
                             f"got {self.width}x{self.height}")
        if not self.renderer_id:
            raise ValueError("renderer_id must be non-empty")


def clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def render_face(v, spec: RenderSpec = RenderSpec()) -> np.ndarray:
    """Render one face frame; returns an (H, W, 3) uint8 array.

    Components outside [0, 1] are clamped. Requires N >= 5.
    """
    vec = np.asarray(v, dtype=np.float64)
    if vec.ndim != 1 or vec.size < SEMANTIC_DIMS:
        raise ValueError(f"renderer needs at least {SEMANTIC_DIMS} components, "
                         f"got {vec.size if vec.ndim == 1 else vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("vector components must be finite")

    mouth_open = clamp01(float(vec[0]))
    mouth_width = clamp01(float(vec[1]))
    eye_open = clamp01(float(vec[2]))
    head_tilt = clamp01(float(vec[3]))
    brow_raise = clamp01(float(vec[4]))

    sx = spec.width / 256.0
    sy = spec.height / 256.0
    img = Image.new("RGB", (spec.width, spec.height), BG_COLOR)
    draw = ImageDraw.Draw(img)
    cx, cy = FACE_CENTER[0] * sx, FACE_CENTER[1] * sy

    draw.ellipse([cx - FACE_RADII[0] * sx, cy - FACE_RADII[1] * sy,
                  cx + FACE_RADII[0] * sx, cy + FACE_RADII[1] * sy],
                 fill=SKIN_COLOR, outline=OUTLINE_COLOR,
                 width=max(1, round(3 * sy)))

    brow_y = (BROW_Y_BASE - brow_raise * BROW_RAISE_RANGE) * sy
    eye_h = (EYE_MIN_HALF_H + eye_open * (EYE_MAX_HALF_H - EYE_MIN_HALF_H)) * sy
    for side in (-1, 1):
        ex = cx + side * EYE_OFFSET_X * sx
        draw.rectangle([ex - BROW_HALF_W * sx, brow_y - BROW_THICKNESS * sy / 2,
                        ex + BROW_HALF_W * sx, brow_y + BROW_THICKNESS * sy / 2],
                       fill=BROW_COLOR)
        draw.ellipse([ex - EYE_HALF_W * sx, EYE_Y * sy - eye_h,
                      ex + EYE_HALF_W * sx, EYE_Y * sy + eye_h], fill=EYE_WHITE)
        pupil_h = max(eye_h - 3.0 * sy, 1.0)
        draw.ellipse([ex - 5 * sx, EYE_Y * sy - pupil_h,
                      ex + 5 * sx, EYE_Y * sy + pupil_h], fill=PUPIL_COLOR)

    draw.polygon([(cx, 128.0 * sy), (cx - 7 * sx, 156.0 * sy),
                  (cx + 7 * sx, 156.0 * sy)], fill=NOSE_COLOR)

    half_w = (MOUTH_MIN_HALF_W + mouth_width * (MOUTH_MAX_HALF_W - MOUTH_MIN_HALF_W)) * sx
    half_h = (MOUTH_MIN_HALF_H + mouth_open * (MOUTH_MAX_HALF_H - MOUTH_MIN_HALF_H)) * sy
    my = MOUTH_Y * sy
    draw.ellipse([cx - half_w, my - half_h, cx + half_w, my + half_h],
                 fill=MOUTH_COLOR)

    angle = (head_tilt - 0.5) * HEAD_TILT_DEGREES
    if angle != 0.0:
        img = img.rotate(angle, resample=Image.BILINEAR,
                         center=(cx, cy), fillcolor=BG_COLOR)
    return np.asarray(img, dtype=np.uint8)


class ParametricFaceRenderer:
    """Default backend: the vector-drawn face above."""

    renderer_id = "parametric-face-v1"

    def __init__(self, spec: RenderSpec | None = None):
        self.spec = spec or RenderSpec()

    def render(self, v) -> np.ndarray:
        return render_face(v, self.spec)


class ParamBarsRenderer:
    """Diagnostic backend: the raw vector as vertical bars on a dark field."""

    renderer_id = "param-bars-v1"

    def __init__(self, spec: RenderSpec | None = None):
        self.spec = spec or RenderSpec(renderer_id=self.renderer_id)

    def render(self, v) -> np.ndarray:
        vec = np.asarray(v, dtype=np.float64)
        if vec.ndim != 1 or vec.size < 1:
            raise ValueError("expected a non-empty 1-D vector")
        w, h = self.spec.width, self.spec.height
        img = Image.new("RGB", (w, h), BG_COLOR)
        draw = ImageDraw.Draw(img)
        slot = w / vec.size
        for i, x in enumerate(vec):
            level = clamp01(float(x))
            bar_h = level * (h - 8)
            x0 = i * slot + slot * 0.15
            x1 = (i + 1) * slot - slot * 0.15
            hue = int(40 + (i * 197) % 180)
            draw.rectangle([x0, h - 4 - bar_h, x1, h - 4],
                           fill=(hue, 160, 255 - hue))
        return np.asarray(img, dtype=np.uint8)


_BACKENDS: dict[str, type] = {
    ParametricFaceRenderer.renderer_id: ParametricFaceRenderer,
    ParamBarsRenderer.renderer_id: ParamBarsRenderer,
}


def register_renderer(renderer_id: str, factory) -> None:
    _BACKENDS[renderer_id] = factory


def available_renderers() -> list[str]:
    return sorted(_BACKENDS)


def make_renderer(renderer_id: str, spec: RenderSpec | None = None):
    """Instantiate a registered backend; unknown ids list what is available."""
    factory = _BACKENDS.get(renderer_id)
    if factory is None:
        raise ValueError(f"unknown renderer {renderer_id!r}; "
                         f"available: {', '.join(available_renderers())}")
    if spec is None:
        return factory()
    return factory(spec)


# ---------------------------------------------------------------------------
# Image encode/decode

def encode_image(arr: np.ndarray, image_format: str = "png") -> bytes:
    """Encode an (H, W, 3) uint8 array; JPEG at quality 90, PNG lossless."""
    img = Image.fromarray(np.asarray(arr, dtype=np.uint8), "RGB")
    buf = io.BytesIO()
    if image_format in ("jpg", "jpeg"):
        img.save(buf, format="JPEG", quality=JPEG_QUALITY)
    elif image_format == "png":
        img.save(buf, format="PNG")
    else:
        raise ValueError(f"unsupported image format {image_format!r}")
    return buf.getvalue()


def decode_image(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data))
    return np.asarray(img.convert("RGB"), dtype=np.uint8)


def mouth_pixel_box(arr: np.ndarray) -> tuple[int, int, int, int] | None:
    """Bounding box (x0, y0, x1, y1) of mouth-colored pixels, or None.

    Measurement helper for geometry checks; exact color match, so only
    meaningful on unrotated, unscaled renders.
    """
    mask = np.all(arr == np.asarray(MOUTH_COLOR, dtype=np.uint8), axis=-1)
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return None
    return int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())
