"""Real-time interactive talking avatar pipeline.

Three phases: build a foundational frame library pairing rendered frames
with their embedding rows; match new utterances against it under the
similarity distance (with pair reduction halving the cadence); restore the
frame rate by interpolation. A WebSocket service streams the result to chat
clients frame by frame.
"""

from .adapters import RemoteLlm, StubLlm, StubTts
from .embedder import (EmbedderConfig, FeatureFrameStream, embed_text_stub,
                       embed_wav, load_features, save_features)
from .interpolation import (RenderPlan, crossfade_images, interpolate_params,
                            materialize, plan_interpolation)
from .library import (FrameLibrary, FrameRecord, build_library, grid_stream,
                      library_stats, load_library, save_library)
from .matching import (Index, MatchResult, ReducedSequence, build_index,
                       match_sequence, query, reduce_frames)
from .metrics import (MetricConfig, DimensionMismatch, l1_distance,
                      similarity_distance)
from .pipeline import LatencyReport, PipelineContext, run_utterance
from .renderer import RenderSpec, encode_image, make_renderer, render_face
from .service import AvatarService, ServiceConfig, parse_config

__version__ = "0.1.0"

__all__ = [
    "AvatarService", "DimensionMismatch", "EmbedderConfig", "FeatureFrameStream",
    "FrameLibrary", "FrameRecord", "Index", "LatencyReport", "MatchResult",
    "MetricConfig", "PipelineContext", "ReducedSequence", "RemoteLlm",
    "RenderPlan", "RenderSpec", "ServiceConfig", "StubLlm", "StubTts",
    "build_index", "build_library", "crossfade_images", "embed_text_stub",
    "embed_wav", "encode_image", "grid_stream", "interpolate_params",
    "l1_distance", "library_stats", "load_features", "load_library",
    "make_renderer", "match_sequence", "materialize", "parse_config",
    "plan_interpolation", "query", "reduce_frames", "render_face",
    "run_utterance", "save_features", "save_library", "similarity_distance",
]
