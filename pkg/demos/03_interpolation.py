"""Phase 3 walkthrough: restore the frame rate with interpolated fills.

Shows the render plan structure and materializes it twice, once in
parameter space and once as a pixel crossfade.

    python demos/03_interpolation.py out/demo-library
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from rita import (build_index, embed_text_stub, load_library, match_sequence,
                  materialize, plan_interpolation, reduce_frames)
from rita.embedder import EmbedderConfig
from rita.interpolation import InterpolatedSource
from rita.renderer import RenderSpec, make_renderer

lib_dir = sys.argv[1] if len(sys.argv) > 1 else "out/demo-library"
lib = load_library(lib_dir)
renderer = make_renderer(lib.manifest.renderer_id, RenderSpec(256, 256))

stream = embed_text_stub("smooth motion", EmbedderConfig(n_dims=lib.n_dims,
                                                         fps=lib.fps))
reduced = reduce_frames(match_sequence(build_index(lib, "exact"), stream))
plan = plan_interpolation(reduced, target_fps=lib.fps, source_fps=stream.fps)

n_fill = sum(isinstance(e.source, InterpolatedSource) for e in plan.entries)
print(f"{len(reduced.kept)} kept frames -> plan of {len(plan.entries)} entries "
      f"({n_fill} interpolated fills at the midpoint)")
for entry in plan.entries[:5]:
    print(f"  t={entry.timestamp_ms:4d} ms  {entry.source}")

for mode in ("param_space", "crossfade"):
    frames = materialize(plan, lib, renderer, mode)
    cost = sum(f.produce_ms for f in frames)
    print(f"{mode:12s}: {len(frames)} frames materialized in {cost:.1f} ms")

out = Path("out/demo-interp")
out.mkdir(parents=True, exist_ok=True)
for frame in materialize(plan, lib, renderer, "param_space"):
    (out / f"frame_{frame.seq:05d}.{frame.image_format}").write_bytes(frame.data)
print(f"frames written to {out}")
