"""Phase 1 walkthrough: build a foundational frame library.

Renders a coverage lattice over the five semantic dimensions, persists it,
and reloads it to show the checksum-verified round trip.

    python demos/01_build_library.py [out_dir]
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from rita import build_library, grid_stream, library_stats, load_library
from rita.renderer import RenderSpec, make_renderer

out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/demo-library")

stream = grid_stream()
print(f"coverage lattice: {len(stream)} vectors, N={stream.n_dims}, "
      f"fps={stream.fps}")

renderer = make_renderer("parametric-face-v1", RenderSpec(256, 256))
lib = build_library([stream], renderer, out_dir)
stats = library_stats(lib)
print(f"built {stats.k_frames} frames "
      f"({stats.seconds_of_video:.1f} s of video, "
      f"{stats.total_bytes / 1e6:.1f} MB) in {out_dir}")

reloaded = load_library(out_dir)  # verifies every image checksum
print(f"reload OK: {reloaded.k_frames} frames, "
      f"renderer {reloaded.manifest.renderer_id}")
print(f"frame 0 pairs image {reloaded.records[0].image_path} with row "
      f"{reloaded.param_matrix[0].round(3)}")
