"""Phase 2 walkthrough: match an utterance against the library, then halve
the cadence with pair reduction.

Needs a library from demo 01:

    python demos/01_build_library.py out/demo-library
    python demos/02_match_and_reduce.py out/demo-library
"""

import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from rita import build_index, embed_text_stub, load_library, match_sequence, reduce_frames
from rita.embedder import EmbedderConfig

lib_dir = sys.argv[1] if len(sys.argv) > 1 else "out/demo-library"
lib = load_library(lib_dir)

text = "hello there, how is the weather today?"
stream = embed_text_stub(text, EmbedderConfig(n_dims=lib.n_dims, fps=lib.fps))
print(f"utterance {text!r} -> {len(stream)} feature frames "
      f"({stream.duration_ms / 1000:.2f} s)")

for mode in ("exact", "approx"):
    index = build_index(lib, mode)
    t0 = time.perf_counter()
    matches = match_sequence(index, stream)
    dt = (time.perf_counter() - t0) * 1000
    print(f"{mode:6s}: {len(matches)} matches in {dt:.2f} ms, "
          f"mean distance {sum(m.sd for m in matches) / len(matches):.4f}")

reduced = reduce_frames(matches)
print(f"reduction kept {len(reduced.kept)} of {len(matches)} "
      f"(dropped {reduced.dropped_count})")
print("first ten kept frame ids:",
      [m.frame_id for m in reduced.kept[:10]])
