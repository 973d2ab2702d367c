"""End-to-end walkthrough: chat turn to streamed frames with latency report.

    python demos/04_full_pipeline.py out/demo-library
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from rita import StubLlm, load_library
from rita.pipeline import PipelineContext, iter_utterance_text

lib_dir = sys.argv[1] if len(sys.argv) > 1 else "out/demo-library"
ctx = PipelineContext.create(load_library(lib_dir))

user_text = "hi there, tell me about yourself"
reply = StubLlm().respond([], user_text)
print(f"user:  {user_text}")
print(f"avatar reply: {reply}")

n = 0
for event in iter_utterance_text(ctx, reply):
    if event[0] == "frame":
        n += 1
        if n <= 3 or n % 25 == 0:
            frame = event[1]
            print(f"  frame {frame.seq:3d} at {frame.timestamp_ms:5d} ms "
                  f"({len(frame.data)} bytes, {frame.produce_ms:.2f} ms to make)")
    else:
        report = event[1]
print(f"{n} frames total")
print(f"latency: embed {report.embed_ms:.1f} ms | match {report.match_ms:.1f} ms"
      f" | reduce {report.reduce_ms:.2f} ms | interpolate "
      f"{report.interpolate_ms:.1f} ms | total {report.total_ms:.1f} ms")
print(f"audio {report.audio_duration_ms / 1000:.2f} s -> real-time factor "
      f"{report.real_time_factor:.3f}, first frame after {report.ttff_ms:.1f} ms")
print("serve this interactively:  rita serve --config service.conf")
