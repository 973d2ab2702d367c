"""Regenerate the checked-in golden fixtures from the independent references.

Run from the repository root:

    python tests/make_golden.py

Produces:
    tests/data/fixture_2s.wav          deterministic 2 s test waveform
    tests/data/fixture_2s.features     feature golden from the naive-DFT reference
    tests/data/match_trace_golden.txt  brute-force match trace for fixed data

The feature golden comes from the pure-Python reference in oracles.py (naive
DFT, plain arithmetic), never from the library under test.
"""

from __future__ import annotations

import math
import sys
import wave
from pathlib import Path

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

import oracles  # noqa: E402

SAMPLE_RATE = 8000
DURATION_S = 2.0
FPS = 25.0
N_DIMS = 8
# matches the default geometric ladder for N=8: geomspace(100, 3000, 5)
BAND_EDGES = [100.0 * (30.0 ** (i / 4.0)) for i in range(5)]


def fixture_samples() -> list[int]:
    """Two seconds of tonal content with a silent gap from 0.9 s to 1.1 s."""
    n = int(SAMPLE_RATE * DURATION_S)
    out = []
    for i in range(n):
        t = i / SAMPLE_RATE
        if 0.9 <= t < 1.1:
            out.append(0)
            continue
        env = 0.5 * (1.0 + math.sin(2.0 * math.pi * 1.5 * t - math.pi / 2.0))
        x = (0.55 * math.sin(2.0 * math.pi * 220.0 * t)
             + 0.25 * math.sin(2.0 * math.pi * 1400.0 * t + 1.0)
             + 0.12 * math.sin(2.0 * math.pi * 3100.0 * t + 2.0))
        out.append(max(-32768, min(32767, round(32000.0 * env * x))))
    return out


def write_fixture_wav(path: Path, samples: list[int]) -> None:
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(SAMPLE_RATE)
        frames = b"".join(int(s).to_bytes(2, "little", signed=True) for s in samples)
        w.writeframes(frames)


def write_feature_golden(path: Path, samples: list[int]) -> None:
    rows = oracles.embed_wav_reference(samples, SAMPLE_RATE, FPS, N_DIMS, BAND_EDGES)
    step = round(1000.0 / FPS)
    lines = [f"# rita-features v1 N={N_DIMS} fps={int(FPS)}"]
    for i, row in enumerate(rows):
        lines.append(f"{i * step}," + ",".join(repr(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"{path}: {len(rows)} feature rows")


def write_match_golden(path: Path) -> None:
    import numpy as np
    rows = np.asarray(oracles.MATCH_GOLDEN_LIBRARY, dtype=np.float64)
    step = 40
    lines = ["# rita-match v1"]
    for qi, q in enumerate(oracles.MATCH_GOLDEN_QUERIES):
        fid, sd = oracles.brute_force_best(np.asarray(q, dtype=np.float64), rows)
        # spot-check against the plain-Python path
        sd_py = oracles.sd_python(q, rows[fid])
        assert abs(sd - sd_py) < 1e-12, (sd, sd_py)
        lines.append(f"{qi},{fid},{repr(sd)},{qi * step}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"{path}: {len(oracles.MATCH_GOLDEN_QUERIES)} trace rows")


def main() -> None:
    data_dir = HERE / "data"
    data_dir.mkdir(exist_ok=True)
    samples = fixture_samples()
    write_fixture_wav(data_dir / "fixture_2s.wav", samples)
    print(f"{data_dir / 'fixture_2s.wav'}: {len(samples)} samples")
    write_feature_golden(data_dir / "fixture_2s.features", samples)
    write_match_golden(data_dir / "match_trace_golden.txt")


if __name__ == "__main__":
    main()
