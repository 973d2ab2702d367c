"""Operator command line for every pipeline phase.

Exit codes: 0 success, 1 usage error, 2 data error (bad or inconsistent
input files), 3 runtime error (environment failures such as an occupied
port).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from .embedder import (EmbedderConfig, FeatureParseError, embed_text_stub,
                       embed_wav_file, load_features)
from .library import (LibraryCorruptError, build_library, grid_stream,
                      library_stats, load_library)
from .matching import build_index, match_sequence, reduce_frames, write_match_trace
from .metrics import DimensionMismatch
from .pipeline import (REFERENCE_INTERPOLATE_S, REFERENCE_MATCH_S,
                       PipelineContext, run_utterance, summarize_reports)
from .renderer import RenderSpec, make_renderer
from .service import parse_config, run_service

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

DATA_ERRORS = (DimensionMismatch, FeatureParseError, LibraryCorruptError,
               FileNotFoundError, json.JSONDecodeError)


class _Parser(argparse.ArgumentParser):
    """argparse with the usage exit code pinned to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="rita", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-library", help="render a foundational frame library")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--features", nargs="+", metavar="FILE",
                     help="feature files to render")
    src.add_argument("--wav", nargs="+", metavar="FILE", help="WAV files to embed")
    src.add_argument("--grid", action="store_true",
                     help="synthesize a coverage lattice over the semantic dims")
    p.add_argument("--out", required=True, help="output library directory")
    p.add_argument("--n-dims", type=int, default=8)
    p.add_argument("--fps", type=float, default=25.0)
    p.add_argument("--image-format", choices=("jpg", "png"), default="jpg")
    p.add_argument("--image-size", type=int, default=256,
                   help="square frame size in pixels")

    p = sub.add_parser("match", help="match a query stream against a library")
    p.add_argument("--lib", required=True)
    q = p.add_mutually_exclusive_group(required=True)
    q.add_argument("--features", metavar="FILE")
    q.add_argument("--wav", metavar="FILE")
    q.add_argument("--text")
    p.add_argument("--mode", choices=("exact", "approx"), default="exact")
    p.add_argument("--candidate-k", type=int, default=32)
    p.add_argument("--trace", metavar="FILE", help="write the match trace here")
    p.add_argument("--compare", action="store_true",
                   help="run both modes and report approx recall@1 vs exact")

    p = sub.add_parser("synth", help="full pipeline: text/audio to output frames")
    p.add_argument("--lib", required=True)
    q = p.add_mutually_exclusive_group(required=True)
    q.add_argument("--text")
    q.add_argument("--wav", metavar="FILE")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--interp", choices=("param_space", "crossfade"),
                   default="param_space")
    p.add_argument("--target-fps", type=float, default=None)
    p.add_argument("--mode", choices=("exact", "approx"), default="exact")

    p = sub.add_parser("bench", help="per-phase latency over library sizes x utterance lengths")
    p.add_argument("--lib-sizes", default="600,1200",
                   help="comma-separated frame counts")
    p.add_argument("--utterance-secs", default="2,4",
                   help="comma-separated utterance lengths in seconds")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--csv", metavar="FILE", help="write the result table here")
    p.add_argument("--mode", choices=("exact", "approx"), default="exact")
    p.add_argument("--n-dims", type=int, default=8)
    p.add_argument("--fps", type=float, default=25.0)
    p.add_argument("--image-size", type=int, default=128)

    p = sub.add_parser("serve", help="run the WebSocket avatar service")
    p.add_argument("--config", required=True, help="key=value config file")

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "build-library": _cmd_build_library,
        "match": _cmd_match,
        "synth": _cmd_synth,
        "bench": _cmd_bench,
        "serve": _cmd_serve,
    }[args.command]
    try:
        return handler(args)
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    raise SystemExit(main())


def _load_streams(args) -> list:
    cfg = EmbedderConfig(n_dims=args.n_dims, fps=args.fps)
    if args.grid:
        return [grid_stream(n_dims=args.n_dims, fps=args.fps)]
    if args.features:
        return [load_features(f) for f in args.features]
    return [embed_wav_file(f, cfg) for f in args.wav]


def _cmd_build_library(args) -> int:
    streams = _load_streams(args)
    spec = RenderSpec(args.image_size, args.image_size)
    renderer = make_renderer(spec.renderer_id, spec)
    lib = build_library(streams, renderer, args.out, image_format=args.image_format)
    stats = library_stats(lib)
    print(f"library written to {args.out}")
    print(f"k_frames={stats.k_frames} n_dims={stats.n_dims} fps={stats.fps} "
          f"total_bytes={stats.total_bytes} "
          f"seconds_of_video={stats.seconds_of_video:.3f}")
    return EXIT_OK


def _query_stream(args, lib):
    cfg = EmbedderConfig(n_dims=lib.n_dims, fps=lib.fps)
    if args.text is not None:
        return embed_text_stub(args.text, cfg)
    if args.features:
        return load_features(args.features)
    return embed_wav_file(args.wav, cfg)


def _cmd_match(args) -> int:
    lib = load_library(args.lib)
    stream = _query_stream(args, lib)
    index = build_index(lib, args.mode, candidate_k=args.candidate_k)
    t0 = time.perf_counter()
    matches = match_sequence(index, stream)
    match_ms = (time.perf_counter() - t0) * 1000.0
    reduced = reduce_frames(matches)
    print(f"matched {len(matches)} frames in {match_ms:.1f} ms "
          f"({args.mode} mode), kept {len(reduced.kept)} after reduction")
    mean_sd = float(np.mean([m.sd for m in matches]))
    print(f"mean_sd={mean_sd:.6f}")
    if args.compare:
        other = "exact" if args.mode == "approx" else "approx"
        other_index = build_index(lib, other, candidate_k=args.candidate_k)
        other_matches = match_sequence(other_index, stream)
        exact_seq = matches if args.mode == "exact" else other_matches
        approx_seq = other_matches if args.mode == "exact" else matches
        agree = sum(a.frame_id == b.frame_id
                    for a, b in zip(exact_seq, approx_seq))
        print(f"recall@1={agree / len(matches):.4f} over {len(matches)} queries")
    if args.trace:
        write_match_trace(args.trace, matches)
        print(f"trace written to {args.trace}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    lib = load_library(args.lib)
    ctx = PipelineContext.create(lib, index_mode=args.mode,
                                 target_fps=args.target_fps,
                                 interp_mode=args.interp)
    if args.text is not None:
        result = run_utterance(ctx, text=args.text)
    else:
        from .embedder import read_wav
        samples, rate = read_wav(args.wav)
        result = run_utterance(ctx, samples=samples, sample_rate=rate)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for frame in result.frames:
        (out / f"frame_{frame.seq:05d}.{frame.image_format}").write_bytes(frame.data)
    r = result.report
    lines = [f"embed_ms={r.embed_ms:.3f}", f"match_ms={r.match_ms:.3f}",
             f"reduce_ms={r.reduce_ms:.3f}",
             f"interpolate_ms={r.interpolate_ms:.3f}",
             f"total_ms={r.total_ms:.3f}",
             f"audio_duration_ms={r.audio_duration_ms:.1f}",
             f"real_time_factor={r.real_time_factor:.4f}",
             f"ttff_ms={r.ttff_ms:.3f}"]
    (out / "latency.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"{len(result.frames)} frames written to {out}")
    for line in lines:
        print(line)
    return EXIT_OK


BENCH_COLUMNS = ("k_frames", "utterance_s", "embed_ms", "match_ms", "reduce_ms",
                 "interpolate_ms", "total_ms", "ttff_ms", "rtf")


def _cmd_bench(args) -> int:
    sizes = [int(s) for s in args.lib_sizes.split(",") if s.strip()]
    secs = [float(s) for s in args.utterance_secs.split(",") if s.strip()]
    if not sizes or not secs or args.runs < 1:
        raise ValueError("bench needs at least one size, one duration, one run")

    rng = np.random.default_rng(7)
    spec = RenderSpec(args.image_size, args.image_size)
    renderer = make_renderer(spec.renderer_id, spec)
    cfg = EmbedderConfig(n_dims=args.n_dims, fps=args.fps)
    rows = []

    with tempfile.TemporaryDirectory(prefix="rita-bench-") as tmp:
        for k in sizes:
            lib_dir = Path(tmp) / f"lib{k}"
            stream = _random_stream(rng, k, cfg)
            lib = build_library([stream], renderer, lib_dir)
            ctx = PipelineContext.create(lib, index_mode=args.mode)
            for s in secs:
                # two frames per character in the stub: chars = secs*fps/2
                text = _bench_text(int(round(s * args.fps / 2)))
                reports = [run_utterance(ctx, text=text).report
                           for _ in range(args.runs)]
                mean = summarize_reports(reports)
                row = {
                    "k_frames": k, "utterance_s": s,
                    "embed_ms": round(mean["embed_ms"], 3),
                    "match_ms": round(mean["match_ms"], 3),
                    "reduce_ms": round(mean["reduce_ms"], 3),
                    "interpolate_ms": round(mean["interpolate_ms"], 3),
                    "total_ms": round(mean["total_ms"], 3),
                    "ttff_ms": round(mean["ttff_ms"], 3),
                    "rtf": round(mean["real_time_factor"], 4),
                }
                rows.append(row)
                print(",".join(str(row[c]) for c in BENCH_COLUMNS))

    print(f"# means over {args.runs} runs per cell")
    print(f"# reference (neural-backend deployment): "
          f"match={REFERENCE_MATCH_S}s interpolate={REFERENCE_INTERPOLATE_S}s")
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
        print(f"csv written to {args.csv}")
    return EXIT_OK


def _random_stream(rng, k, cfg):
    from .embedder import FeatureFrameStream, frame_step_ms
    vectors = rng.random((k, cfg.n_dims))
    ts = np.arange(k, dtype=np.int64) * frame_step_ms(cfg.fps)
    return FeatureFrameStream(ts, vectors, cfg.fps, "grid")


def _bench_text(n_chars: int) -> str:
    seed = "the quick onyx goblin jumps over a lazy dwarf "
    text = (seed * (n_chars // len(seed) + 1))[:max(n_chars, 1)]
    return text if text.strip() else "a"


def _cmd_serve(args) -> int:
    config = parse_config(args.config)
    run_service(config)
    return EXIT_OK


if __name__ == "__main__":
    entrypoint()
