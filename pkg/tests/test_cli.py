import csv
import os
import socket
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from conftest import make_stream
from rita.cli import EXIT_DATA, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from rita.embedder import save_features
from rita.library import load_library
from rita.matching import read_match_trace

SRC = str(Path(__file__).parent.parent / "src")


def run_cli(args):
    return main(args)


@pytest.fixture(scope="module")
def cli_library(tmp_path_factory):
    out = tmp_path_factory.mktemp("clilib") / "lib"
    code = run_cli(["build-library", "--grid", "--out", str(out),
                    "--image-size", "64", "--image-format", "png"])
    assert code == EXIT_OK
    return out


class TestBuildLibrary:
    def test_grid_build_reports_stats(self, tmp_path, capsys):
        out = tmp_path / "lib"
        assert run_cli(["build-library", "--grid", "--out", str(out),
                        "--image-size", "64"]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "k_frames=648" in printed
        assert "seconds_of_video=25.920" in printed  # 648 / 25
        lib = load_library(out)
        assert lib.k_frames == 648

    def test_missing_out_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run_cli(["build-library", "--grid"])
        assert exc.value.code == EXIT_USAGE

    def test_unknown_flag_rejected(self):
        with pytest.raises(SystemExit) as exc:
            run_cli(["build-library", "--grid", "--out", "x", "--turbo"])
        assert exc.value.code == EXIT_USAGE

    def test_build_from_wav(self, tmp_path, capsys):
        wav = Path(__file__).parent / "data" / "fixture_2s.wav"
        out = tmp_path / "wavlib"
        assert run_cli(["build-library", "--wav", str(wav), "--out", str(out),
                        "--image-size", "64"]) == EXIT_OK
        assert "k_frames=50" in capsys.readouterr().out


class TestMatch:
    def test_library_replay_trace_is_all_zero(self, cli_library, tmp_path, capsys):
        lib = load_library(cli_library)
        feat = tmp_path / "replay.features"
        save_features(make_stream(lib.param_matrix[:40]), feat)
        trace = tmp_path / "trace.txt"
        assert run_cli(["match", "--lib", str(cli_library), "--features",
                        str(feat), "--trace", str(trace)]) == EXIT_OK
        matches = read_match_trace(trace)
        assert [m.frame_id for m in matches] == list(range(40))
        assert all(m.sd == 0.0 for m in matches)
        assert "mean_sd=0.000000" in capsys.readouterr().out

    def test_compare_prints_recall(self, cli_library, tmp_path, capsys):
        assert run_cli(["match", "--lib", str(cli_library), "--text",
                        "compare me", "--mode", "approx", "--compare"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "recall@1=" in out

    def test_missing_query_file_is_data_error(self, cli_library):
        assert run_cli(["match", "--lib", str(cli_library), "--features",
                        "/nope/missing.features"]) == EXIT_DATA

    def test_corrupt_features_is_data_error(self, cli_library, tmp_path):
        bad = tmp_path / "bad.features"
        bad.write_text("# rita-features v1 N=8 fps=25\n0,1,2\n")
        assert run_cli(["match", "--lib", str(cli_library),
                        "--features", str(bad)]) == EXIT_DATA

    def test_dimension_mismatch_is_data_error(self, cli_library, tmp_path):
        other = tmp_path / "n4.features"
        save_features(make_stream(np.full((4, 4), 0.5)), other)
        assert run_cli(["match", "--lib", str(cli_library),
                        "--features", str(other)]) == EXIT_DATA


class TestSynth:
    def test_two_second_utterance_writes_fifty_frames(self, cli_library, tmp_path):
        out = tmp_path / "frames"
        text = "open and shut mouth words"  # 25 chars -> 50 feature frames
        assert run_cli(["synth", "--lib", str(cli_library), "--text", text,
                        "--out-dir", str(out)]) == EXIT_OK
        frames = sorted(out.glob("frame_*.png"))
        assert len(frames) == 50
        report = (out / "latency.txt").read_text()
        for key in ("embed_ms=", "match_ms=", "reduce_ms=", "interpolate_ms=",
                    "total_ms=", "real_time_factor=", "ttff_ms="):
            assert key in report

    def test_unknown_interp_mode_is_usage_error(self, cli_library, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run_cli(["synth", "--lib", str(cli_library), "--text", "x",
                     "--out-dir", str(tmp_path / "o"), "--interp", "warp-field"])
        assert exc.value.code == EXIT_USAGE

    def test_crossfade_mode(self, cli_library, tmp_path):
        out = tmp_path / "xfade"
        assert run_cli(["synth", "--lib", str(cli_library), "--text", "ab",
                        "--out-dir", str(out), "--interp", "crossfade"]) == EXIT_OK
        assert len(list(out.glob("frame_*.png"))) == 4


class TestBench:
    def test_csv_has_one_row_per_cell(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        assert run_cli(["bench", "--lib-sizes", "24,32", "--utterance-secs",
                        "0.4", "--runs", "2", "--image-size", "64",
                        "--csv", str(out)]) == EXIT_OK
        with open(out, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2  # |sizes| x |secs|
        assert list(rows[0]) == ["k_frames", "utterance_s", "embed_ms",
                                 "match_ms", "reduce_ms", "interpolate_ms",
                                 "total_ms", "ttff_ms", "rtf"]
        assert {r["k_frames"] for r in rows} == {"24", "32"}
        printed = capsys.readouterr().out
        assert "means over 2 runs" in printed
        assert "reference" in printed

    def test_empty_sizes_rejected(self):
        assert run_cli(["bench", "--lib-sizes", "", "--utterance-secs", "1"]) \
            == EXIT_DATA


class TestServe:
    def test_occupied_port_exits_runtime_error(self, cli_library, tmp_path):
        blocker = socket.socket()
        blocker.bind(("127.0.0.1", 0))
        blocker.listen(1)
        port = blocker.getsockname()[1]
        try:
            conf = tmp_path / "service.conf"
            conf.write_text(f"library = {cli_library}\n"
                            f"bind = 127.0.0.1:{port}\n")
            env = dict(os.environ, PYTHONPATH=SRC)
            proc = subprocess.run(
                [sys.executable, "-m", "rita.cli", "serve", "--config", str(conf)],
                capture_output=True, timeout=60, env=env, text=True)
            assert proc.returncode == EXIT_RUNTIME, proc.stderr
        finally:
            blocker.close()

    def test_missing_config_is_data_error(self):
        assert run_cli(["serve", "--config", "/nope/service.conf"]) == EXIT_DATA

    def test_no_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run_cli([])
        assert exc.value.code == EXIT_USAGE
