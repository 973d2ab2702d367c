import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from rita.embedder import FeatureFrameStream, frame_step_ms
from rita.library import build_library, grid_stream
from rita.renderer import RenderSpec, make_renderer

DATA_DIR = Path(__file__).parent / "data"


def make_stream(vectors, fps=25.0, kind="grid") -> FeatureFrameStream:
    vectors = np.asarray(vectors, dtype=np.float64)
    ts = np.arange(vectors.shape[0], dtype=np.int64) * frame_step_ms(fps)
    return FeatureFrameStream(ts, vectors, fps, kind)


def random_stream(rng, n_frames, n_dims=8, fps=25.0) -> FeatureFrameStream:
    return make_stream(rng.random((n_frames, n_dims)), fps=fps)


@pytest.fixture(scope="session")
def small_renderer():
    return make_renderer("parametric-face-v1", RenderSpec(64, 64))


@pytest.fixture(scope="session")
def grid_library(tmp_path_factory, small_renderer):
    """Compact PNG lattice library shared by read-only tests."""
    out = tmp_path_factory.mktemp("gridlib")
    stream = grid_stream(steps=(4, 3, 2, 2, 2))
    return build_library([stream], small_renderer, out, image_format="png")
