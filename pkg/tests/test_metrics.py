import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from rita.metrics import (DEFAULT_EPS, DimensionMismatch, MetricConfig, as_vector,
                          l1_distance, similarity_distance,
                          similarity_distance_to_rows)

finite_floats = st.floats(min_value=-1e6, max_value=1e6,
                          allow_nan=False, allow_infinity=False)
vectors = st.lists(finite_floats, min_size=1, max_size=16)


def test_identity_case():
    assert similarity_distance([0.3, 0.7, 0.1], [0.3, 0.7, 0.1]) == 0.0


def test_hand_example():
    # |1-2|/2 + |2-4|/4 = 0.5 + 0.5
    assert similarity_distance([1, 2], [2, 4]) == 1.0


def test_zero_vectors_guarded():
    assert similarity_distance([0, 0], [0, 0]) == 0.0


def test_dimension_mismatch_names_both_lengths():
    with pytest.raises(DimensionMismatch) as exc:
        similarity_distance([1, 2, 3], [1, 2])
    assert "3" in str(exc.value) and "2" in str(exc.value)


def test_config_validation():
    with pytest.raises(ValueError):
        MetricConfig(eps=0.0)
    with pytest.raises(ValueError):
        MetricConfig(eps=-1e-9)
    with pytest.raises(DimensionMismatch):
        similarity_distance([1, 2, 3], [1, 2, 3], MetricConfig(n_dims=2))


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        similarity_distance([1.0, float("nan")], [1.0, 2.0])
    with pytest.raises(ValueError):
        as_vector([float("inf")])
    with pytest.raises(ValueError):
        as_vector([])


@given(vectors)
def test_identity_exact_for_random_vectors(values):
    assert similarity_distance(values, values) == 0.0


@given(vectors, st.data())
def test_symmetry_exact(a, data):
    b = data.draw(st.lists(finite_floats, min_size=len(a), max_size=len(a)))
    assert similarity_distance(a, b) == similarity_distance(b, a)


@given(vectors, st.data())
def test_non_negative_and_bounded_summands(a, data):
    b = data.draw(st.lists(finite_floats, min_size=len(a), max_size=len(a)))
    sd = similarity_distance(a, b)
    assert sd >= 0.0
    assert np.isfinite(sd)
    # each summand <= |a_n - b_n| / max(|a_n|, |b_n|, eps) <= 2 + eps slack
    # unless one side is tiny compared to eps, so bound against the oracle
    assert sd == pytest.approx(oracles.sd_python(a, b), abs=1e-12)


@settings(max_examples=200)
@given(st.lists(st.floats(min_value=0.0, max_value=1e3, allow_nan=False),
                min_size=1, max_size=12),
       st.data())
def test_monotone_in_single_nonneg_coordinate(a, data):
    idx = data.draw(st.integers(min_value=0, max_value=len(a) - 1))
    d1 = data.draw(st.floats(min_value=0.0, max_value=1e3, allow_nan=False))
    d2 = data.draw(st.floats(min_value=0.0, max_value=1e3, allow_nan=False))
    lo, hi = sorted((d1, d2))
    b_lo = list(a)
    b_hi = list(a)
    b_lo[idx] = a[idx] + lo
    b_hi[idx] = a[idx] + hi
    assert similarity_distance(a, b_lo) <= similarity_distance(a, b_hi) + 1e-12


def test_matches_python_oracle_on_random_pairs():
    rng = np.random.default_rng(11)
    for n in (2, 5, 16):
        for _ in range(50):
            a = rng.uniform(-5, 5, n)
            b = rng.uniform(-5, 5, n)
            assert similarity_distance(a, b) == pytest.approx(
                oracles.sd_python(a, b), abs=1e-12)


def test_row_batch_matches_scalar_path():
    rng = np.random.default_rng(3)
    rows = rng.random((40, 8))
    q = rng.random(8)
    batch = similarity_distance_to_rows(q, rows)
    singles = [similarity_distance(q, row) for row in rows]
    assert np.allclose(batch, singles, atol=0, rtol=0)


def test_l1_examples():
    assert l1_distance([1, 2], [1, 2]) == 0.0
    assert l1_distance([1, 2], [2, 4]) == 3.0
    assert l1_distance([0, 0, 0], [1, 1, 1]) == 3.0
    with pytest.raises(DimensionMismatch):
        l1_distance([1], [1, 2])


def test_eps_guard_keeps_tiny_components_finite():
    sd = similarity_distance([0.0, 1.0], [1e-12, 1.0])
    assert np.isfinite(sd)
    # denominator clamps at eps
    assert sd == pytest.approx(1e-12 / DEFAULT_EPS, rel=1e-9)
