import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import uniform_band_mass
from shadow_eval.attention import (
    AttentionError,
    AttentionMatrix,
    attention_path,
    diagonality,
    failure_frames,
    load_attention,
    path_deviation,
)
from shadow_eval.align import dtw_over_costs
from shadow_eval.features import FeatureMatrix, write_feature_matrix


def one_hot_diagonal(n):
    return AttentionMatrix(np.eye(n))


def uniform(t_out, t_in):
    return AttentionMatrix(np.full((t_out, t_in), 1.0 / t_in))


def random_stochastic(rng, t_out, t_in):
    raw = rng.random((t_out, t_in)) + 1e-6
    return AttentionMatrix(raw / raw.sum(axis=1, keepdims=True))


# --- validation ---


def test_rows_must_be_stochastic():
    with pytest.raises(AttentionError, match="sums to"):
        AttentionMatrix(np.array([[0.5, 0.4]]))
    with pytest.raises(AttentionError, match="non-negative"):
        AttentionMatrix(np.array([[1.5, -0.5]]))


def test_load_attention_from_fmx(tmp_path):
    w = np.eye(6, dtype=np.float32)
    path = tmp_path / "att.fmx"
    write_feature_matrix(FeatureMatrix(w, 10.0, "posteriorgram"), path)
    att = load_attention(path, source_id="src", target_id="tgt")
    assert att.n_out == att.n_in == 6
    assert att.source_id == "src"


# --- attention_path ---


def test_attention_path_identity():
    att = one_hot_diagonal(8)
    assert attention_path(att) == tuple((i, i) for i in range(8))


def test_attention_path_uniform_ties_pick_lowest():
    att = uniform(4, 7)
    assert attention_path(att) == tuple((i, 0) for i in range(4))


def test_attention_path_banded():
    rng = np.random.default_rng(2)
    n = 30
    w = np.zeros((n, n))
    for i in range(n):
        lo, hi = max(0, i - 2), min(n, i + 3)
        w[i, lo:hi] = rng.random(hi - lo) + 0.5
    att = AttentionMatrix(w / w.sum(axis=1, keepdims=True))
    for i, j in attention_path(att):
        assert abs(i - j) <= 2


# --- diagonality ---


def test_diagonality_one_hot_is_one():
    assert diagonality(one_hot_diagonal(40)) == 1.0


def test_diagonality_uniform_matches_band_mass():
    for t_out, t_in in ((100, 100), (60, 100), (100, 37), (5, 200)):
        att = uniform(t_out, t_in)
        assert diagonality(att) == pytest.approx(
            uniform_band_mass(t_out, t_in), abs=1e-12
        )


def test_diagonality_permuted_rows_scores_lower():
    base = np.eye(40)
    permuted = base.copy()
    permuted[[0, 39]] = permuted[[39, 0]]  # move two peaks far off-diagonal
    assert diagonality(AttentionMatrix(permuted)) < diagonality(AttentionMatrix(base))


def test_diagonality_single_output_frame():
    assert diagonality(AttentionMatrix(np.array([[0.2, 0.3, 0.5]]))) == 1.0


def test_diagonality_invariant_under_appending_diagonal_frames():
    for n in (2, 5, 30, 100):
        assert diagonality(one_hot_diagonal(n)) == 1.0


# --- failure_frames ---


def test_failure_frames_one_hot_none():
    assert failure_frames(one_hot_diagonal(20)) == []


def test_failure_frames_single_uniform_row():
    n = 64
    w = np.eye(n)
    w[5] = 1.0 / n
    att = AttentionMatrix(w)
    assert failure_frames(att) == [(5, 5)]


def test_failure_frames_fade_ramp_merges():
    n_in = 50
    rows = []
    for i in range(30):
        if 10 <= i <= 20:
            peak = 0.3 - 0.028 * (i - 10)  # fades from 0.3 down to ~0.02
        else:
            peak = 0.95
        row = np.full(n_in, (1.0 - peak) / (n_in - 1))
        row[min(i, n_in - 1)] = peak
        rows.append(row)
    att = AttentionMatrix(np.array(rows))
    ranges = failure_frames(att, peak_threshold=0.1, entropy_threshold=1.1)
    assert len(ranges) == 1
    start, end = ranges[0]
    peaks = att.weights.max(axis=1)
    failing = set(np.nonzero(peaks < 0.1)[0])
    assert set(range(start, end + 1)) == failing
    assert failing  # the ramp actually dips below the threshold


def test_failure_frames_entropy_rule():
    n = 100
    w = np.vstack([np.eye(n)[:3], np.full((1, n), 1.0 / n)])
    att = AttentionMatrix(w)
    ranges = failure_frames(att, peak_threshold=0.0, entropy_threshold=0.8)
    assert ranges == [(3, 3)]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_failure_frames_monotone_in_peak_threshold(seed):
    rng = np.random.default_rng(seed)
    att = random_stochastic(rng, 12, 9)
    thresholds = np.linspace(0.0, 1.0, 10)
    previous: set[int] = set()
    for t in thresholds:
        flagged = set()
        for s, e in failure_frames(att, peak_threshold=float(t), entropy_threshold=2.0):
            flagged.update(range(s, e + 1))
        assert previous <= flagged
        previous = flagged


# --- path_deviation ---


def test_path_deviation_identical_paths():
    path = tuple((i, i) for i in range(10))
    out = path_deviation(path, path)
    assert out.mean_abs_frames == 0.0
    assert out.normalized == 0.0


def test_path_deviation_constant_offset():
    att = tuple((i, i + 3) for i in range(10))
    ref = tuple((i, i) for i in range(10))
    out = path_deviation(att, ref, n_in=13)
    assert out.mean_abs_frames == pytest.approx(3.0)
    assert out.normalized == pytest.approx(3.0 / 13)


def test_path_deviation_resamples_dtw_path():
    # DTW path stalls on i=1 over j in {1,2,3}: resampled j = 2
    dtw_path = ((0, 0), (1, 1), (1, 2), (1, 3), (2, 4))
    att = ((0, 0), (1, 2), (2, 4))
    out = path_deviation(att, dtw_path)
    assert out.mean_abs_frames == 0.0
    assert out.n_in == 5


def test_path_deviation_matches_direct_sum():
    rng = np.random.default_rng(8)
    costs = rng.random((12, 15))
    dtw_path = dtw_over_costs(costs)
    att = tuple((i, int(rng.integers(0, 15))) for i in range(12))
    out = path_deviation(att, dtw_path)
    by_i = {}
    for i, j in dtw_path.steps:
        by_i.setdefault(i, []).append(j)
    expected = np.mean(
        [abs(att[i][1] - np.mean(by_i[i])) for i in range(12)]
    )
    assert out.mean_abs_frames == pytest.approx(float(expected), rel=1e-12)


def test_path_deviation_pseudometric_on_random_triples():
    rng = np.random.default_rng(9)
    n_out, n_in = 10, 14
    paths = [
        tuple((i, int(rng.integers(0, n_in))) for i in range(n_out)) for _ in range(3)
    ]
    d = {}
    for a in range(3):
        for b in range(3):
            d[(a, b)] = path_deviation(paths[a], paths[b], n_in=n_in).mean_abs_frames
    for a in range(3):
        assert d[(a, a)] == 0.0
        for b in range(3):
            assert d[(a, b)] == pytest.approx(d[(b, a)])
            for c in range(3):
                assert d[(a, c)] <= d[(a, b)] + d[(b, c)] + 1e-12


def test_path_deviation_length_mismatch_rejected():
    att = tuple((i, i) for i in range(5))
    ref = tuple((i, i) for i in range(7))
    with pytest.raises(AttentionError, match="length mismatch"):
        path_deviation(att, ref)
