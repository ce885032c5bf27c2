import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import simplex_matrix
from oracles import dtw_min_cost, edit_distance_recursive
from shadow_eval.align import (
    AlignmentError,
    dtw,
    dtw_over_costs,
    edit_distance,
    frame_distance,
    pairwise_distances,
    path_from_json_dict,
    replay_edits,
)
from shadow_eval.features import FeatureMatrix


def mat(rows, kind="melcepstrum", period=10.0, normalized=False):
    return FeatureMatrix(np.asarray(rows, dtype=np.float64), period, kind, normalized)


# --- frame distances ---


@pytest.mark.parametrize("distance", ["euclidean", "cosine", "js_divergence"])
def test_frame_distance_identity(distance):
    x = np.array([0.25, 0.25, 0.5])
    assert frame_distance(x, x, distance) == 0.0


def test_cosine_orthogonal_unit_vectors():
    assert frame_distance([1.0, 0.0], [0.0, 1.0], "cosine") == pytest.approx(1.0)


def test_cosine_zero_vector_rules():
    assert frame_distance([0.0, 0.0], [0.0, 0.0], "cosine") == 0.0
    assert frame_distance([0.0, 0.0], [1.0, 0.0], "cosine") == 1.0
    assert frame_distance([1.0, 0.0], [0.0, 0.0], "cosine") == 1.0


def test_js_disjoint_support_is_one():
    assert frame_distance([1.0, 0.0], [0.0, 1.0], "js_divergence") == pytest.approx(1.0)


def test_js_requires_simplex():
    with pytest.raises(AlignmentError, match="simplex"):
        frame_distance([0.5, 0.2], [0.5, 0.5], "js_divergence")


def test_frame_distance_dimension_mismatch():
    with pytest.raises(AlignmentError, match="mismatch"):
        frame_distance([1.0], [1.0, 2.0], "euclidean")


def test_unknown_distance_rejected():
    with pytest.raises(AlignmentError, match="unknown distance"):
        frame_distance([1.0], [1.0], "manhattan")


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 6))
def test_js_bounded_and_symmetric(seed, dim):
    rng = np.random.default_rng(seed)
    p = simplex_matrix(rng, 1, dim)[0]
    q = simplex_matrix(rng, 1, dim)[0]
    d_pq = frame_distance(p, q, "js_divergence")
    d_qp = frame_distance(q, p, "js_divergence")
    assert 0.0 <= d_pq <= 1.0
    assert d_pq == pytest.approx(d_qp, abs=1e-12)


# --- DTW ---


def test_dtw_hand_example_with_stall():
    a = mat([[0.0], [1.0]])
    b = mat([[0.0], [0.0], [1.0]])
    path = dtw(a, b, "euclidean")
    assert path.steps == ((0, 0), (0, 1), (1, 2))
    assert path.total_cost == 0.0
    assert path.normalized_cost == 0.0


@pytest.mark.parametrize("distance", ["euclidean", "js_divergence"])
def test_dtw_identity_alignment(distance):
    rng = np.random.default_rng(3)
    frames = simplex_matrix(rng, 7, 4)
    a = mat(frames, kind="posteriorgram")
    path = dtw(a, a, distance)
    assert path.total_cost == 0.0
    assert len(path.steps) == 7
    assert all(i == j for i, j in path.steps)


def test_dtw_identity_cosine_near_zero():
    rng = np.random.default_rng(4)
    a = mat(rng.normal(0, 1, (6, 3)))
    path = dtw(a, a, "cosine")
    assert path.total_cost == pytest.approx(0.0, abs=1e-12)
    assert all(i == j for i, j in path.steps)


@pytest.mark.parametrize("distance", ["euclidean", "cosine", "js_divergence"])
def test_dtw_matches_enumeration_oracle(distance):
    rng = np.random.default_rng(11)
    for _ in range(40):
        ta, tb = rng.integers(1, 9, size=2)
        dim = int(rng.integers(1, 5))
        a = simplex_matrix(rng, ta, dim)
        b = simplex_matrix(rng, tb, dim)
        costs = pairwise_distances(a, b, distance)
        path = dtw_over_costs(costs)
        expected = dtw_min_cost(costs)
        assert path.total_cost == pytest.approx(expected, rel=1e-9, abs=1e-12)
        # returned path is itself a valid monotone path with that cost
        assert path.steps[0] == (0, 0)
        assert path.steps[-1] == (ta - 1, tb - 1)
        for (i0, j0), (i1, j1) in zip(path.steps, path.steps[1:]):
            assert (i1 - i0, j1 - j0) in ((1, 0), (0, 1), (1, 1))
        assert path.total_cost == pytest.approx(sum(path.local_costs), rel=1e-9)


def test_dtw_banded_matches_banded_oracle():
    rng = np.random.default_rng(12)
    for _ in range(20):
        ta, tb = rng.integers(2, 9, size=2)
        radius = int(abs(int(ta) - int(tb)) + rng.integers(0, 3))
        costs = rng.random((ta, tb))
        path = dtw_over_costs(costs, band_radius=radius)
        assert all(abs(i - j) <= radius for i, j in path.steps)
        assert path.total_cost == pytest.approx(
            dtw_min_cost(costs, band_radius=radius), rel=1e-9
        )


def test_dtw_band_wide_enough_equals_unbanded():
    rng = np.random.default_rng(13)
    costs = rng.random((7, 5))
    full = dtw_over_costs(costs)
    banded = dtw_over_costs(costs, band_radius=7)
    assert banded.steps == full.steps
    assert banded.total_cost == full.total_cost


def test_dtw_band_too_narrow_rejected():
    costs = np.ones((8, 3))
    with pytest.raises(AlignmentError, match="band"):
        dtw_over_costs(costs, band_radius=2)


def test_dtw_cost_symmetry():
    rng = np.random.default_rng(14)
    for distance in ("euclidean", "cosine", "js_divergence"):
        a = mat(simplex_matrix(rng, 6, 3), kind="posteriorgram")
        b = mat(simplex_matrix(rng, 4, 3), kind="posteriorgram")
        ab = dtw(a, b, distance).total_cost
        ba = dtw(b, a, distance).total_cost
        assert ab == pytest.approx(ba, rel=1e-9, abs=1e-12)


def test_dtw_dimension_mismatch():
    with pytest.raises(AlignmentError, match="mismatch"):
        dtw(mat([[1.0, 2.0]]), mat([[1.0]]), "euclidean")


def test_dtw_js_requires_raw_posteriorgrams():
    a = mat([[0.5, 0.5]], kind="posteriorgram")
    standardized = mat([[0.1, -0.1]], kind="posteriorgram", normalized=True)
    with pytest.raises(AlignmentError, match="raw posteriorgram"):
        dtw(a, standardized, "js_divergence")
    with pytest.raises(AlignmentError, match="raw posteriorgram"):
        dtw(mat([[0.5, 0.5]]), a, "js_divergence")  # melcepstrum kind


def test_dtw_tie_break_prefers_diagonal():
    # all-zero costs: every path ties, backtrace must pick the pure diagonal
    path = dtw_over_costs(np.zeros((4, 4)))
    assert path.steps == ((0, 0), (1, 1), (2, 2), (3, 3))


def test_dtw_deterministic():
    rng = np.random.default_rng(15)
    costs = rng.random((9, 7))
    p1 = dtw_over_costs(costs)
    p2 = dtw_over_costs(costs.copy())
    assert p1 == p2


def test_alignment_path_json_round_trip():
    path = dtw_over_costs(np.random.default_rng(16).random((5, 6)))
    doc = path.to_json_dict()
    back = path_from_json_dict(doc)
    assert back == path
    assert isinstance(doc["steps"][0], list)


# --- edit distance ---


def test_edit_identical():
    ops = edit_distance(["a", "b", "c"], ["a", "b", "c"])
    assert (ops.substitutions, ops.insertions, ops.deletions) == (0, 0, 0)
    assert ops.n_ref == 3


def test_edit_empty_reference():
    ops = edit_distance([], ["a", "a"])
    assert ops.insertions == 2
    assert ops.distance == 2


def test_edit_empty_hypothesis():
    ops = edit_distance(["a", "b"], [])
    assert ops.deletions == 2


def test_kitten_sitting_is_three():
    ops = edit_distance("kitten", "sitting")
    assert ops.distance == 3
    assert ops.distance == edit_distance_recursive("kitten", "sitting")


def test_edit_exhaustive_against_recursive_oracle():
    alphabet = "ab"
    seqs = [
        "".join(p)
        for length in range(0, 5)
        for p in itertools.product(alphabet, repeat=length)
    ]
    for ref in seqs:
        for hyp in seqs:
            assert edit_distance(ref, hyp).distance == edit_distance_recursive(ref, hyp)


def test_edit_metric_properties_exhaustive():
    alphabet = "ab"
    seqs = [
        "".join(p)
        for length in range(0, 4)
        for p in itertools.product(alphabet, repeat=length)
    ]
    dist = {(x, y): edit_distance(x, y).distance for x in seqs for y in seqs}
    for x in seqs:
        assert dist[(x, x)] == 0
        for y in seqs:
            assert dist[(x, y)] == dist[(y, x)]
            for z in seqs:
                assert dist[(x, z)] <= dist[(x, y)] + dist[(y, z)]


def test_edit_tie_break_prefers_match_then_sub():
    ops = edit_distance(["a", "b"], ["a", "c"])
    assert ops.op_trace == (("match", 0, 0), ("sub", 1, 1))


@settings(max_examples=80, deadline=None)
@given(
    ref=st.lists(st.sampled_from("abc"), max_size=8),
    hyp=st.lists(st.sampled_from("abc"), max_size=8),
)
def test_edit_trace_replays_to_hypothesis(ref, hyp):
    ops = edit_distance(ref, hyp)
    assert replay_edits(ref, hyp, ops) == hyp
    assert ops.substitutions + ops.insertions + ops.deletions == ops.distance
    # trace op counts match the reported counts
    from collections import Counter

    counts = Counter(op for op, _, _ in ops.op_trace)
    assert counts.get("sub", 0) == ops.substitutions
    assert counts.get("ins", 0) == ops.insertions
    assert counts.get("del", 0) == ops.deletions
