import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from looscope import (
    NoEdgesError,
    compute_threshold,
    euclidean_mst,
    leader_bin,
    leave_one_out_deltas,
    outlying_score,
    score_tree,
)
from looscope.geometry import SpanningTree
from looscope.synth import make_plot

from oracles import fence_from_lengths, loo_score_oracle, score_from_lengths


def chain_tree(gaps):
    """Collinear points whose spanning tree edges are the adjacent gaps.

    With integer gaps the edge lengths are bit-exact; float gaps land
    within cumsum rounding of the requested values.
    """
    xs = np.cumsum([0.0, *gaps])
    pts = np.stack([xs, np.zeros_like(xs)], axis=1)
    tree = euclidean_mst(pts)
    assert sorted(e[2] for e in tree.edges) == sorted(np.diff(xs).tolist())
    return tree


def test_threshold_flat_with_one_long_edge():
    tree = chain_tree([1, 1, 1, 1, 1, 1, 1, 10])
    assert compute_threshold(tree) == 1.0


def test_threshold_single_edge():
    tree = chain_tree([1])
    assert compute_threshold(tree) == 1.0


def test_threshold_even_spread():
    tree = chain_tree([2, 4, 6, 8])
    assert compute_threshold(tree) == 14.0


def test_threshold_matches_restated_arithmetic():
    rng = np.random.default_rng(3)
    for _ in range(25):
        gaps = rng.uniform(0.01, 2.0, size=int(rng.integers(1, 40)))
        tree = chain_tree(gaps)
        assert math.isclose(
            compute_threshold(tree),
            fence_from_lengths([e[2] for e in tree.edges]),
            rel_tol=1e-12,
        )


def test_threshold_factor_knob():
    tree = chain_tree([2, 4, 6, 8])
    assert compute_threshold(tree, factor=3.0) == 8 + 3.0 * (8 - 4)


def test_threshold_needs_edges():
    empty = SpanningTree(node_count=1, edges=(), total_length=0.0)
    with pytest.raises(NoEdgesError):
        compute_threshold(empty)


def test_score_flat_with_one_long_edge():
    tree = chain_tree([1, 1, 1, 1, 1, 1, 1, 10])
    result = outlying_score(tree, compute_threshold(tree))
    assert math.isclose(result.score, 10 / 17, abs_tol=1e-12)
    assert result.outlier_length == 10.0
    assert len(result.outlier_edge_indices) == 1


def test_score_all_equal_edges_is_zero():
    tree = chain_tree([3, 3, 3, 3, 3])
    result = outlying_score(tree, compute_threshold(tree))
    assert result.score == 0.0
    assert result.outlier_edge_indices == ()


def test_score_fence_below_everything_is_one():
    tree = chain_tree([2, 3, 4])
    result = outlying_score(tree, 1.0)
    assert result.score == 1.0
    assert len(result.outlier_edge_indices) == 3


def test_edge_exactly_at_fence_not_outlying():
    tree = chain_tree([1, 2])
    result = outlying_score(tree, 2.0)
    assert result.score == 0.0


def test_score_empty_tree_is_zero():
    empty = SpanningTree(node_count=1, edges=(), total_length=0.0)
    assert outlying_score(empty, 1.0).score == 0.0
    assert score_tree(empty).score == 0.0
    assert score_tree(empty).upperbound is None


@given(
    st.lists(st.floats(min_value=1e-6, max_value=10.0), min_size=1, max_size=60),
    st.floats(min_value=0.0, max_value=20.0),
)
@settings(max_examples=80)
def test_score_bounds_property(gaps, upperbound):
    tree = chain_tree(gaps)
    result = outlying_score(tree, upperbound)
    assert 0.0 <= result.score <= 1.0
    assert math.isclose(
        result.score, score_from_lengths([e[2] for e in tree.edges], upperbound),
        abs_tol=1e-12,
    )


def loo_setup(points, min_bins=1, max_bins=300):
    plot = make_plot(points)
    binning = leader_bin(plot, min_bins, max_bins)
    tree = euclidean_mst(binning.centroids())
    original = score_tree(tree)
    return plot, binning, original


def test_far_singleton_is_outlier():
    rng = np.random.default_rng(12)
    cluster = [tuple(p) for p in rng.uniform(0.0, 0.3, size=(40, 2))]
    plot, binning, original = loo_setup(cluster + [(0.95, 0.95)], 20, 200)
    far_id = plot.points[-1][0]
    deltas = {d.instance_id: d for d in leave_one_out_deltas(plot, binning, original)}
    assert not deltas[far_id].skipped
    assert deltas[far_id].delta < 0
    # independent recomputation agrees
    node = next(i for i, b in enumerate(binning.bins) if b.members == (far_id,))
    oracle = loo_score_oracle(binning.centroids(), node, original.upperbound)
    assert math.isclose(deltas[far_id].loo_score, oracle, rel_tol=1e-9)


def test_masking_chain_signs(masking_case):
    deltas = masking_case["deltas"]
    masker, outlier = masking_case["masker"], masking_case["outlier"]
    assert deltas[masker].delta > 0
    assert deltas[outlier].delta < 0
    binning = masking_case["binning"]
    original = masking_case["original"]
    for target in (masker, outlier):
        node = next(i for i, b in enumerate(binning.bins) if b.members == (target,))
        oracle = loo_score_oracle(binning.centroids(), node, original.upperbound)
        assert math.isclose(deltas[target].loo_score, oracle, rel_tol=1e-9)


def test_dense_bin_member_skipped():
    plot, binning, original = loo_setup(
        [(0.5, 0.5)] * 5 + [(0.1, 0.1), (0.9, 0.9)], 1, 10
    )
    deltas = {d.instance_id: d for d in leave_one_out_deltas(plot, binning, original)}
    for k in range(5):
        d = deltas[f"p{k:04d}"]
        assert d.skipped
        assert d.delta == 0.0
        assert d.loo_score == original.score


def test_single_bin_everything_skipped():
    plot, binning, original = loo_setup([(0.5, 0.5), (0.5, 0.5), (0.5, 0.5)], 1, 10)
    assert len(binning.bins) == 1
    deltas = leave_one_out_deltas(plot, binning, original)
    assert all(d.skipped for d in deltas)


def test_reused_fence_differs_from_rederived(masking_case):
    """Removing the masker shifts the quartiles; a re-derived fence would
    report a different (inflated) score than the reused-fence value the
    engine emits."""
    binning = masking_case["binning"]
    original = masking_case["original"]
    deltas = masking_case["deltas"]
    masker = masking_case["masker"]
    node = next(i for i, b in enumerate(binning.bins) if b.members == (masker,))
    remaining = np.delete(binning.centroids(), node, axis=0)
    loo_tree = euclidean_mst(remaining)
    rederived = outlying_score(loo_tree, compute_threshold(loo_tree)).score
    reused = outlying_score(loo_tree, original.upperbound).score
    assert rederived != reused
    assert deltas[masker].loo_score == reused
    assert deltas[masker].loo_score != rederived


def test_deltas_sorted_and_deterministic(masking_case):
    plot, binning, original = (
        masking_case["plot"], masking_case["binning"], masking_case["original"]
    )
    d1 = leave_one_out_deltas(plot, binning, original)
    d2 = leave_one_out_deltas(plot, binning, original)
    assert d1 == d2
    ids = [d.instance_id for d in d1]
    assert ids == sorted(ids)
    assert len(ids) == len(plot.points)


def test_delta_bounds(masking_case):
    for d in masking_case["deltas"].values():
        assert -1.0 <= d.delta <= 1.0
