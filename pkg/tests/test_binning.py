import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from looscope import leader_bin, singleton_ids
from looscope.binning import _assign
from looscope.synth import make_plot

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def test_fewer_points_than_min_bins_gives_singletons():
    plot = make_plot([(k / 10, k / 10) for k in range(10)])
    binning = leader_bin(plot, min_bins=50, max_bins=250)
    assert len(binning.bins) == 10
    assert all(b.count == 1 for b in binning.bins)
    assert binning.radius > 0
    assert binning.note is not None


def test_search_lands_in_bracket_with_trace():
    rng = np.random.default_rng(42)
    plot = make_plot([tuple(p) for p in rng.uniform(0, 1, size=(300, 2))])
    binning = leader_bin(plot, min_bins=50, max_bins=250)
    assert 50 <= len(binning.bins) <= 250
    assert binning.search_trace
    for radius, count in binning.search_trace:
        assert radius > 0
        assert count >= 1
    final_radius, final_count = binning.search_trace[-1]
    assert final_radius == binning.radius
    assert final_count == len(binning.bins)


def test_search_drives_count_down_for_clumped_points():
    # fine grid: the initial radius yields 400 bins, the search must widen
    pts = [(i / 40, j / 40) for i in range(40) for j in range(40)]
    binning = leader_bin(make_plot(pts), min_bins=50, max_bins=250)
    assert 50 <= len(binning.bins) <= 250
    assert len(binning.search_trace) > 1
    assert binning.search_trace[0][1] > 250


def test_identical_points_share_one_bin():
    plot = make_plot([(0.3, 0.3), (0.3, 0.3)])
    binning = leader_bin(plot, min_bins=50, max_bins=250)
    assert len(binning.bins) == 1
    only = binning.bins[0]
    assert only.count == 2
    assert only.centroid == (0.3, 0.3)
    assert only.leader == (0.3, 0.3)


def test_singleton_ids_all_and_none():
    singles = leader_bin(make_plot([(0.1, 0.1), (0.5, 0.5), (0.9, 0.9)]), 1, 5)
    assert singleton_ids(singles) == ["p0000", "p0001", "p0002"]
    merged = leader_bin(make_plot([(0.5, 0.5)] * 5), 1, 5)
    assert singleton_ids(merged) == []


def test_singleton_ids_sizes_loo_grid(masking_case):
    binning = masking_case["binning"]
    singles = singleton_ids(binning)
    assert len(singles) == sum(1 for b in binning.bins if b.count == 1)
    assert {"A", "B"} <= set(singles)


def test_first_founded_leader_wins_ties():
    # p2 is within radius of both leaders; input order decides
    points = np.array([[0.0, 0.0], [0.2, 0.0], [0.1, 0.0]])
    bins = _assign(points, 0.12)
    assert bins == [[0, 2], [1]]


def test_membership_is_against_founding_point():
    # p1 drags the centroid right, but p2 is judged against the founder p0
    points = np.array([[0.0, 0.0], [0.09, 0.0], [0.15, 0.0]])
    bins = _assign(points, 0.1)
    assert bins == [[0, 1], [2]]


@given(st.lists(st.tuples(unit, unit), min_size=1, max_size=120))
@settings(max_examples=60, deadline=None)
def test_partition_property(points):
    plot = make_plot(points)
    binning = leader_bin(plot, min_bins=5, max_bins=40)
    members = [m for b in binning.bins for m in b.members]
    assert len(members) == len(points)
    assert len(set(members)) == len(members)


@given(st.lists(st.tuples(unit, unit), min_size=1, max_size=120))
@settings(max_examples=60, deadline=None)
def test_coverage_property(points):
    plot = make_plot(points)
    binning = leader_bin(plot, min_bins=5, max_bins=40)
    coords = {iid: (u, v) for iid, u, v in plot.points}
    for b in binning.bins:
        for member in b.members:
            px, py = coords[member]
            assert math.hypot(px - b.leader[0], py - b.leader[1]) <= binning.radius + 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_trace_counts_monotone_in_radius(seed):
    rng = np.random.default_rng(seed)
    plot = make_plot([tuple(p) for p in rng.uniform(0, 1, size=(400, 2))])
    binning = leader_bin(plot, min_bins=50, max_bins=100)
    by_radius = sorted(binning.search_trace)
    counts = [count for _, count in by_radius]
    assert counts == sorted(counts, reverse=True)


def test_binning_deterministic():
    rng = np.random.default_rng(9)
    pts = [tuple(p) for p in rng.uniform(0, 1, size=(200, 2))]
    b1 = leader_bin(make_plot(pts))
    b2 = leader_bin(make_plot(pts))
    assert b1 == b2


def test_duplicates_merge_even_when_unreachable():
    plot = make_plot([(0.2, 0.2), (0.2, 0.2), (0.8, 0.8)])
    binning = leader_bin(plot, min_bins=50, max_bins=250)
    assert [b.count for b in binning.bins] == [2, 1]
    assert binning.note is not None


def test_rejects_empty_plot_and_bad_bounds():
    plot = make_plot([(0.1, 0.2)])
    with pytest.raises(ValueError):
        leader_bin(make_plot([]))
    with pytest.raises(ValueError):
        leader_bin(plot, min_bins=10, max_bins=5)
