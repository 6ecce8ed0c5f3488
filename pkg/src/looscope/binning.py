"""Leader binning of normalized plots.

A single pass walks the points in dataset order: a point joins the first
existing bin whose *founding point* lies within the coverage radius,
otherwise it founds a new bin.  The coverage radius is searched so the bin
count lands between ``min_bins`` and ``max_bins``, which caps the cost of
all downstream geometry regardless of how many observations the plot has.

The membership test anchors on the founding point (classic leader
algorithm); the representative handed to triangulation is the member
centroid.  Both are retained so either choice can be audited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import NormalizedPlot

INITIAL_RADIUS = math.sqrt(2) / 30
RADIUS_STEP = 1.5
MAX_SEARCH_ITERATIONS = 40


@dataclass(frozen=True)
class Bin:
    leader: tuple[float, float]
    centroid: tuple[float, float]
    members: tuple[str, ...]
    count: int


@dataclass(frozen=True)
class Binning:
    radius: float
    bins: tuple[Bin, ...]
    search_trace: tuple[tuple[float, int], ...]
    note: str | None = None

    def centroids(self) -> np.ndarray:
        return np.array([b.centroid for b in self.bins], dtype=float)

    def singleton_flags(self) -> list[bool]:
        return [b.count == 1 for b in self.bins]


def _assign(points: np.ndarray, radius: float) -> list[list[int]]:
    """One leader pass; returns member point-indices per bin, founding order.

    A grid hash with cell size == radius keeps the scan near-linear: any
    leader within the radius of a point lives in the 3x3 cell neighborhood.
    Candidates are tested in founding order, so the result is identical to
    the naive first-leader-within-radius scan.
    """
    leaders: list[tuple[float, float]] = []
    bins: list[list[int]] = []
    grid: dict[tuple[int, int], list[int]] = {}
    inv = 1.0 / radius
    for idx in range(len(points)):
        px, py = points[idx]
        cx, cy = int(px * inv), int(py * inv)
        candidates: list[int] = []
        for gx in (cx - 1, cx, cx + 1):
            for gy in (cy - 1, cy, cy + 1):
                candidates.extend(grid.get((gx, gy), ()))
        candidates.sort()
        assigned = -1
        for li in candidates:
            lx, ly = leaders[li]
            if (px - lx) ** 2 + (py - ly) ** 2 <= radius * radius:
                assigned = li
                break
        if assigned >= 0:
            bins[assigned].append(idx)
        else:
            leaders.append((px, py))
            bins.append([idx])
            grid.setdefault((cx, cy), []).append(len(leaders) - 1)
    return bins


def _assign_duplicates_only(points: np.ndarray) -> list[list[int]]:
    """Zero-radius limit: merge exactly coincident points."""
    by_pos: dict[tuple[float, float], int] = {}
    bins: list[list[int]] = []
    for idx, (px, py) in enumerate(points):
        key = (float(px), float(py))
        if key in by_pos:
            bins[by_pos[key]].append(idx)
        else:
            by_pos[key] = len(bins)
            bins.append([idx])
    return bins


def _duplicate_merge_radius(points: np.ndarray) -> float:
    """A positive radius below every nonzero pairwise gap."""
    distinct = np.unique(points, axis=0)
    if len(distinct) < 2:
        return INITIAL_RADIUS
    from scipy.spatial import cKDTree

    tree = cKDTree(distinct)
    gaps, _ = tree.query(distinct, k=2)
    return float(np.min(gaps[:, 1])) / 2


def _build(plot: NormalizedPlot, member_indices: list[list[int]],
           points: np.ndarray) -> tuple[Bin, ...]:
    ids = [p[0] for p in plot.points]
    made = []
    for members in member_indices:
        first = points[members[0]]
        centroid = points[members].mean(axis=0)
        if len(members) == 1:
            centroid = first
        made.append(
            Bin(
                leader=(float(first[0]), float(first[1])),
                centroid=(float(centroid[0]), float(centroid[1])),
                members=tuple(ids[m] for m in members),
                count=len(members),
            )
        )
    return tuple(made)


def leader_bin(plot: NormalizedPlot, min_bins: int = 50,
               max_bins: int = 250) -> Binning:
    """Bin a plot, adjusting the coverage radius until the bin count lands
    in [min_bins, max_bins].

    The radius moves geometrically (x1.5 when there are too many bins,
    /1.5 when too few) until the target bracket is straddled, then
    bisects.  If the bracket is structurally unreachable — fewer distinct
    points than min_bins — every distinct point becomes its own bin
    (coincident points still merge: no positive radius separates them) and
    the trace records why.
    """
    if not plot.points:
        raise ValueError("cannot bin an empty plot")
    if not (1 <= min_bins <= max_bins):
        raise ValueError(f"need 1 <= min_bins <= max_bins, got {min_bins}..{max_bins}")
    points = np.array([(u, v) for _, u, v in plot.points], dtype=float)
    distinct = len(np.unique(points, axis=0))

    if distinct < min_bins:
        member_indices = _assign_duplicates_only(points)
        radius = _duplicate_merge_radius(points)
        return Binning(
            radius=radius,
            bins=_build(plot, member_indices, points),
            search_trace=((radius, len(member_indices)),),
            note=f"only {distinct} distinct points; min_bins={min_bins} unreachable",
        )

    radius = INITIAL_RADIUS
    lo = None  # radius known to give too many bins (go bigger)
    hi = None  # radius known to give too few bins (go smaller)
    trace: list[tuple[float, int]] = []
    best: tuple[float, float, list[list[int]]] | None = None
    for _ in range(MAX_SEARCH_ITERATIONS):
        member_indices = _assign(points, radius)
        count = len(member_indices)
        trace.append((radius, count))
        if min_bins <= count <= max_bins:
            return Binning(radius, _build(plot, member_indices, points),
                           tuple(trace))
        distance = (min_bins - count) if count < min_bins else (count - max_bins)
        if best is None or (distance, radius) < (best[0], best[1]):
            best = (distance, radius, member_indices)
        if count > max_bins:
            lo = radius if lo is None else max(lo, radius)
            radius = (lo + hi) / 2 if hi is not None else min(radius * RADIUS_STEP, math.sqrt(2))
        else:
            hi = radius if hi is None else min(hi, radius)
            radius = (lo + hi) / 2 if lo is not None else radius / RADIUS_STEP
    assert best is not None
    _, radius, member_indices = best
    return Binning(radius, _build(plot, member_indices, points), tuple(trace),
                   note="radius search hit iteration cap; using nearest bracket")


def singleton_ids(binning: Binning) -> list[str]:
    """Instance ids of count-1 bins, in bin order: the leave-one-out
    candidates."""
    return [b.members[0] for b in binning.bins if b.count == 1]
