"""Box-plot fence, outlying score, and selective leave-one-out deltas.

The outlying score of a plot is the fraction of the spanning tree's total
edge length carried by edges strictly longer than the upper Tukey fence
on the edge-length distribution.  Leave-one-out deltas quantify each
observation's contribution: remove its bin node, rebuild the tree, and
rescore *with the original fence*.  Re-deriving the fence from the reduced
tree can inflate the score (the quartiles shift once the removed edges
leave the distribution), so the original upper bound is reused verbatim
for every variant.

Only singleton-bin members are left out.  Removing one member of a denser
bin leaves the node set — bin centroids are frozen at binning time — and
therefore the score exactly unchanged, so those instances are marked
skipped with a delta of zero instead of being recomputed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binning import Binning
from .errors import NoEdgesError
from .geometry import SpanningTree, euclidean_mst
from .ingest import NormalizedPlot

DEFAULT_IQR_FACTOR = 1.5


@dataclass(frozen=True)
class OutlyingScore:
    score: float
    upperbound: float | None
    outlier_edge_indices: tuple[int, ...]
    outlier_length: float


@dataclass(frozen=True)
class InstanceDelta:
    """Signed score shift when one observation is left out.

    delta = loo_score - original_score: negative means the instance was
    driving the outlying score (an outlier, drawn purple downstream),
    positive means its absence exposes outliers it was masking (an inlier,
    drawn green).
    """

    instance_id: str
    delta: float
    loo_score: float
    skipped: bool


def compute_threshold(tree: SpanningTree, factor: float = DEFAULT_IQR_FACTOR) -> float:
    """Upper fence on the tree's edge lengths.

    Quartiles use integer index arithmetic on the ascending-sorted lengths
    (i50 = L div 2, i25 = i50 div 2, i75 = i50 + i25) rather than
    interpolated quantiles; for small L this biases the quartiles, which
    is accepted for procedure fidelity.
    """
    length_count = len(tree.edges)
    if length_count == 0:
        raise NoEdgesError("tree has no edges, cannot derive a fence")
    lengths = np.sort(tree.lengths())
    i50 = length_count // 2
    i25 = i50 // 2
    i75 = i50 + i25
    return float(lengths[i75] + factor * (lengths[i75] - lengths[i25]))


def outlying_score(tree: SpanningTree, upperbound: float) -> OutlyingScore:
    """Fraction of total edge length on edges strictly above the fence.

    An edge exactly at the fence is not outlying.  An empty tree, or one
    with zero total length, scores 0.
    """
    if not tree.edges or tree.total_length <= 0.0:
        return OutlyingScore(0.0, upperbound, (), 0.0)
    indices = tuple(
        k for k, (_, _, length) in enumerate(tree.edges) if length > upperbound
    )
    outlier_length = float(sum(tree.edges[k][2] for k in indices))
    return OutlyingScore(
        score=outlier_length / tree.total_length,
        upperbound=upperbound,
        outlier_edge_indices=indices,
        outlier_length=outlier_length,
    )


def score_tree(tree: SpanningTree, factor: float = DEFAULT_IQR_FACTOR) -> OutlyingScore:
    """Fence + score in one step; edgeless trees score 0 with no fence."""
    try:
        upperbound = compute_threshold(tree, factor)
    except NoEdgesError:
        return OutlyingScore(0.0, None, (), 0.0)
    return outlying_score(tree, upperbound)


def loo_score_without(centroids: np.ndarray, remove: int, upperbound: float) -> float:
    """Score of the plot with one bin node removed, original fence reused."""
    remaining = np.delete(centroids, remove, axis=0)
    return outlying_score(euclidean_mst(remaining), upperbound).score


def leave_one_out_deltas(
    plot: NormalizedPlot,
    binning: Binning,
    original: OutlyingScore,
) -> list[InstanceDelta]:
    """Per-instance deltas for one plot, ordered by instance id.

    Singleton-bin members get a real recomputation (node removed, tree
    rebuilt, original fence reused); members of denser bins are skipped
    with delta exactly 0.  The binning is never recomputed.  With a single
    bin, removal would empty the geometry, so everything is skipped.
    """
    centroids = binning.centroids()
    only_bin = len(binning.bins) <= 1
    deltas: list[InstanceDelta] = []
    for node, b in enumerate(binning.bins):
        if b.count == 1 and not only_bin:
            assert original.upperbound is not None
            loo = loo_score_without(centroids, node, original.upperbound)
            deltas.append(
                InstanceDelta(
                    instance_id=b.members[0],
                    delta=loo - original.score,
                    loo_score=loo,
                    skipped=False,
                )
            )
        else:
            deltas.extend(
                InstanceDelta(m, 0.0, original.score, True) for m in b.members
            )
    deltas.sort(key=lambda d: d.instance_id)
    return deltas
