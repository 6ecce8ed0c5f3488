"""Delaunay triangulation and Euclidean minimum spanning trees.

The EMST of a planar point set is a subgraph of its Delaunay
triangulation, so the tree is found by running Kruskal over the O(n)
Delaunay edges instead of the full O(n^2) pair set.  Triangulation is
delegated to Qhull (scipy), which carries the robust geometric predicates
this contract requires; degenerate inputs (fewer than three points, all
collinear, or all coincident) fall back to the complete graph, and partial
coincidence is handled by triangulating the distinct locations and linking
duplicates with zero-length edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .errors import DisconnectedGraphError


@dataclass(frozen=True)
class SpanningTree:
    node_count: int
    edges: tuple[tuple[int, int, float], ...]
    total_length: float

    def lengths(self) -> np.ndarray:
        return np.array([e[2] for e in self.edges], dtype=float)


class UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def _complete_edges(n: int) -> np.ndarray:
    i, j = np.triu_indices(n, k=1)
    return np.stack([i, j], axis=1)


def delaunay_edges(points: np.ndarray) -> np.ndarray:
    """Undirected Delaunay edge set, one (i, j) row per edge with i < j,
    lexicographically sorted.

    Below three points, or when every point is collinear/coincident, the
    complete graph is returned instead: it is tiny at the bin-count cap
    and always connects the nodes.  Partially coincident input is
    triangulated over the distinct locations, with zero-length edges
    linking each duplicate to its first occurrence.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 3:
        return _complete_edges(n)

    distinct, first_index, representative = np.unique(
        pts, axis=0, return_index=True, return_inverse=True
    )
    if len(distinct) < 3:
        return _complete_edges(n)

    try:
        tri = Delaunay(distinct)
    except QhullError:
        return _complete_edges(n)

    s = tri.simplices
    pairs = first_index[np.concatenate([s[:, [0, 1]], s[:, [0, 2]], s[:, [1, 2]]])]
    duplicates = np.nonzero(first_index[representative] != np.arange(n))[0]
    if len(duplicates):
        links = np.stack([first_index[representative[duplicates]], duplicates],
                         axis=1)
        pairs = np.concatenate([pairs, links])
    pairs.sort(axis=1)
    return np.unique(pairs, axis=0)


def mst_from_edges(
    node_count: int,
    candidate_edges,
    points: np.ndarray,
) -> SpanningTree:
    """Kruskal over the candidate edges, ties broken (length, i, j).

    candidate_edges is a sequence of (i, j) pairs or an (m, 2) array.
    Raises DisconnectedGraphError if the candidates do not span all nodes;
    Delaunay or complete-graph candidates always do.
    """
    pts = np.asarray(points, dtype=float)
    if node_count <= 1:
        return SpanningTree(node_count=node_count, edges=(), total_length=0.0)
    edges = np.asarray(candidate_edges, dtype=int).reshape(-1, 2)
    ii, jj = edges[:, 0], edges[:, 1]
    lengths = np.hypot(pts[ii, 0] - pts[jj, 0], pts[ii, 1] - pts[jj, 1])
    order = np.lexsort((jj, ii, lengths))
    si = ii[order].tolist()
    sj = jj[order].tolist()
    slen = lengths[order].tolist()

    uf = UnionFind(node_count)
    chosen: list[tuple[int, int, float]] = []
    for i, j, length in zip(si, sj, slen):
        if uf.union(i, j):
            chosen.append((i, j, length))
            if len(chosen) == node_count - 1:
                break
    if len(chosen) != node_count - 1:
        raise DisconnectedGraphError(
            f"candidate edges span {len(chosen) + 1} of {node_count} nodes"
        )
    total = float(sum(length for _, _, length in chosen))
    return SpanningTree(node_count=node_count, edges=tuple(chosen), total_length=total)


def euclidean_mst(points: np.ndarray) -> SpanningTree:
    """Delaunay-filtered EMST of a point set."""
    pts = np.asarray(points, dtype=float)
    return mst_from_edges(len(pts), delaunay_edges(pts), pts)
