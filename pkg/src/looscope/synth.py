"""Synthetic dataset builders for tests, benchmarks, and demos.

All generators are seed-deterministic.  ``mixture_dataset`` draws every
timestep from the same spatial mixture so datasets differing only in n are
directly comparable; ``sprinkle_dataset`` produces many isolated points
per timestep, maximizing the number of singleton bins (the leave-one-out
workload).
"""

from __future__ import annotations

import numpy as np

from .ingest import Instance, NormalizedPlot, TemporalBivariateDataset

UNIT_SCALE = (0.0, 1.0, 0.0, 1.0)


def make_plot(points: list[tuple[float, float]], t: int = 0,
              ids: list[str] | None = None) -> NormalizedPlot:
    """Wrap unit-square coordinates directly as a plot (identity scale)."""
    if ids is None:
        ids = [f"p{k:04d}" for k in range(len(points))]
    return NormalizedPlot(
        timestep_index=t,
        points=tuple((iid, float(u), float(v)) for iid, (u, v) in zip(ids, points)),
        scale=UNIT_SCALE,
    )


def dataset_from_frames(frames: list[list[tuple[float, float] | None]],
                        ids: list[str] | None = None,
                        timesteps: list[str] | None = None) -> TemporalBivariateDataset:
    """Dataset from per-timestep coordinate lists (None = absent)."""
    n = len(frames[0])
    if ids is None:
        ids = [f"p{k:04d}" for k in range(n)]
    if timesteps is None:
        timesteps = [f"t{t}" for t in range(len(frames))]
    samples = {}
    for t, frame in enumerate(frames):
        for k, coords in enumerate(frame):
            if coords is not None:
                samples[(ids[k], t)] = (float(coords[0]), float(coords[1]))
    return TemporalBivariateDataset(
        instances=tuple(Instance(i, i) for i in ids),
        timesteps=tuple(timesteps),
        samples=samples,
    )


def masking_points(cluster_n: int = 100, cluster_spread: float = 0.58,
                   seed: int = 34) -> list[tuple[float, float]]:
    """A crowded cluster in the lower-left, a fringe point A just outside
    it, and a far point B beyond A.

    A sits close enough to the cluster that its connecting edge stays
    under the fence while the A-B hop exceeds it: removing B drops the
    score, removing A strands B far from the crowd and raises it.  The
    default spread/seed were chosen so that re-deriving the fence after
    removing A also shifts the score, exercising the fence-reuse guard.
    """
    rng = np.random.default_rng(seed)
    cluster = rng.uniform(0.0, cluster_spread, size=(cluster_n, 2))
    return [tuple(p) for p in cluster] + [(0.6, 0.6), (0.9, 0.9)]


def masking_plot(cluster_n: int = 100, cluster_spread: float = 0.58,
                 seed: int = 34) -> tuple[NormalizedPlot, str, str]:
    """Masking construction plus the ids of A (masker) and B (outlier)."""
    points = masking_points(cluster_n, cluster_spread, seed)
    ids = [f"c{k:03d}" for k in range(len(points) - 2)] + ["A", "B"]
    return make_plot(points, ids=ids), "A", "B"


def mixture_frame(n: int, rng: np.random.Generator) -> np.ndarray:
    """One draw from a fixed spatial mixture: three blobs plus a sparse
    uniform sprinkle of isolated points."""
    centers = np.array([[0.25, 0.3], [0.65, 0.55], [0.4, 0.8]])
    weights = np.array([0.5, 0.3, 0.12])
    counts = (weights * n).astype(int)
    parts = [
        np.clip(rng.normal(c, 0.05, size=(k, 2)), 0.0, 1.0)
        for c, k in zip(centers, counts)
    ]
    sprinkle = n - int(counts.sum())
    parts.append(rng.uniform(0.0, 1.0, size=(sprinkle, 2)))
    return np.vstack(parts)


def mixture_dataset(n: int, t_count: int, seed: int = 11) -> TemporalBivariateDataset:
    rng = np.random.default_rng(seed)
    frames = [
        [tuple(p) for p in mixture_frame(n, rng)] for _ in range(t_count)
    ]
    return dataset_from_frames(frames)


def sprinkle_dataset(n: int, t_count: int, seed: int = 23) -> TemporalBivariateDataset:
    """Uniform scatter: nearly every bin ends up a singleton, so the
    leave-one-out task count is close to n_timesteps x bin count."""
    rng = np.random.default_rng(seed)
    frames = [
        [tuple(p) for p in rng.uniform(0.0, 1.0, size=(n, 2))]
        for _ in range(t_count)
    ]
    return dataset_from_frames(frames)
