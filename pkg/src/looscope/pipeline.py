"""Whole-series orchestration: per-timestep analysis, instance profiles,
rankings, and the deterministic result document.

The unit of parallelism is a task: one per timestep for the original plot
(normalize, bin, tree, fence, score) and one per (timestep, singleton bin)
for the leave-one-out variants.  Tasks are side-effect-free and their
results are keyed, so assembly is independent of completion order and the
serialized output is bit-identical for any worker count.  For that same
reason the worker count is execution metadata, not analysis configuration,
and lives in the optional timings block rather than the config echo.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from .binning import Binning, leader_bin
from .config import AnalysisConfig
from .errors import DataError
from .geometry import SpanningTree, delaunay_edges, mst_from_edges
from .ingest import NormalizedPlot, TemporalBivariateDataset, normalize_plot
from .scoring import (
    InstanceDelta,
    OutlyingScore,
    leave_one_out_deltas,
    outlying_score,
    score_tree,
)

LOO_GROUP_SIZE = 32


@dataclass(frozen=True)
class BinningStats:
    bin_count: int
    singleton_count: int
    radius: float


@dataclass(frozen=True)
class TimestepSummary:
    """Fold of one timestep's deltas: inlying side (positive deltas) and
    outlying side (magnitudes of negative deltas)."""

    max_inlying: float
    avg_inlying: float
    max_outlying: float
    avg_outlying: float


@dataclass(frozen=True)
class TimestepResult:
    timestep_index: int
    degenerate: bool
    original: OutlyingScore
    binning_stats: BinningStats
    deltas: tuple[InstanceDelta, ...]
    summary: TimestepSummary
    top_impacts: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class InstanceProfile:
    """One observation's temporal signature: its delta at every timestep
    it appears in (None where absent) plus aggregate scores."""

    instance_id: str
    label: str
    original_scores: tuple[float, ...]
    deltas: tuple[float | None, ...]
    overall_outlying: float
    overall_inlying: float


@dataclass(frozen=True)
class AnalysisRun:
    results: tuple[TimestepResult, ...]
    profiles: tuple[InstanceProfile, ...]
    timings: dict | None


# ---------------------------------------------------------------------------
# tasks


@dataclass(frozen=True)
class _Prep:
    binning: Binning
    tree: SpanningTree
    original: OutlyingScore
    bin_ms: float
    triangulation_ms: float
    mst_ms: float
    boxrule_ms: float


def _prep_plot(plot: NormalizedPlot, bin_min: int, bin_max: int,
               factor: float) -> _Prep:
    t0 = time.perf_counter()
    binning = leader_bin(plot, bin_min, bin_max)
    t1 = time.perf_counter()
    centroids = binning.centroids()
    candidates = delaunay_edges(centroids)
    t2 = time.perf_counter()
    tree = mst_from_edges(len(centroids), candidates, centroids)
    t3 = time.perf_counter()
    original = score_tree(tree, factor)
    t4 = time.perf_counter()
    return _Prep(
        binning=binning,
        tree=tree,
        original=original,
        bin_ms=(t1 - t0) * 1e3,
        triangulation_ms=(t2 - t1) * 1e3,
        mst_ms=(t3 - t2) * 1e3,
        boxrule_ms=(t4 - t3) * 1e3,
    )


def _prep_star(args) -> _Prep:
    return _prep_plot(*args)


def _loo_node(centroids: np.ndarray, node: int,
              upperbound: float) -> tuple[float, float, float, float]:
    remaining = np.delete(centroids, node, axis=0)
    t0 = time.perf_counter()
    candidates = delaunay_edges(remaining)
    t1 = time.perf_counter()
    tree = mst_from_edges(len(remaining), candidates, remaining)
    t2 = time.perf_counter()
    score = outlying_score(tree, upperbound).score
    t3 = time.perf_counter()
    return score, (t1 - t0) * 1e3, (t2 - t1) * 1e3, (t3 - t2) * 1e3


def _loo_group(args) -> list[tuple[float, float, float, float]]:
    centroids, nodes, upperbound = args
    return [_loo_node(centroids, node, upperbound) for node in nodes]


# ---------------------------------------------------------------------------
# assembly


def summarize_deltas(deltas: list[InstanceDelta] | tuple[InstanceDelta, ...]) -> TimestepSummary:
    positive = [d.delta for d in deltas if d.delta > 0]
    negative = [-d.delta for d in deltas if d.delta < 0]
    return TimestepSummary(
        max_inlying=max(positive) if positive else 0.0,
        avg_inlying=float(sum(positive) / len(positive)) if positive else 0.0,
        max_outlying=max(negative) if negative else 0.0,
        avg_outlying=float(sum(negative) / len(negative)) if negative else 0.0,
    )


def top_impacts(deltas, k: int) -> tuple[tuple[str, float], ...]:
    nonzero = [d for d in deltas if d.delta != 0.0]
    nonzero.sort(key=lambda d: (-abs(d.delta), d.instance_id))
    return tuple((d.instance_id, d.delta) for d in nonzero[:k])


def _degenerate_result(t: int) -> TimestepResult:
    return TimestepResult(
        timestep_index=t,
        degenerate=True,
        original=OutlyingScore(0.0, None, (), 0.0),
        binning_stats=BinningStats(0, 0, 0.0),
        deltas=(),
        summary=TimestepSummary(0.0, 0.0, 0.0, 0.0),
        top_impacts=(),
    )


def _assemble_result(t: int, prep: _Prep, deltas: list[InstanceDelta],
                     top_k: int) -> TimestepResult:
    return TimestepResult(
        timestep_index=t,
        degenerate=False,
        original=prep.original,
        binning_stats=BinningStats(
            bin_count=len(prep.binning.bins),
            singleton_count=sum(1 for b in prep.binning.bins if b.count == 1),
            radius=prep.binning.radius,
        ),
        deltas=tuple(deltas),
        summary=summarize_deltas(deltas),
        top_impacts=top_impacts(deltas, top_k),
    )


def analyze_timestep(dataset: TemporalBivariateDataset, t: int,
                     config: AnalysisConfig) -> TimestepResult:
    """Single-timestep analysis; fewer than three samples is reported as a
    degenerate result (score 0, no deltas) rather than an error so series
    keep their length."""
    if len(dataset.present_at(t)) < 3:
        return _degenerate_result(t)
    plot = normalize_plot(dataset, t)
    prep = _prep_plot(plot, config.bin_min, config.bin_max, config.iqr_factor)
    deltas = leave_one_out_deltas(plot, prep.binning, prep.original)
    return _assemble_result(t, prep, deltas, config.top_k)


def _deltas_from_scores(binning: Binning, original: OutlyingScore,
                        loo_scores: dict[int, float]) -> list[InstanceDelta]:
    only_bin = len(binning.bins) <= 1
    out: list[InstanceDelta] = []
    for node, b in enumerate(binning.bins):
        if b.count == 1 and not only_bin:
            loo = loo_scores[node]
            out.append(InstanceDelta(b.members[0], loo - original.score, loo, False))
        else:
            out.extend(InstanceDelta(m, 0.0, original.score, True) for m in b.members)
    out.sort(key=lambda d: d.instance_id)
    return out


def analyze_all(dataset: TemporalBivariateDataset, config: AnalysisConfig,
                collect_timing: bool = False) -> AnalysisRun:
    """Analyze every timestep and assemble instance profiles.

    Output is bit-identical for any worker count: tasks are pure, results
    are keyed by (timestep, node), and assembly sorts by instance id.
    """
    wall0 = time.perf_counter()
    workers = config.resolved_workers()
    t_count = len(dataset.timesteps)
    plots: list[NormalizedPlot | None] = [
        normalize_plot(dataset, t) if len(dataset.present_at(t)) >= 3 else None
        for t in range(t_count)
    ]
    live = [t for t in range(t_count) if plots[t] is not None]

    preps: dict[int, _Prep] = {}
    loo_scores: dict[int, dict[int, float]] = {t: {} for t in live}
    loo_stage_times: list[tuple[float, float, float]] = []

    if workers <= 1 or not live:
        for t in live:
            preps[t] = _prep_plot(plots[t], config.bin_min, config.bin_max,
                                  config.iqr_factor)
        for t, nodes, upperbound in _loo_groups(preps):
            centroids = preps[t].binning.centroids()
            for node, (score, tri_ms, mst_ms, box_ms) in zip(
                nodes, _loo_group((centroids, nodes, upperbound))
            ):
                loo_scores[t][node] = score
                loo_stage_times.append((tri_ms, mst_ms, box_ms))
    else:
        ctx = get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            prep_args = [
                (plots[t], config.bin_min, config.bin_max, config.iqr_factor)
                for t in live
            ]
            for t, prep in zip(live, pool.map(_prep_star, prep_args)):
                preps[t] = prep
            groups = _loo_groups(preps)
            group_args = [
                (preps[t].binning.centroids(), nodes, ub)
                for t, nodes, ub in groups
            ]
            for (t, nodes, _), results in zip(groups, pool.map(_loo_group, group_args)):
                for node, (score, tri_ms, mst_ms, box_ms) in zip(nodes, results):
                    loo_scores[t][node] = score
                    loo_stage_times.append((tri_ms, mst_ms, box_ms))

    results: list[TimestepResult] = []
    for t in range(t_count):
        if plots[t] is None:
            results.append(_degenerate_result(t))
        else:
            prep = preps[t]
            deltas = _deltas_from_scores(prep.binning, prep.original, loo_scores[t])
            results.append(_assemble_result(t, prep, deltas, config.top_k))

    profiles = build_profiles(dataset, results, config.rank_agg)
    wall_ms = (time.perf_counter() - wall0) * 1e3

    timings = None
    if collect_timing:
        timings = {
            "workers_requested": config.workers,
            "workers_resolved": workers,
            "wall_ms": wall_ms,
            "per_timestep": [
                {
                    "t": t,
                    "bin_ms": preps[t].bin_ms,
                    "triangulation_ms": preps[t].triangulation_ms,
                    "mst_ms": preps[t].mst_ms,
                    "boxrule_ms": preps[t].boxrule_ms,
                }
                for t in live
            ],
            "loo": _loo_timing_summary(loo_stage_times),
        }
    return AnalysisRun(tuple(results), profiles, timings)


def _loo_groups(preps: dict[int, _Prep]) -> list[tuple[int, list[int], float]]:
    """Split each timestep's singleton nodes into fixed-size chunks; the
    chunking only shapes executor traffic, never results."""
    groups = []
    for t in sorted(preps):
        prep = preps[t]
        if len(prep.binning.bins) <= 1 or prep.original.upperbound is None:
            continue
        nodes = [i for i, b in enumerate(prep.binning.bins) if b.count == 1]
        for k in range(0, len(nodes), LOO_GROUP_SIZE):
            groups.append((t, nodes[k:k + LOO_GROUP_SIZE], prep.original.upperbound))
    return groups


def _loo_timing_summary(stage_times: list[tuple[float, float, float]]) -> dict:
    if not stage_times:
        return {"count": 0, "mean_triangulation_ms": 0.0, "mean_mst_ms": 0.0,
                "mean_boxrule_ms": 0.0, "mean_total_ms": 0.0}
    arr = np.array(stage_times)
    means = arr.mean(axis=0)
    return {
        "count": len(stage_times),
        "mean_triangulation_ms": float(means[0]),
        "mean_mst_ms": float(means[1]),
        "mean_boxrule_ms": float(means[2]),
        "mean_total_ms": float(arr.sum(axis=1).mean()),
    }


# ---------------------------------------------------------------------------
# profiles, ranking, filtering


def build_profiles(dataset: TemporalBivariateDataset,
                   results: list[TimestepResult] | tuple[TimestepResult, ...],
                   rank_agg: str) -> tuple[InstanceProfile, ...]:
    delta_by_t: list[dict[str, float]] = [
        {d.instance_id: d.delta for d in r.deltas} for r in results
    ]
    original_scores = tuple(r.original.score for r in results)
    profiles = []
    for inst in dataset.instances:
        deltas = tuple(delta_by_t[t].get(inst.id) for t in range(len(results)))
        outlying = [max(0.0, -d) for d in deltas if d is not None]
        inlying = [max(0.0, d) for d in deltas if d is not None]
        fold = max if rank_agg == "max" else sum
        profiles.append(
            InstanceProfile(
                instance_id=inst.id,
                label=inst.label,
                original_scores=original_scores,
                deltas=deltas,
                overall_outlying=float(fold(outlying)) if outlying else 0.0,
                overall_inlying=float(fold(inlying)) if inlying else 0.0,
            )
        )
    return tuple(profiles)


def profile_score(profile: InstanceProfile, mode: str, at: int | None = None) -> float:
    """Selected score: overall aggregate, or the per-timestep impact when a
    specific timestep is focused."""
    if mode not in ("outlying", "inlying"):
        raise DataError(f"mode must be outlying or inlying, got {mode!r}")
    if at is None:
        return profile.overall_outlying if mode == "outlying" else profile.overall_inlying
    if not (0 <= at < len(profile.deltas)):
        raise DataError(f"timestep index {at} out of range")
    delta = profile.deltas[at]
    if delta is None:
        return 0.0
    return max(0.0, -delta) if mode == "outlying" else max(0.0, delta)


def rank_instances(profiles, mode: str, at: int | None = None) -> list[str]:
    """Instance ids, descending by the selected score, ties by id; zero
    scores stay at the tail rather than being dropped."""
    if not profiles:
        raise DataError("no profiles to rank")
    keyed = [(-profile_score(p, mode, at), p.instance_id) for p in profiles]
    keyed.sort()
    return [iid for _, iid in keyed]


def filter_by_threshold(profiles, mode: str, threshold: float):
    if not (0.0 <= threshold <= 1.0):
        raise DataError(f"threshold must be within [0, 1], got {threshold}")
    return [p for p in profiles if profile_score(p, mode) >= threshold]


# ---------------------------------------------------------------------------
# result document


def dataset_hash(dataset: TemporalBivariateDataset) -> str:
    payload = {
        "axes": list(dataset.axis_names),
        "timesteps": list(dataset.timesteps),
        "instances": [[i.id, i.label] for i in dataset.instances],
        "samples": [
            [iid, t, x, y]
            for (iid, t), (x, y) in sorted(dataset.samples.items())
        ],
    }
    blob = json.dumps(payload, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _delta_dict(d: InstanceDelta) -> dict:
    return {"id": d.instance_id, "delta": d.delta, "loo_score": d.loo_score,
            "skipped": d.skipped}


def _result_dict(r: TimestepResult, label: str) -> dict:
    return {
        "t": r.timestep_index,
        "label": label,
        "degenerate": r.degenerate,
        "score": r.original.score,
        "upperbound": r.original.upperbound,
        "outlier_length": r.original.outlier_length,
        "outlier_edge_indices": list(r.original.outlier_edge_indices),
        "binning": {
            "bin_count": r.binning_stats.bin_count,
            "singleton_count": r.binning_stats.singleton_count,
            "radius": r.binning_stats.radius,
        },
        "deltas": [_delta_dict(d) for d in r.deltas],
        "summary": {
            "max_inlying": r.summary.max_inlying,
            "avg_inlying": r.summary.avg_inlying,
            "max_outlying": r.summary.max_outlying,
            "avg_outlying": r.summary.avg_outlying,
        },
        "top_impacts": [[iid, delta] for iid, delta in r.top_impacts],
    }


def _profile_dict(p: InstanceProfile) -> dict:
    return {
        "id": p.instance_id,
        "label": p.label,
        "original_scores": list(p.original_scores),
        "deltas": list(p.deltas),
        "overall_outlying": p.overall_outlying,
        "overall_inlying": p.overall_inlying,
    }


def result_document(dataset: TemporalBivariateDataset, config: AnalysisConfig,
                    run: AnalysisRun) -> dict:
    """Stable-field-order document; field values are independent of worker
    count except the optional timings block."""
    return {
        "config": {**config.to_dict(), "dataset_hash": dataset_hash(dataset)},
        "timesteps": [
            _result_dict(r, dataset.timesteps[r.timestep_index])
            for r in run.results
        ],
        "profiles": [_profile_dict(p) for p in run.profiles],
        "timings": run.timings,
    }


def document_bytes(document: dict) -> bytes:
    return json.dumps(document, separators=(",", ":"), ensure_ascii=True,
                      allow_nan=False).encode("utf-8")


def result_hash(document: dict) -> str:
    """Hash of the analysis content, ignoring the timings block."""
    stripped = {k: v for k, v in document.items() if k != "timings"}
    return hashlib.sha256(document_bytes(stripped)).hexdigest()


def write_result(path: str, document: dict) -> None:
    with open(path, "wb") as fh:
        fh.write(document_bytes(document))
        fh.write(b"\n")
