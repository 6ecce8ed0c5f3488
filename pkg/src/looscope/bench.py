"""Timing harness: per-stage breakdown and parallel-speedup studies.

Each worker setting is executed ``repeats`` times (30 by default, so
reported times are stable rather than single-shot noise) and the mean wall
time is reported together with the speedup relative to the single-worker
baseline.  Stage timings (binning, triangulation, spanning tree, box-plot
rule) are collected from an instrumented run whose result hash is checked
against the untimed run: instrumentation must never change results.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, replace

from .config import AnalysisConfig
from .ingest import TemporalBivariateDataset
from .pipeline import analyze_all, result_document, result_hash


@dataclass(frozen=True)
class BenchRow:
    workers: int
    mean_ms: float
    speedup: float


@dataclass(frozen=True)
class BenchReport:
    repeats: int
    rows: tuple[BenchRow, ...]
    stage_breakdown: dict
    result_hash: str
    timed_hash_matches: bool

    def to_dict(self) -> dict:
        return {
            "repeats": self.repeats,
            "rows": [
                {"workers": r.workers, "mean_ms": r.mean_ms, "speedup": r.speedup}
                for r in self.rows
            ],
            "stage_breakdown": self.stage_breakdown,
            "result_hash": self.result_hash,
            "timed_hash_matches": self.timed_hash_matches,
        }


def bench_dataset(dataset: TemporalBivariateDataset,
                  worker_counts: list[int],
                  repeats: int = 30,
                  config: AnalysisConfig | None = None) -> BenchReport:
    """Mean wall time per worker count plus a per-stage breakdown.

    Speedups are relative to the workers=1 entry when present, otherwise
    to the first entry.  Absolute milliseconds are machine-dependent and
    not comparable across hosts.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    base = config or AnalysisConfig()

    means: dict[int, float] = {}
    for workers in worker_counts:
        cfg = replace(base, workers=workers)
        elapsed = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            analyze_all(dataset, cfg)
            elapsed.append((time.perf_counter() - t0) * 1e3)
        means[workers] = float(sum(elapsed) / len(elapsed))

    baseline = means.get(1, means[worker_counts[0]])
    rows = tuple(
        BenchRow(w, means[w], baseline / means[w] if means[w] > 0 else 0.0)
        for w in worker_counts
    )

    probe_cfg = replace(base, workers=worker_counts[0])
    untimed = analyze_all(dataset, probe_cfg)
    timed = analyze_all(dataset, probe_cfg, collect_timing=True)
    untimed_hash = result_hash(result_document(dataset, probe_cfg, untimed))
    timed_hash = result_hash(result_document(dataset, probe_cfg, timed))

    return BenchReport(
        repeats=repeats,
        rows=rows,
        stage_breakdown=timed.timings or {},
        result_hash=untimed_hash,
        timed_hash_matches=timed_hash == untimed_hash,
    )


def mean_loo_ms(report: BenchReport) -> float:
    loo = report.stage_breakdown.get("loo", {})
    return float(loo.get("mean_total_ms", 0.0))


def write_csv(report: BenchReport, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["workers", "mean_ms", "speedup"])
        for row in report.rows:
            writer.writerow([row.workers, f"{row.mean_ms:.3f}", f"{row.speedup:.3f}"])


def write_json(report: BenchReport, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
