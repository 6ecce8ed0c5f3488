"""Analysis configuration knobs."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .errors import DataError

RANK_AGGREGATES = ("max", "sum")


@dataclass(frozen=True)
class AnalysisConfig:
    """Tunable parameters of the scoring pipeline.

    iqr_factor is the multiplier on the interquartile range when deriving
    the upper fence on spanning-tree edge lengths (1.5 by convention; 3.0
    flags only extreme cases).  bin_min/bin_max bracket the leader-binning
    search.  workers=0 resolves to the host's hardware concurrency at run
    time.  rank_agg selects how per-timestep impacts fold into an overall
    instance score.
    """

    iqr_factor: float = 1.5
    bin_min: int = 50
    bin_max: int = 250
    workers: int = 0
    rank_agg: str = "max"
    top_k: int = 5

    def __post_init__(self) -> None:
        if not self.iqr_factor > 0:
            raise DataError(f"iqr_factor must be > 0, got {self.iqr_factor}")
        if not (1 <= self.bin_min <= self.bin_max):
            raise DataError(
                f"need 1 <= bin_min <= bin_max, got {self.bin_min}..{self.bin_max}"
            )
        if self.workers < 0:
            raise DataError(f"workers must be >= 0, got {self.workers}")
        if self.rank_agg not in RANK_AGGREGATES:
            raise DataError(f"rank_agg must be one of {RANK_AGGREGATES}")
        if self.top_k < 1:
            raise DataError(f"top_k must be >= 1, got {self.top_k}")

    def resolved_workers(self) -> int:
        """Worker count with 0 resolved to hardware concurrency."""
        if self.workers > 0:
            return self.workers
        return os.cpu_count() or 1

    def to_dict(self) -> dict:
        """Analysis-affecting knobs only; worker count never changes scores
        and is deliberately kept out of result documents (see pipeline)."""
        return {
            "iqr_factor": self.iqr_factor,
            "bin_min": self.bin_min,
            "bin_max": self.bin_max,
            "rank_agg": self.rank_agg,
            "top_k": self.top_k,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisConfig":
        known = {k: data[k] for k in
                 ("iqr_factor", "bin_min", "bin_max", "rank_agg", "top_k", "workers")
                 if k in data}
        return cls(**known)
