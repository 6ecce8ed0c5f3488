"""Leave-one-out outlier/inlier signatures for temporal scatterplot series.

Per timestep, a scatterplot's outlying score is the share of its spanning
tree's length carried by edges beyond the upper box-plot fence.  Each
observation's contribution is measured by selectively leaving it out
(singleton bins only), rebuilding the tree, and rescoring with the
original fence; the signed score shift over time is the observation's
temporal signature.
"""

from .binning import Bin, Binning, leader_bin, singleton_ids
from .config import AnalysisConfig
from .errors import (
    DataError,
    DisconnectedGraphError,
    EmptyPlotError,
    LooscopeError,
    NoEdgesError,
)
from .geometry import SpanningTree, delaunay_edges, euclidean_mst, mst_from_edges
from .ingest import (
    NormalizedPlot,
    ParseReport,
    TemporalBivariateDataset,
    normalize_plot,
    parse_dataset,
)
from .pipeline import (
    AnalysisRun,
    InstanceProfile,
    TimestepResult,
    TimestepSummary,
    analyze_all,
    analyze_timestep,
    filter_by_threshold,
    rank_instances,
    result_document,
    result_hash,
)
from .scoring import (
    InstanceDelta,
    OutlyingScore,
    compute_threshold,
    leave_one_out_deltas,
    outlying_score,
    score_tree,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig",
    "AnalysisRun",
    "Bin",
    "Binning",
    "DataError",
    "DisconnectedGraphError",
    "EmptyPlotError",
    "InstanceDelta",
    "InstanceProfile",
    "LooscopeError",
    "NoEdgesError",
    "NormalizedPlot",
    "OutlyingScore",
    "ParseReport",
    "SpanningTree",
    "TemporalBivariateDataset",
    "TimestepResult",
    "TimestepSummary",
    "analyze_all",
    "analyze_timestep",
    "compute_threshold",
    "delaunay_edges",
    "euclidean_mst",
    "filter_by_threshold",
    "leader_bin",
    "leave_one_out_deltas",
    "mst_from_edges",
    "normalize_plot",
    "outlying_score",
    "parse_dataset",
    "rank_instances",
    "result_document",
    "result_hash",
    "score_tree",
    "singleton_ids",
]
