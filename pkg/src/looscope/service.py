"""HTTP API feeding the analyst UI.

The service serves precomputed results: every score, delta, and fence the
UI shows is read from the result document, never recomputed, so serving
latency is independent of how large the dataset was.  Geometry for the
detail view (bins, spanning trees) is derived lazily from the dataset —
the same deterministic functions the pipeline ran — and outlying edge
flags are taken against the document's stored fence.

Errors are ``{"error": ..., "detail": ...}`` JSON.  All endpoints are
read-only except the dataset upload, which runs the full pipeline and
swaps the session atomically: concurrent readers see the old session or
the new one, never a mixture.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .config import AnalysisConfig
from .errors import DataError
from .geometry import SpanningTree, delaunay_edges, mst_from_edges
from .ingest import (
    TemporalBivariateDataset,
    normalize_plot,
    parse_dataset,
    sniff_format,
)
from .binning import Binning, leader_bin
from .pipeline import analyze_all, dataset_hash, result_document


@dataclass
class _TimestepGeometry:
    plot_points: list[dict]
    binning: Binning
    tree: SpanningTree


@dataclass
class ApiSession:
    """Dataset + result document + the config they were produced under."""

    document: dict
    config: AnalysisConfig
    dataset: TemporalBivariateDataset | None = None
    _geometry: dict[int, _TimestepGeometry] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def geometry(self, t: int) -> _TimestepGeometry | None:
        if self.dataset is None:
            return None
        with self._lock:
            if t not in self._geometry:
                self._geometry[t] = self._build_geometry(t)
            return self._geometry[t]

    def _build_geometry(self, t: int) -> _TimestepGeometry:
        assert self.dataset is not None
        plot = normalize_plot(self.dataset, t)
        binning = leader_bin(plot, self.config.bin_min, self.config.bin_max)
        centroids = binning.centroids()
        tree = mst_from_edges(len(centroids), delaunay_edges(centroids), centroids)
        points = [
            {
                "id": iid,
                "x": self.dataset.samples[(iid, t)][0],
                "y": self.dataset.samples[(iid, t)][1],
                "u": u,
                "v": v,
            }
            for iid, u, v in plot.points
        ]
        return _TimestepGeometry(points, binning, tree)


def build_session(dataset: TemporalBivariateDataset,
                  config: AnalysisConfig) -> ApiSession:
    run = analyze_all(dataset, config)
    return ApiSession(
        document=result_document(dataset, config, run),
        config=config,
        dataset=dataset,
    )


def session_from_document(document: dict,
                          dataset: TemporalBivariateDataset | None = None) -> ApiSession:
    config = AnalysisConfig.from_dict(document.get("config", {}))
    if dataset is not None:
        want = document.get("config", {}).get("dataset_hash")
        have = dataset_hash(dataset)
        if want is not None and want != have:
            raise DataError(
                f"result document was computed from a different dataset "
                f"(hash {want[:12]}... != {have[:12]}...)"
            )
    return ApiSession(document=document, config=config, dataset=dataset)


def _error(status: int, error: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": error, "detail": detail})


def _tree_payload(tree: SpanningTree, nodes: np.ndarray,
                  upperbound: float | None) -> dict:
    edges = [[i, j, length] for i, j, length in tree.edges]
    outlying = [
        k for k, (_, _, length) in enumerate(tree.edges)
        if upperbound is not None and length > upperbound
    ]
    return {
        "nodes": [[float(u), float(v)] for u, v in nodes],
        "edges": edges,
        "total": tree.total_length,
        "outlying_edges": outlying,
    }


def _bins_payload(binning: Binning) -> list[dict]:
    return [
        {
            "leader": [b.leader[0], b.leader[1]],
            "centroid": [b.centroid[0], b.centroid[1]],
            "members": list(b.members),
            "count": b.count,
        }
        for b in binning.bins
    ]


def create_app(session: ApiSession | None = None) -> FastAPI:
    app = FastAPI(title="looscope")
    app.state.session = session
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def current() -> ApiSession | None:
        return app.state.session

    @app.get("/api/meta")
    def meta():
        s = current()
        if s is None:
            return _error(404, "no_session", "no dataset or results loaded")
        doc = s.document
        instances = [
            {"id": p["id"], "label": p["label"]} for p in doc["profiles"]
        ]
        return {
            "axes": list(s.dataset.axis_names) if s.dataset else ["x", "y"],
            "timesteps": [t["label"] for t in doc["timesteps"]],
            "instances": instances,
            "config": {**doc["config"], "workers": s.config.resolved_workers()},
        }

    @app.get("/api/timesteps")
    def timesteps():
        s = current()
        if s is None:
            return _error(404, "no_session", "no dataset or results loaded")
        return [
            {
                "t": entry["t"],
                "label": entry["label"],
                "score": entry["score"],
                "degenerate": entry["degenerate"],
                "summary": entry["summary"],
            }
            for entry in s.document["timesteps"]
        ]

    @app.get("/api/timesteps/{t}/detail")
    def timestep_detail(t: int, instance: str | None = None):
        s = current()
        if s is None:
            return _error(404, "no_session", "no dataset or results loaded")
        entries = s.document["timesteps"]
        if not (0 <= t < len(entries)):
            return _error(404, "unknown_timestep", f"timestep {t} out of range")
        entry = entries[t]
        if s.dataset is None:
            return _error(409, "no_dataset",
                          "detail geometry needs the dataset, not just results")
        if entry["degenerate"]:
            return {
                "t": t,
                "label": entry["label"],
                "degenerate": True,
                "upperbound": None,
                "points": [
                    {
                        "id": iid,
                        "x": s.dataset.samples[(iid, t)][0],
                        "y": s.dataset.samples[(iid, t)][1],
                    }
                    for iid in s.dataset.present_at(t)
                ],
                "bins": [],
                "tree": None,
                "loo": None,
            }
        geo = s.geometry(t)
        upperbound = entry["upperbound"]
        centroids = geo.binning.centroids()
        payload = {
            "t": t,
            "label": entry["label"],
            "degenerate": False,
            "upperbound": upperbound,
            "score": entry["score"],
            "points": geo.plot_points,
            "bins": _bins_payload(geo.binning),
            "tree": _tree_payload(geo.tree, centroids, upperbound),
            "loo": None,
        }
        if instance is not None:
            node = _singleton_node(geo.binning, instance)
            if node == -1:
                return _error(404, "unknown_instance",
                              f"{instance!r} has no sample at timestep {t}")
            if node == -2:
                return _error(
                    409, "not_singleton",
                    f"{instance!r} shares a bin with other observations; "
                    "removing it leaves the node set unchanged, so no "
                    "leave-one-out tree exists",
                )
            remaining = np.delete(centroids, node, axis=0)
            loo_tree = mst_from_edges(len(remaining), delaunay_edges(remaining),
                                      remaining)
            loo_score = next(
                (d["loo_score"] for d in entry["deltas"] if d["id"] == instance),
                None,
            )
            payload["loo"] = {
                "instance": instance,
                "score": loo_score,
                "tree": _tree_payload(loo_tree, remaining, upperbound),
            }
        return payload

    @app.get("/api/rank")
    def rank(mode: str = Query("outlying"), t: int | None = Query(None)):
        s = current()
        if s is None:
            return _error(404, "no_session", "no dataset or results loaded")
        if mode not in ("outlying", "inlying"):
            return _error(400, "bad_mode", "mode must be outlying or inlying")
        profiles = s.document["profiles"]
        t_count = len(s.document["timesteps"])
        if t is not None and not (0 <= t < t_count):
            return _error(404, "unknown_timestep", f"timestep {t} out of range")

        def selected(profile: dict) -> float:
            if t is None:
                key = "overall_outlying" if mode == "outlying" else "overall_inlying"
                return profile[key]
            delta = profile["deltas"][t]
            if delta is None:
                return 0.0
            return max(0.0, -delta) if mode == "outlying" else max(0.0, delta)

        order = sorted(profiles, key=lambda p: (-selected(p), p["id"]))
        return {
            "mode": mode,
            "t": t,
            "order": [{"id": p["id"], "score": selected(p)} for p in order],
        }

    @app.get("/api/instances/{instance_id}/profile")
    def instance_profile(instance_id: str):
        s = current()
        if s is None:
            return _error(404, "no_session", "no dataset or results loaded")
        for profile in s.document["profiles"]:
            if profile["id"] == instance_id:
                return profile
        return _error(404, "unknown_instance", f"no instance {instance_id!r}")

    @app.post("/api/datasets")
    async def upload_dataset(request: Request, format: str | None = Query(None)):
        s = current()
        body = await request.body()
        try:
            fmt = format or sniff_format(body)
            dataset, report = parse_dataset(body, fmt)
            config = s.config if s is not None else AnalysisConfig()
            new_session = build_session(dataset, config)
        except DataError as exc:
            return _error(422, "bad_dataset", str(exc))
        app.state.session = new_session
        return {
            "timesteps": len(dataset.timesteps),
            "instances": len(dataset.instances),
            "rows_dropped": report.rows_dropped,
        }

    return app


def _singleton_node(binning: Binning, instance_id: str) -> int:
    """Bin index if instance sits alone in its bin, -1 unknown, -2 shared."""
    for node, b in enumerate(binning.bins):
        if instance_id in b.members:
            return node if b.count == 1 else -2
    return -1
