"""Parsing and per-timestep normalization of temporal bivariate datasets.

Two interchange formats are accepted:

* ``long_csv`` — header ``instance,time,x,y``, comma separated, ``.``
  decimal point, UTF-8.  Rows with missing or non-numeric coordinates are
  dropped and counted; duplicate (instance, time) pairs are an error.
* ``wide_json`` — ``{"axes": [xName, yName], "timesteps": [...],
  "instances": [{"id": ..., "values": [[x, y] | null, ...]}]}``.

Instance and timestep order follow first appearance in the input and are
part of the reproducibility contract (binning walks points in dataset
order).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DataError, EmptyPlotError

FORMATS = ("long_csv", "wide_json")

Sample = tuple[float, float]
SampleKey = tuple[str, int]


@dataclass(frozen=True)
class Instance:
    id: str
    label: str


@dataclass(frozen=True)
class ParseReport:
    rows_read: int
    rows_dropped: int


@dataclass(frozen=True)
class TemporalBivariateDataset:
    """Instances x ordered timesteps x optional (x, y) samples, raw units."""

    instances: tuple[Instance, ...]
    timesteps: tuple[str, ...]
    samples: Mapping[SampleKey, Sample]
    axis_names: tuple[str, str] = ("x", "y")

    def instance_ids(self) -> list[str]:
        return [inst.id for inst in self.instances]

    def present_at(self, t: int) -> list[str]:
        """Instance ids with a sample at timestep t, in dataset order."""
        return [inst.id for inst in self.instances if (inst.id, t) in self.samples]

    def sample(self, instance_id: str, t: int) -> Sample | None:
        return self.samples.get((instance_id, t))


@dataclass(frozen=True)
class NormalizedPlot:
    """One timestep's point set mapped into the unit square.

    scale holds the raw-unit extent (x_min, x_max, y_min, y_max) derived
    from every present sample at this timestep; it is never rederived for
    leave-one-out variants.
    """

    timestep_index: int
    points: tuple[tuple[str, float, float], ...]
    scale: tuple[float, float, float, float]


def _check_invariants(dataset: TemporalBivariateDataset) -> TemporalBivariateDataset:
    # Timesteps with < 3 samples are legal here; the pipeline reports them
    # as degenerate rather than refusing the whole dataset.
    ids = dataset.instance_ids()
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise DataError(f"duplicate instance ids: {dupes}")
    if len(set(dataset.timesteps)) != len(dataset.timesteps):
        raise DataError("duplicate timestep labels")
    for (iid, t), (x, y) in dataset.samples.items():
        if not (math.isfinite(x) and math.isfinite(y)):
            raise DataError(f"non-finite sample for ({iid}, {dataset.timesteps[t]})")
    return dataset


def _usable_pair(x_raw: str, y_raw: str) -> Sample | None:
    try:
        x, y = float(x_raw), float(y_raw)
    except (TypeError, ValueError):
        return None
    if not (math.isfinite(x) and math.isfinite(y)):
        return None
    return (x, y)


def parse_long_csv(text: str) -> tuple[TemporalBivariateDataset, ParseReport]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty csv input") from None
    if [h.strip().lower() for h in header] != ["instance", "time", "x", "y"]:
        raise DataError(f"expected header instance,time,x,y got {header!r}")

    instance_order: list[str] = []
    seen_instances: set[str] = set()
    timestep_order: list[str] = []
    timestep_index: dict[str, int] = {}
    samples: dict[SampleKey, Sample] = {}
    rows_read = 0
    rows_dropped = 0
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        rows_read += 1
        if len(row) != 4:
            rows_dropped += 1
            continue
        iid, tlabel = row[0].strip(), row[1].strip()
        pair = _usable_pair(row[2], row[3])
        if not iid or not tlabel or pair is None:
            rows_dropped += 1
            continue
        if tlabel not in timestep_index:
            timestep_index[tlabel] = len(timestep_order)
            timestep_order.append(tlabel)
        if iid not in seen_instances:
            seen_instances.add(iid)
            instance_order.append(iid)
        key = (iid, timestep_index[tlabel])
        if key in samples:
            raise DataError(f"duplicate row for instance={iid!r} time={tlabel!r}")
        samples[key] = pair

    if not samples:
        raise DataError("no usable rows in csv input")
    dataset = TemporalBivariateDataset(
        instances=tuple(Instance(i, i) for i in instance_order),
        timesteps=tuple(timestep_order),
        samples=samples,
    )
    return _check_invariants(dataset), ParseReport(rows_read, rows_dropped)


def parse_wide_json(text: str) -> tuple[TemporalBivariateDataset, ParseReport]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid json: {exc}") from exc
    for key in ("axes", "timesteps", "instances"):
        if key not in doc:
            raise DataError(f"wide_json missing key {key!r}")
    axes = doc["axes"]
    if not (isinstance(axes, list) and len(axes) == 2):
        raise DataError("axes must be a two-element list")
    timesteps = [str(t) for t in doc["timesteps"]]

    instances: list[Instance] = []
    samples: dict[SampleKey, Sample] = {}
    rows_read = 0
    rows_dropped = 0
    seen: set[str] = set()
    for entry in doc["instances"]:
        iid = str(entry.get("id", ""))
        if not iid:
            raise DataError("instance entry without id")
        if iid in seen:
            raise DataError(f"duplicate instance ids: [{iid!r}]")
        seen.add(iid)
        label = str(entry.get("label", iid))
        values = entry.get("values")
        if not isinstance(values, list) or len(values) != len(timesteps):
            raise DataError(
                f"instance {iid!r} values must have one entry per timestep"
            )
        instances.append(Instance(iid, label))
        for t, value in enumerate(values):
            if value is None:
                continue
            rows_read += 1
            if (
                isinstance(value, (list, tuple))
                and len(value) == 2
                and all(isinstance(v, (int, float)) for v in value)
                and all(math.isfinite(float(v)) for v in value)
            ):
                samples[(iid, t)] = (float(value[0]), float(value[1]))
            else:
                rows_dropped += 1

    if not samples:
        raise DataError("no usable samples in json input")
    dataset = TemporalBivariateDataset(
        instances=tuple(instances),
        timesteps=tuple(timesteps),
        samples=samples,
        axis_names=(str(axes[0]), str(axes[1])),
    )
    return _check_invariants(dataset), ParseReport(rows_read, rows_dropped)


def parse_dataset(
    source: bytes | str, format: str
) -> tuple[TemporalBivariateDataset, ParseReport]:
    """Parse a byte stream in one of the supported interchange formats."""
    if isinstance(source, bytes):
        try:
            text = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataError(f"input is not utf-8: {exc}") from exc
    else:
        text = source
    if format == "long_csv":
        return parse_long_csv(text)
    if format == "wide_json":
        return parse_wide_json(text)
    raise DataError(f"unknown format {format!r}, expected one of {FORMATS}")


def sniff_format(source: bytes | str) -> str:
    text = source.decode("utf-8", errors="replace") if isinstance(source, bytes) else source
    stripped = text.lstrip()
    return "wide_json" if stripped.startswith("{") else "long_csv"


def apply_scale(
    scale: tuple[float, float, float, float], x: float, y: float
) -> tuple[float, float]:
    """Affine map into the unit square; a degenerate axis pins to 0.5."""
    x_min, x_max, y_min, y_max = scale
    u = 0.5 if x_max == x_min else (x - x_min) / (x_max - x_min)
    v = 0.5 if y_max == y_min else (y - y_min) / (y_max - y_min)
    return u, v


def normalize_plot(dataset: TemporalBivariateDataset, t: int) -> NormalizedPlot:
    """Min-max normalize timestep t's present samples into [0, 1]^2.

    The scale covers all present samples at t and is immutable thereafter:
    leave-one-out variants reuse it rather than re-deriving a frame from
    the surviving points.
    """
    ids = dataset.present_at(t)
    if not ids:
        raise EmptyPlotError(f"timestep index {t} has no samples")
    xs = [dataset.samples[(i, t)][0] for i in ids]
    ys = [dataset.samples[(i, t)][1] for i in ids]
    scale = (min(xs), max(xs), min(ys), max(ys))
    points = tuple(
        (i, *apply_scale(scale, x, y)) for i, x, y in zip(ids, xs, ys)
    )
    return NormalizedPlot(timestep_index=t, points=points, scale=scale)
