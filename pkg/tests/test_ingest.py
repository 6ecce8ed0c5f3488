import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from looscope import DataError, EmptyPlotError, normalize_plot, parse_dataset
from looscope.ingest import apply_scale, parse_long_csv, parse_wide_json, sniff_format
from looscope.synth import dataset_from_frames

CSV3 = "instance,time,x,y\na,2000,1,2\nb,2000,3,4\na,2001,5,6\n"


def test_parse_long_csv_basic():
    ds, report = parse_long_csv(CSV3)
    assert [i.id for i in ds.instances] == ["a", "b"]
    assert ds.timesteps == ("2000", "2001")
    assert len(ds.samples) == 3
    assert ds.sample("a", 0) == (1.0, 2.0)
    assert ds.sample("b", 0) == (3.0, 4.0)
    assert ds.sample("a", 1) == (5.0, 6.0)
    assert report.rows_dropped == 0


def test_nan_row_dropped_and_counted():
    ds, report = parse_long_csv(
        "instance,time,x,y\na,2000,NaN,2\nb,2000,3,4\nc,2000,7,8\nd,2000,1,1\n"
    )
    assert report.rows_dropped == 1
    assert ds.sample("a", 0) is None


@pytest.mark.parametrize("bad", ["", "oops", "inf", "-inf", "nan"])
def test_non_numeric_or_non_finite_dropped(bad):
    text = f"instance,time,x,y\na,2000,{bad},2\nb,2000,3,4\n"
    _, report = parse_long_csv(text)
    assert report.rows_dropped == 1


def test_duplicate_pair_is_error():
    with pytest.raises(DataError, match="'a'.*'2000'"):
        parse_long_csv("instance,time,x,y\na,2000,1,2\na,2000,9,9\n")


def test_bad_header_is_error():
    with pytest.raises(DataError, match="header"):
        parse_long_csv("id,when,x,y\na,2000,1,2\n")


def test_zero_usable_rows_is_error():
    with pytest.raises(DataError, match="no usable rows"):
        parse_long_csv("instance,time,x,y\na,2000,NaN,2\n")


def test_parse_dataset_rejects_unknown_format():
    with pytest.raises(DataError, match="unknown format"):
        parse_dataset(CSV3, "tsv")


def test_parse_dataset_rejects_non_utf8():
    with pytest.raises(DataError, match="utf-8"):
        parse_dataset(b"\xff\xfe\x00bad", "long_csv")


WIDE = """
{
  "axes": ["debt", "population"],
  "timesteps": ["1990", "1991"],
  "instances": [
    {"id": "a", "label": "Alpha", "values": [[1, 2], null]},
    {"id": "b", "values": [[3, 4], [5, 6]]}
  ]
}
"""


def test_parse_wide_json():
    ds, report = parse_wide_json(WIDE)
    assert ds.axis_names == ("debt", "population")
    assert ds.instances[0].label == "Alpha"
    assert ds.instances[1].label == "b"
    assert ds.sample("a", 1) is None
    assert ds.sample("b", 1) == (5.0, 6.0)
    assert report.rows_dropped == 0


def test_wide_json_value_length_mismatch():
    bad = '{"axes": ["x","y"], "timesteps": ["t0"], "instances": [{"id": "a", "values": [[1,2],[3,4]]}]}'
    with pytest.raises(DataError, match="one entry per timestep"):
        parse_wide_json(bad)


def test_wide_json_duplicate_id():
    bad = (
        '{"axes": ["x","y"], "timesteps": ["t0"], "instances": ['
        '{"id": "a", "values": [[1,2]]}, {"id": "a", "values": [[3,4]]}]}'
    )
    with pytest.raises(DataError, match="duplicate instance"):
        parse_wide_json(bad)


def test_sniff_format():
    assert sniff_format(CSV3) == "long_csv"
    assert sniff_format(WIDE) == "wide_json"


def test_normalize_endpoints():
    ds = dataset_from_frames([[(0.0, 0.0), (10.0, 10.0)]])
    plot = normalize_plot(ds, 0)
    coords = {iid: (u, v) for iid, u, v in plot.points}
    assert coords["p0000"] == (0.0, 0.0)
    assert coords["p0001"] == (1.0, 1.0)
    assert plot.scale == (0.0, 10.0, 0.0, 10.0)


def test_normalize_degenerate_axis_pins_half():
    ds = dataset_from_frames([[(7.0, 1.0), (7.0, 2.0), (7.0, 3.0)]])
    plot = normalize_plot(ds, 0)
    assert all(u == 0.5 for _, u, _ in plot.points)


def test_normalize_hand_affine():
    ds = dataset_from_frames([[(2.0, 2.0), (4.0, 4.0), (6.0, 6.0)]])
    plot = normalize_plot(ds, 0)
    assert sorted(u for _, u, _ in plot.points) == [0.0, 0.5, 1.0]


def test_normalize_empty_plot_error():
    ds = dataset_from_frames([[(1.0, 2.0)], [None]])
    with pytest.raises(EmptyPlotError):
        normalize_plot(ds, 1)


def test_points_are_exactly_present_instances():
    ds = dataset_from_frames([[(0.0, 0.0), None, (2.0, 1.0), (1.0, 0.5)]])
    plot = normalize_plot(ds, 0)
    assert [iid for iid, _, _ in plot.points] == ["p0000", "p0002", "p0003"]


coord = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@given(st.lists(st.tuples(coord, coord), min_size=1, max_size=30))
@settings(max_examples=60)
def test_normalize_idempotent_under_own_scale(points):
    ds = dataset_from_frames([points])
    plot = normalize_plot(ds, 0)
    unit = (0.0, 1.0, 0.0, 1.0)
    for _, u, v in plot.points:
        u2, v2 = apply_scale(unit, u, v)
        assert math.isclose(u2, u, abs_tol=1e-12)
        assert math.isclose(v2, v, abs_tol=1e-12)


@given(
    st.lists(st.tuples(coord, coord), min_size=2, max_size=20, unique=True),
    st.randoms(),
)
@settings(max_examples=40)
def test_row_permutation_preserves_point_set(points, shuffler):
    header = "instance,time,x,y"
    rows = [f"i{k},t0,{x},{y}" for k, (x, y) in enumerate(points)]
    ds1, _ = parse_long_csv("\n".join([header, *rows]) + "\n")
    shuffler.shuffle(rows)
    ds2, _ = parse_long_csv("\n".join([header, *rows]) + "\n")
    p1 = set(normalize_plot(ds1, 0).points)
    p2 = set(normalize_plot(ds2, 0).points)
    assert p1 == p2
