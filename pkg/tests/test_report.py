import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from hollowtree import Hyperparams, fit_tree, gini_importance, pdp_1d, pdp_2d, run_hots_cv
from hollowtree.hots import HotsReport
from hollowtree.report import (
    FORMAT_VERSION,
    bar_chart_svg,
    canonical_json,
    read_hots_report,
    render_report,
    round_floats,
)

FAST = Hyperparams(n_rounds=20, max_depth=3)
SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def report(iris):
    return run_hots_cv(iris, FAST, seed=0)


def bars(path):
    root = ET.parse(path).getroot()
    return [r for r in root.iter(f"{SVG}rect") if r.get("class") == "bar"]


def test_round_floats():
    assert round_floats(1 / 3) == 0.333333
    assert round_floats({"a": np.float64(123456789.0), "b": [np.int64(3), True]}) == {"a": 123457000.0, "b": [3, True]}
    assert round_floats(-0.0) == 0.0
    with pytest.raises(ValueError):
        round_floats(float("nan"))


def test_canonical_json_sorted_and_stable():
    text = canonical_json({"b": 1.0, "a": [0.1 + 0.2]})
    assert text == '{\n  "a": [\n    0.3\n  ],\n  "b": 1.0\n}\n'


def test_hots_files_and_envelope(tmp_path, report):
    written = render_report(report, tmp_path, config={"seed": 0})
    names = sorted(p.name for p in written)
    assert names == sorted([
        "hots_report.json", "positive_class.csv", "positive_class.svg", "negative_class.csv",
        "negative_class.svg", "fold_counts.csv", "fold_counts.svg", "fold_weights.csv",
    ])
    doc = json.loads((tmp_path / "hots_report.json").read_text())
    assert doc["format_version"] == FORMAT_VERSION and doc["kind"] == "hots"
    assert doc["config"] == {"seed": 0}
    with open(tmp_path / "positive_class.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["feature"] for r in rows] == list(report.feature_names)
    assert [int(r["fold_count"]) for r in rows] == report.fold_counts.tolist()


def test_json_round_trip(tmp_path, report):
    render_report(report, tmp_path, formats=("json",))
    back, config = read_hots_report(tmp_path / "hots_report.json")
    assert back == HotsReport.from_dict(round_floats(report.to_dict()))
    assert np.allclose(back.positive_weights, report.positive_weights, rtol=5e-6, atol=0)
    assert np.array_equal(back.fold_counts, report.fold_counts)
    again = tmp_path / "again"
    render_report(back, again, formats=("json",))
    assert (again / "hots_report.json").read_bytes() == (tmp_path / "hots_report.json").read_bytes()


def test_outputs_byte_identical(tmp_path, iris):
    for d in ("a", "b"):
        render_report(run_hots_cv(iris, FAST, seed=3), tmp_path / d, config={"seed": 3})
    for name in ("hots_report.json", "positive_class.csv", "negative_class.csv", "fold_counts.csv", "fold_weights.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_iris_svg_has_four_bars_petal_length_longest(tmp_path, iris):
    r = run_hots_cv(iris, seed=0)
    render_report(r, tmp_path, formats=("svg",))
    rects = bars(tmp_path / "positive_class.svg")
    assert len(rects) == 4
    longest = max(rects, key=lambda e: float(e.get("width")))
    assert longest.get("data-feature") == "petal length"


def test_bar_chart_negative_bars_left_of_axis():
    svg = ET.fromstring(bar_chart_svg(["a", "b", "c"], [0.5, -2.0, 1.0], "t"))
    rects = [r for r in svg.iter(f"{SVG}rect") if r.get("class") == "bar"]
    assert [r.get("data-feature") for r in rects] == ["b", "c", "a"]
    axis = [l for l in svg.iter(f"{SVG}line") if l.get("class") == "zero-axis"][0]
    x0 = float(axis.get("x1"))
    neg = rects[0]
    assert float(neg.get("x")) + float(neg.get("width")) == pytest.approx(x0)
    assert float(rects[1].get("x")) == pytest.approx(x0)


def test_empty_report_renders(tmp_path, iris):
    r = run_hots_cv(iris, FAST, k=3, threshold=1.01, seed=0)
    render_report(r, tmp_path)
    doc = json.loads((tmp_path / "hots_report.json").read_text())
    assert doc["report"]["fold_counts"] == [0, 0, 0, 0]
    assert bars(tmp_path / "fold_counts.svg") == []
    assert (tmp_path / "fold_weights.csv").read_text() == "fold,feature,positive_weight,negative_weight\n"


def test_baseline_renderers(tmp_path, iris):
    t = fit_tree(iris)
    render_report(gini_importance(t), tmp_path)
    render_report(pdp_1d(t, iris, "petal length", 10), tmp_path)
    render_report(pdp_2d(t, iris, "petal length", "petal width", 5), tmp_path)
    for name in ("gini_importance.json", "pdp_petal_length.csv", "pdp_petal_length__petal_width.svg"):
        assert (tmp_path / name).is_file()
    ET.parse(tmp_path / "pdp_petal_length.svg")
    with pytest.raises(ValueError):
        render_report(gini_importance(t), tmp_path, formats=("png",))
    with pytest.raises(TypeError):
        render_report({"not": "a report"}, tmp_path)
