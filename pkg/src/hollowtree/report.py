"""Report emission: canonical JSON, per-feature CSV tables and SVG charts.

JSON is the contract surface: sorted keys and floats rounded to six
significant digits, so identical inputs give byte-identical files. SVG is
presentation only.
"""

from __future__ import annotations

import csv
import io
import json
import math
from html import escape
from pathlib import Path

import numpy as np

from .hots import HotsReport
from .importance import ImportanceTable, PdpCurve, PdpSurface

__all__ = [
    "FORMAT_VERSION",
    "round_floats",
    "canonical_json",
    "bar_chart_svg",
    "line_chart_svg",
    "heatmap_svg",
    "render_report",
    "read_hots_report",
]

FORMAT_VERSION = "hollowtree-report/1"
SIG_DIGITS = 6


def _fmt(x: float) -> str:
    return f"{x:.{SIG_DIGITS}g}"


def round_floats(obj):
    """Recursively convert numpy scalars/arrays and round floats to 6 significant digits."""
    if isinstance(obj, dict):
        return {str(k): round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError(f"cannot serialize non-finite float {x}")
        r = float(_fmt(x))
        return 0.0 if r == 0 else r
    return obj


def canonical_json(obj) -> str:
    return json.dumps(round_floats(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def envelope(kind: str, payload: dict, config: dict | None = None) -> dict:
    return {"format_version": FORMAT_VERSION, "kind": kind, "config": config or {}, "report": payload}


# --- SVG -------------------------------------------------------------------

_W, _BAR_H, _PAD, _LABEL_W = 640, 22, 10, 190


def _svg(width: int, height: int, body: list[str], title: str) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">'
    )
    return "\n".join(
        [head, f'<title>{escape(title)}</title>',
         f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
         *body, "</svg>"]
    ) + "\n"


def bar_chart_svg(labels, values, title: str, sort_by_abs: bool = True, value_label: str = "") -> str:
    """Horizontal bars around a zero axis; negative bars extend left of it."""
    values = [float(v) for v in values]
    idx = list(range(len(values)))
    if sort_by_abs:
        idx.sort(key=lambda j: (-abs(values[j]), j))
    lo = min([0.0] + values)
    hi = max([0.0] + values)
    span = (hi - lo) or 1.0
    plot_w = _W - _LABEL_W - 3 * _PAD - 60
    x0 = _LABEL_W + _PAD + (0.0 - lo) / span * plot_w
    top = 32
    body = []
    for row, j in enumerate(idx):
        v = values[j]
        y = top + row * _BAR_H
        x_end = _LABEL_W + _PAD + (v - lo) / span * plot_w
        x, w = (min(x0, x_end), abs(x_end - x0))
        color = "#3b75af" if v >= 0 else "#c0504d"
        name = escape(str(labels[j]))
        body.append(
            f'<text x="{_LABEL_W:.1f}" y="{y + _BAR_H * 0.7:.1f}" text-anchor="end">{name}</text>'
        )
        body.append(
            f'<rect class="bar" data-feature="{name}" data-value="{_fmt(v)}" x="{x:.2f}" '
            f'y="{y + 3:.1f}" width="{w:.2f}" height="{_BAR_H - 6}" fill="{color}"/>'
        )
        label_x = (x + w + 4) if v >= 0 else (x - 4)
        anchor = "start" if v >= 0 else "end"
        body.append(f'<text x="{label_x:.1f}" y="{y + _BAR_H * 0.7:.1f}" text-anchor="{anchor}">{_fmt(v)}</text>')
    bottom = top + len(idx) * _BAR_H
    body.append(f'<line class="zero-axis" x1="{x0:.2f}" y1="{top}" x2="{x0:.2f}" y2="{bottom}" stroke="#333"/>')
    if value_label:
        body.append(f'<text x="{x0:.1f}" y="{bottom + 16}" text-anchor="middle">{escape(value_label)}</text>')
    return _svg(_W, bottom + 28, body, title)


def _scale(v, lo, hi, a, b):
    return a + (v - lo) / ((hi - lo) or 1.0) * (b - a)


def line_chart_svg(x, y, title: str, x_label: str = "", y_label: str = "") -> str:
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    w, h = _W, 360
    left, right, top, bottom = 60, w - 20, 32, h - 40
    y_lo, y_hi = min(y + [0.0]), max(y + [1.0])
    pts = " ".join(
        f"{_scale(a, min(x), max(x), left, right):.2f},{_scale(b, y_lo, y_hi, bottom, top):.2f}" for a, b in zip(x, y)
    )
    body = [
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="#333"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="#333"/>',
        f'<polyline class="curve" fill="none" stroke="#3b75af" stroke-width="2" points="{pts}"/>',
        f'<text x="{left}" y="{bottom + 16}">{_fmt(min(x))}</text>',
        f'<text x="{right}" y="{bottom + 16}" text-anchor="end">{_fmt(max(x))}</text>',
        f'<text x="{left - 4}" y="{bottom}" text-anchor="end">{_fmt(y_lo)}</text>',
        f'<text x="{left - 4}" y="{top + 10}" text-anchor="end">{_fmt(y_hi)}</text>',
        f'<text x="{(left + right) / 2:.1f}" y="{h - 8}" text-anchor="middle">{escape(x_label)}</text>',
        f'<text x="14" y="{(top + bottom) / 2:.1f}" transform="rotate(-90 14 {(top + bottom) / 2:.1f})" '
        f'text-anchor="middle">{escape(y_label)}</text>',
    ]
    return _svg(w, h, body, title)


def heatmap_svg(grid_1, grid_2, z, title: str, x_label: str = "", y_label: str = "") -> str:
    z = np.asarray(z, dtype=float)
    w, h = _W, 420
    left, right, top, bottom = 60, w - 20, 32, h - 40
    cw = (right - left) / z.shape[0]
    ch = (bottom - top) / z.shape[1]
    lo, hi = float(z.min()), float(z.max())
    body = []
    for a in range(z.shape[0]):
        for b in range(z.shape[1]):
            t = (z[a, b] - lo) / ((hi - lo) or 1.0)
            # purple (low) to green (high)
            rgb = tuple(int(lo_c + (hi_c - lo_c) * t) for lo_c, hi_c in ((120, 60), (60, 180), (160, 90)))
            body.append(
                f'<rect class="cell" x="{left + a * cw:.2f}" y="{bottom - (b + 1) * ch:.2f}" '
                f'width="{cw:.2f}" height="{ch:.2f}" fill="rgb{rgb}"/>'
            )
    body += [
        f'<text x="{left}" y="{bottom + 16}">{_fmt(float(grid_1[0]))}</text>',
        f'<text x="{right}" y="{bottom + 16}" text-anchor="end">{_fmt(float(grid_1[-1]))}</text>',
        f'<text x="{left - 4}" y="{bottom}" text-anchor="end">{_fmt(float(grid_2[0]))}</text>',
        f'<text x="{left - 4}" y="{top + 10}" text-anchor="end">{_fmt(float(grid_2[-1]))}</text>',
        f'<text x="{(left + right) / 2:.1f}" y="{h - 8}" text-anchor="middle">{escape(x_label)}</text>',
        f'<text x="14" y="{(top + bottom) / 2:.1f}" transform="rotate(-90 14 {(top + bottom) / 2:.1f})" '
        f'text-anchor="middle">{escape(y_label)}</text>',
    ]
    return _svg(w, h, body, title)


# --- CSV -------------------------------------------------------------------

def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name).strip("_").lower() or "feature"


# --- dispatch ----------------------------------------------------------------

def _hots_files(report: HotsReport, config) -> dict[str, str]:
    names = report.feature_names
    files = {"hots_report.json": canonical_json(envelope("hots", report.to_dict(), config))}
    for label in ("positive", "negative"):
        w = report.weights(label)
        files[f"{label}_class.csv"] = _csv(
            ["feature", "weight", "fold_count"],
            [(names[j], float(w[j]), int(report.fold_counts[j])) for j in range(len(names))],
        )
        top = report.top_features(label, 30)
        files[f"{label}_class.svg"] = bar_chart_svg(
            [names[j] for j in top], [w[j] for j in top],
            f"{label.capitalize()} class: mean signed weight per prediction", value_label="log odds",
        )
    files["fold_counts.csv"] = _csv(
        ["feature", "fold_count"], [(names[j], int(c)) for j, c in enumerate(report.fold_counts)]
    )
    used = [j for j in sorted(range(len(names)), key=lambda j: (-report.fold_counts[j], j)) if report.fold_counts[j] > 0]
    files["fold_counts.svg"] = bar_chart_svg(
        [names[j] for j in used[:30]], [int(report.fold_counts[j]) for j in used[:30]],
        "Folds in which each feature carried weight", sort_by_abs=False,
    )
    files["fold_weights.csv"] = _csv(
        ["fold", "feature", "positive_weight", "negative_weight"],
        [(f.fold_index, names[j], float(f.positive.mean_weight[j]), float(f.negative.mean_weight[j]))
         for f in report.folds for j in f.features_used],
    )
    return files


def _importance_files(table: ImportanceTable, config) -> dict[str, str]:
    stem = f"{table.method}_importance"
    rows = [(n, float(s)) for n, s in zip(table.feature_names, table.scores)]
    top = table.ranking()[:30]
    return {
        f"{stem}.json": canonical_json(envelope("importance", table.to_dict(), config)),
        f"{stem}.csv": _csv(["feature", "score"], rows),
        f"{stem}.svg": bar_chart_svg(
            [table.feature_names[j] for j in top], [table.scores[j] for j in top], f"{table.method} importance"
        ),
    }


def _pdp_files(curve: PdpCurve, config) -> dict[str, str]:
    stem = f"pdp_{_slug(curve.feature_name)}"
    return {
        f"{stem}.json": canonical_json(envelope("pdp_1d", curve.to_dict(), config)),
        f"{stem}.csv": _csv(
            ["value", "mean_prediction"], [(float(a), float(b)) for a, b in zip(curve.grid, curve.mean_prediction)]
        ),
        f"{stem}.svg": line_chart_svg(
            curve.grid, curve.mean_prediction, f"Partial dependence: {curve.feature_name}",
            curve.feature_name, "partial dependence",
        ),
    }


def _surface_files(s: PdpSurface, config) -> dict[str, str]:
    stem = f"pdp_{_slug(s.feature_names[0])}__{_slug(s.feature_names[1])}"
    rows = [(float(a), float(b), float(s.mean_prediction[i, j]))
            for i, a in enumerate(s.grid_1) for j, b in enumerate(s.grid_2)]
    return {
        f"{stem}.json": canonical_json(envelope("pdp_2d", s.to_dict(), config)),
        f"{stem}.csv": _csv([s.feature_names[0], s.feature_names[1], "mean_prediction"], rows),
        f"{stem}.svg": heatmap_svg(
            s.grid_1, s.grid_2, s.mean_prediction,
            f"Partial dependence: {s.feature_names[0]} x {s.feature_names[1]}", *s.feature_names,
        ),
    }


def render_report(report, out_dir, formats=("json", "csv", "svg"), config: dict | None = None) -> list[Path]:
    """Write ``report`` into ``out_dir``; returns the paths written, sorted."""
    if isinstance(report, HotsReport):
        files = _hots_files(report, config)
    elif isinstance(report, ImportanceTable):
        files = _importance_files(report, config)
    elif isinstance(report, PdpCurve):
        files = _pdp_files(report, config)
    elif isinstance(report, PdpSurface):
        files = _surface_files(report, config)
    else:
        raise TypeError(f"cannot render {type(report).__name__}")
    unknown = set(formats) - {"json", "csv", "svg"}
    if unknown:
        raise ValueError(f"unknown formats {sorted(unknown)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in sorted(files.items()):
        if name.rsplit(".", 1)[-1] in formats:
            path = out / name
            path.write_text(text, encoding="utf-8")
            written.append(path)
    return written


def read_hots_report(path) -> tuple[HotsReport, dict]:
    """Load ``hots_report.json``; returns the report and the embedded run config."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != FORMAT_VERSION or doc.get("kind") != "hots":
        raise ValueError(f"{path}: not a {FORMAT_VERSION} HOTS report")
    return HotsReport.from_dict(doc["report"]), doc["config"]
