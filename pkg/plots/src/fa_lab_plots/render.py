"""Render manifest-described series from metrics CSV files.

The manifest JSON has the shape the experiment harness writes:

    {"figure": str,
     "series": [{"csv": str, "filter": {col: value, ...},
                 "x": col, "y": col, "label": str,
                 "y_scale": "linear" | "log"}, ...],
     "output": str, "title": str}

CSV paths are resolved relative to the manifest's directory. Rendering is
read-only over its inputs and embeds no timestamps, so reruns produce
byte-identical images.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "fa-lab-plots"

import matplotlib.pyplot as plt  # noqa: E402


class SchemaMismatch(Exception):
    """The manifest references a column or structure the CSV does not have."""


@dataclass(frozen=True)
class RenderResult:
    figure: str
    images: tuple[str, ...]
    labels: tuple[str, ...]


@dataclass(frozen=True)
class CompareReport:
    gap: float
    lines: tuple[str, ...]

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _load_manifest(manifest_path):
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    for key in ("figure", "series", "output"):
        if key not in manifest:
            raise SchemaMismatch(f"manifest is missing {key!r}")
    if not manifest["series"]:
        raise SchemaMismatch("manifest has an empty series list")
    return manifest


def _read_csv(path, cache):
    if path not in cache:
        try:
            with open(path, encoding="utf-8", newline="") as fh:
                rows = list(csv.DictReader(fh))
        except OSError as exc:
            raise SchemaMismatch(f"cannot read CSV {path}: {exc}") from exc
        if not rows:
            raise SchemaMismatch(f"CSV {path} has no data rows")
        cache[path] = rows
    return cache[path]


def _series_points(series, base_dir, cache):
    """(x, y) float pairs for one manifest series, NA rows dropped."""
    for key in ("csv", "x", "y", "label"):
        if key not in series:
            raise SchemaMismatch(f"series is missing {key!r}")
    rows = _read_csv(os.path.join(base_dir, series["csv"]), cache)
    columns = rows[0].keys()
    for col in [series["x"], series["y"], *series.get("filter", {})]:
        if col not in columns:
            raise SchemaMismatch(
                f"column {col!r} not in {series['csv']} (has {sorted(columns)})")
    filt = {k: str(v) for k, v in series.get("filter", {}).items()}
    xs, ys = [], []
    for row in rows:
        if any(row[k] != v for k, v in filt.items()):
            continue
        if row[series["y"]] == "NA" or row[series["x"]] == "NA":
            continue
        xs.append(float(row[series["x"]]))
        ys.append(float(row[series["y"]]))
    if not xs:
        raise SchemaMismatch(
            f"series {series['label']!r} matched no rows in {series['csv']}")
    return xs, ys


def render(manifest_path, out_dir=None) -> RenderResult:
    """Draw every series of one manifest; write PNG + SVG; return their paths."""
    manifest = _load_manifest(manifest_path)
    base_dir = os.path.dirname(os.path.abspath(os.fspath(manifest_path)))
    out_dir = os.fspath(out_dir) if out_dir is not None else base_dir
    os.makedirs(out_dir, exist_ok=True)
    cache: dict = {}

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    labels = []
    log_scale = False
    x_col = y_col = None
    for series in manifest["series"]:
        xs, ys = _series_points(series, base_dir, cache)
        ax.plot(xs, ys, label=series["label"], linewidth=1.2)
        labels.append(series["label"])
        log_scale |= series.get("y_scale") == "log"
        x_col, y_col = series["x"], series["y"]
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel(x_col)
    ax.set_ylabel(y_col)
    ax.set_title(manifest.get("title", manifest["figure"]))
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()

    stem = os.path.join(out_dir, manifest["output"])
    images = (stem + ".png", stem + ".svg")
    fig.savefig(images[0], dpi=150)
    fig.savefig(images[1], metadata={"Date": None})
    plt.close(fig)
    return RenderResult(figure=manifest["figure"], images=images,
                        labels=tuple(labels))


def compare(manifest_a, manifest_b, report_path=None) -> CompareReport:
    """Max pointwise |y_a - y_b| over series labels the two manifests share.

    Series with different x grids are aligned on the intersection of their
    x values (step indices), which the report notes.
    """
    ma = _load_manifest(manifest_a)
    mb = _load_manifest(manifest_b)
    dir_a = os.path.dirname(os.path.abspath(os.fspath(manifest_a)))
    dir_b = os.path.dirname(os.path.abspath(os.fspath(manifest_b)))
    cache_a: dict = {}
    cache_b: dict = {}
    by_label_b = {s["label"]: s for s in mb["series"]}

    lines = [f"compare {ma['figure']} vs {mb['figure']}"]
    worst = 0.0
    shared = 0
    for series in ma["series"]:
        other = by_label_b.get(series["label"])
        if other is None:
            continue
        shared += 1
        xa, ya = _series_points(series, dir_a, cache_a)
        xb, yb = _series_points(other, dir_b, cache_b)
        map_a = dict(zip(xa, ya))
        map_b = dict(zip(xb, yb))
        common = sorted(set(map_a) & set(map_b))
        if not common:
            raise SchemaMismatch(
                f"series {series['label']!r}: no shared x values")
        gap = max(abs(map_a[x] - map_b[x]) for x in common)
        worst = max(worst, gap)
        note = ""
        if len(common) != len(xa) or len(common) != len(xb):
            note = f" (resampled to {len(common)} shared steps)"
        lines.append(f"{series['label']}: max gap {gap:.17g} "
                     f"over {len(common)} points{note}")
    if shared == 0:
        raise SchemaMismatch("the manifests share no series labels")
    lines.append(f"max gap {worst:.17g}")
    report = CompareReport(gap=worst, lines=tuple(lines))
    if report_path is not None:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(report.text)
    return report
