"""Render groupcp experiment CSVs as coverage/bound figures.

Input is the experiment CSV contract
(``experiment,regime,param,method,value,ci_half_width,trials,seed``); output
is one image per figure: one panel per regime, curves over the grid parameter
with 95% CI bands (grouped bars with error bars for the bar figure), and a
dashed horizontal line at the target coverage level.  The renderer never
recomputes statistics — plotted coordinates are exactly the CSV values, and
the data-export hook writes them out for verification.

Infinite values (the ``inf`` token) cannot sit on a coverage axis; they are
clipped to the top of the panel and drawn with a distinct marker.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["CsvFormatError", "ExperimentData", "FigureSpec", "read_experiment_csv", "render"]

CSV_HEADER = "experiment,regime,param,method,value,ci_half_width,trials,seed"

# target coverage level 1 - alpha for the horizontal reference line
TARGET_LEVELS = {"fig1": 0.9, "fig2": 0.8, "fig3": 0.9, "fig4": 0.8, "fig5": 0.8}

# the bar-style figure: one panel per setting, one bar per method
BAR_FIGURES = {"fig5"}

METHOD_ORDER = {
    "lei_bound": 0,
    "corollary_bound": 1,
    "gwcp": 0,
    "corrected_gwcp": 0,
    "pretraining": 0,
    "calibration": 1,
    "oracle": 2,
}


class CsvFormatError(Exception):
    """Malformed experiment CSV; message carries per-row diagnostics."""


@dataclass
class SeriesRow:
    regime: str
    param: float
    method: str
    value: float
    ci_half_width: float


@dataclass
class ExperimentData:
    experiment: str
    rows: list

    def regimes(self) -> list:
        seen = []
        for r in self.rows:
            if r.regime not in seen:
                seen.append(r.regime)
        return seen

    def methods(self, regime: str) -> list:
        seen = []
        for r in self.rows:
            if r.regime == regime and r.method not in seen:
                seen.append(r.method)
        return sorted(seen, key=lambda m: (METHOD_ORDER.get(m, 99), m))

    def series(self, regime: str, method: str) -> list:
        rows = [r for r in self.rows if r.regime == regime and r.method == method]
        return sorted(rows, key=lambda r: r.param)


@dataclass
class FigureSpec:
    """What to render: figure id, input CSV, target level, output image."""

    figure: str
    input_csv: str
    output_path: str
    target_level: Optional[float] = None
    export_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.figure not in TARGET_LEVELS:
            raise ValueError(f"unknown figure id: {self.figure!r}")
        if self.target_level is None:
            self.target_level = TARGET_LEVELS[self.figure]


def _parse_float(token: str) -> float:
    value = float(token)  # accepts the 'inf' token
    if math.isnan(value):
        raise ValueError("NaN is not a valid value")
    return value


def read_experiment_csv(path: str) -> ExperimentData:
    """Parse an experiment CSV, reporting every malformed row by line number."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CsvFormatError(f"{path}: empty file")
    errors = []
    if lines[0] != CSV_HEADER:
        errors.append(f"line 1: expected header {CSV_HEADER!r}, got {lines[0]!r}")
    rows = []
    experiment = None
    for lineno, raw in enumerate(lines[1:], start=2):
        parts = raw.split(",")
        if len(parts) != 8:
            errors.append(f"line {lineno}: expected 8 fields, got {len(parts)}")
            continue
        exp, regime, param, method, value, ci, trials, seed = parts
        try:
            row = SeriesRow(regime, _parse_float(param), method,
                            _parse_float(value), _parse_float(ci))
            int(trials)
            int(seed)
        except ValueError as exc:
            errors.append(f"line {lineno}: {exc}")
            continue
        if experiment is None:
            experiment = exp
        elif exp != experiment:
            errors.append(f"line {lineno}: mixed experiment ids {experiment!r} and {exp!r}")
            continue
        rows.append(row)
    if errors:
        raise CsvFormatError(f"{path}:\n" + "\n".join(errors))
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    return ExperimentData(experiment, rows)


def _clip(values, top):
    """Replace +inf by the panel top for drawing; report which were clipped."""
    clipped = [math.isinf(v) for v in values]
    drawn = [top if c else v for v, c in zip(values, clipped)]
    return drawn, clipped


def _render_curves(ax, data: ExperimentData, regime: str, target: float):
    finite = [
        r.value + r.ci_half_width
        for r in data.rows
        if r.regime == regime and not math.isinf(r.value)
    ]
    top = max(finite + [target]) + 0.02
    for method in data.methods(regime):
        series = data.series(regime, method)
        xs = [r.param for r in series]
        ys, clipped = _clip([r.value for r in series], top)
        cis = [r.ci_half_width for r in series]
        (line,) = ax.plot(xs, ys, marker="o", markersize=3, label=method)
        lo = [y - c for y, c in zip(ys, cis)]
        hi = [y + c for y, c in zip(ys, cis)]
        ax.fill_between(xs, lo, hi, alpha=0.2, color=line.get_color())
        inf_x = [x for x, c in zip(xs, clipped) if c]
        if inf_x:
            ax.plot(inf_x, [top] * len(inf_x), linestyle="none", marker="^",
                    markersize=8, color=line.get_color())
    ax.axhline(target, linestyle="--", color="black", linewidth=1)
    ax.set_title(regime)
    ax.legend(fontsize=8)


def _render_bars(ax, data: ExperimentData, regime: str, target: float):
    methods = data.methods(regime)
    finite = [
        r.value + r.ci_half_width
        for r in data.rows
        if r.regime == regime and not math.isinf(r.value)
    ]
    top = max(finite + [target]) + 0.02
    values, cis, clipped = [], [], []
    for method in methods:
        series = data.series(regime, method)
        ys, clip_flags = _clip([r.value for r in series], top)
        values.extend(ys)
        cis.extend(r.ci_half_width for r in series)
        clipped.extend(clip_flags)
    xs = range(len(values))
    bars = ax.bar(xs, values, yerr=cis, capsize=4, tick_label=methods)
    for x, (bar, was_inf) in enumerate(zip(bars, clipped)):
        if was_inf:
            ax.plot([x], [top], linestyle="none", marker="^", markersize=8,
                    color=bar.get_facecolor())
    ax.axhline(target, linestyle="--", color="black", linewidth=1)
    ax.set_ylim(bottom=min(0.5, min(values) - 0.05))
    ax.set_title(regime)
    ax.tick_params(axis="x", labelrotation=20, labelsize=8)


def _export_payload(data: ExperimentData, spec: FigureSpec) -> dict:
    panels = []
    for regime in data.regimes():
        series_list = []
        for method in data.methods(regime):
            series = data.series(regime, method)
            series_list.append(
                {
                    "method": method,
                    "params": [r.param for r in series],
                    "values": [("inf" if math.isinf(r.value) else r.value) for r in series],
                    "ci_half_widths": [r.ci_half_width for r in series],
                }
            )
        panels.append({"regime": regime, "series": series_list})
    return {
        "figure": spec.figure,
        "target_level": spec.target_level,
        "panels": panels,
    }


def render(spec: FigureSpec) -> str:
    """Render one figure from its CSV; returns the output path.

    When ``spec.export_path`` is set, the exact plotted coordinates (per
    panel, per series) are also written there as JSON.
    """
    data = read_experiment_csv(spec.input_csv)
    regimes = data.regimes()
    fig, axes = plt.subplots(
        1, len(regimes), figsize=(4.2 * len(regimes), 3.6), squeeze=False, sharey=True
    )
    for ax, regime in zip(axes[0], regimes):
        if spec.figure in BAR_FIGURES:
            _render_bars(ax, data, regime, spec.target_level)
        else:
            _render_curves(ax, data, regime, spec.target_level)
    axes[0][0].set_ylabel("coverage / bound")
    fig.suptitle(spec.figure)
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=120)
    plt.close(fig)
    if spec.export_path:
        with open(spec.export_path, "w") as fh:
            json.dump(_export_payload(data, spec), fh, indent=2)
    return spec.output_path
