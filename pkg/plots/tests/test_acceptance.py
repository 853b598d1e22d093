"""Secondary acceptance: render all five experiment CSVs produced by the
groupcp CLI, and verify the plotted coordinates equal the CSV values exactly
via the data-export hook.

The CSVs are generated through the primary package's command-line interface
only (reduced trial counts; the rendering contract does not depend on them).
"""

import json
import math
import subprocess

import pytest

from groupcp_plots.cli import main

FIGURES = {"fig1": 0.9, "fig2": 0.8, "fig3": 0.9, "fig4": 0.8, "fig5": 0.8}
TRIALS = {"fig1": 5, "fig2": 5, "fig3": 5, "fig4": 5, "fig5": 20}


@pytest.fixture(scope="module")
def csv_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("csvs")
    for figure, trials in TRIALS.items():
        subprocess.run(
            [
                "groupcp", "experiment", figure,
                "--seed", "0",
                "--trials", str(trials),
                "--out", str(root / f"{figure}.csv"),
            ],
            check=True,
        )
    return root


def csv_rows(path):
    lines = path.read_text().splitlines()[1:]
    rows = []
    for line in lines:
        _, regime, param, method, value, ci, _, _ = line.split(",")
        rows.append((regime, float(param), method, float(value), float(ci)))
    return rows


def test_renders_all_five_figures_with_exact_coordinates(csv_dir, tmp_path):
    for figure, target in FIGURES.items():
        csv_path = csv_dir / f"{figure}.csv"
        out = tmp_path / f"{figure}.png"
        export = tmp_path / f"{figure}.json"
        rc = main([
            "--figure", figure,
            "--in", str(csv_path),
            "--out", str(out),
            "--export-data", str(export),
        ])
        assert rc == 0
        assert out.exists() and out.stat().st_size > 0

        payload = json.loads(export.read_text())
        assert payload["target_level"] == target

        plotted = {}
        for panel in payload["panels"]:
            for series in panel["series"]:
                for param, value, ci in zip(
                    series["params"], series["values"], series["ci_half_widths"]
                ):
                    v = math.inf if value == "inf" else value
                    plotted[(panel["regime"], param, series["method"])] = (v, ci)

        expected = {
            (regime, param, method): (value, ci)
            for regime, param, method, value, ci in csv_rows(csv_path)
        }
        assert plotted == expected, f"{figure}: plotted coordinates differ from CSV"
