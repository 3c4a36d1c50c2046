import os
import subprocess
import sys

import numpy as np
import pytest

from plotkit import MetricSeries, load_results, render_comparison
from plotkit.cli import main
from plotkit.series import SchemaError

HEADER = "strategy,stage,metric,value,stderr\n"
METRICS_LV = ("std_theta1", "std_theta2", "joint_entropy", "rmse")


def write_synthetic(path, strategies=("max_mi", "random"), metrics=METRICS_LV, stages=5):
    rows = [HEADER]
    for label in strategies:
        for stage in range(stages):
            for j, metric in enumerate(metrics):
                value = 1.0 + 0.1 * stage + 0.01 * j + (0.5 if label == "random" else 0.0)
                rows.append(f"{label},{stage},{metric},{value!r},0.01\n")
    path.write_text("".join(rows))


def seqdesign_run(out, extra=()):
    proc = subprocess.run(
        [sys.executable, "-m", "seqdesign", "run",
         "--config", "lotka_volterra", "--out", str(out), *extra],
        capture_output=True,
        text=True,
        env={**os.environ, "SEQDESIGN_THREADS": "0"},
    )
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="module")
def small_results_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "small.csv"
    return seqdesign_run(out, ("--seed", "5", "--trials", "2", "--ensemble-size", "150"))


@pytest.fixture(scope="module")
def comparison_results_csv(tmp_path_factory):
    """The measurement-time comparison at reporting scale (500 members, 30 trials)."""
    out = tmp_path_factory.mktemp("runs") / "comparison.csv"
    return seqdesign_run(out, ("--seed", "0", "--trials", "30", "--ensemble-size", "500"))


class TestLoadResults:
    def test_header_only_gives_empty_list(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(HEADER)
        assert load_results(path) == []

    def test_series_counting(self, tmp_path):
        path = tmp_path / "synthetic.csv"
        write_synthetic(path, strategies=("a", "b"), metrics=("m1", "m2", "m3", "m4", "m5"),
                        stages=4)
        series = load_results(path)
        assert len(series) == 10
        assert all(len(s.stages) == 4 for s in series)

    def test_round_trip_against_harness_csv(self, small_results_csv):
        series = load_results(small_results_csv)
        raw = {}
        for line in small_results_csv.read_text().splitlines()[1:]:
            label, stage, metric, value, stderr = line.split(",")
            raw[(label, metric, int(stage))] = (float(value), float(stderr))
        assert raw, "harness CSV came back empty"
        for s in series:
            for stage, value, stderr in zip(s.stages, s.values, s.stderrs):
                want = raw[(s.strategy, s.metric, int(stage))]
                assert abs(value - want[0]) < 1e-12
                assert abs(stderr - want[1]) < 1e-12

    def test_bad_header_is_schema_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("strategy,stage,metric,value\n")
        with pytest.raises(SchemaError, match="header"):
            load_results(path)

    def test_bad_cell_names_row_and_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(HEADER + "a,1,m,not-a-number,0\n")
        with pytest.raises(SchemaError, match="row 2"):
            load_results(path)

    def test_non_increasing_stages_rejected(self):
        with pytest.raises(SchemaError, match="strictly increasing"):
            MetricSeries(strategy="a", metric="m", stages=np.array([0, 0, 1]),
                         values=np.zeros(3), stderrs=np.zeros(3))


class TestRenderComparison:
    def test_single_strategy_plot_written(self, tmp_path):
        path = tmp_path / "one.csv"
        write_synthetic(path, strategies=("max_mi",))
        fig_path = tmp_path / "fig.svg"
        render_comparison(load_results(path), "joint_entropy", fig_path)
        assert fig_path.exists() and fig_path.stat().st_size > 0

    def test_five_strategies_five_legend_entries(self, tmp_path):
        path = tmp_path / "five.csv"
        strategies = ("fixed_0", "fixed_1", "fixed_2", "max_mi", "random")
        write_synthetic(path, strategies=strategies)
        fig = render_comparison(load_results(path), "rmse", tmp_path / "fig.svg")
        labels = [t.get_text() for t in fig.axes[0].get_legend().get_texts()]
        assert sorted(labels) == sorted(strategies)
        assert len(labels) == len(set(labels))

    def test_unknown_metric_lists_available(self, tmp_path):
        path = tmp_path / "synthetic.csv"
        write_synthetic(path)
        with pytest.raises(ValueError, match="joint_entropy"):
            render_comparison(load_results(path), "nope", tmp_path / "fig.svg")

    def test_repeated_renders_identical_bytes(self, tmp_path):
        path = tmp_path / "synthetic.csv"
        write_synthetic(path)
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        series = load_results(path)
        render_comparison(series, "joint_entropy", a)
        render_comparison(series, "joint_entropy", b)
        assert a.read_bytes() == b.read_bytes()


class TestAcceptance:
    def test_renders_all_five_metrics_with_full_legends(self, small_results_csv, tmp_path):
        series = load_results(small_results_csv)
        strategies = sorted({s.strategy for s in series})
        metrics = sorted({s.metric for s in series})
        assert len(metrics) == 4  # two-parameter model: 2 stds + entropy + rmse
        for metric in metrics:
            fig_path = tmp_path / f"{metric}.svg"
            fig = render_comparison(series, metric, fig_path)
            labels = [t.get_text() for t in fig.axes[0].get_legend().get_texts()]
            assert sorted(labels) == strategies
            assert fig_path.stat().st_size > 0

    def test_three_parameter_results_render_five_metrics(self, tmp_path):
        path = tmp_path / "synthetic5.csv"
        write_synthetic(path, strategies=("max_mi", "fixed_0", "random"),
                        metrics=("std_theta1", "std_theta2", "std_theta3",
                                 "joint_entropy", "rmse"))
        series = load_results(path)
        for metric in ("std_theta1", "std_theta2", "std_theta3", "joint_entropy", "rmse"):
            fig = render_comparison(series, metric, tmp_path / f"{metric}.svg")
            assert len(fig.axes[0].get_legend().get_texts()) == 3

    def test_max_mi_terminates_lowest_on_joint_entropy(self, comparison_results_csv, tmp_path):
        series = load_results(comparison_results_csv)
        fig = render_comparison(series, "joint_entropy", tmp_path / "entropy.svg")
        terminal = {}
        for line in fig.axes[0].get_lines():
            label = line.get_label()
            if not label.startswith("_"):
                terminal[label] = line.get_ydata()[-1]
        assert len(terminal) == 5
        assert min(terminal, key=terminal.get) == "max_mi"

    def test_cli_end_to_end(self, small_results_csv, tmp_path):
        fig_path = tmp_path / "cli.svg"
        assert main([str(small_results_csv), "--metric", "joint_entropy",
                     "--out", str(fig_path)]) == 0
        assert fig_path.stat().st_size > 0
        assert main([str(small_results_csv), "--metric", "bogus",
                     "--out", str(tmp_path / "x.svg")]) == 1
