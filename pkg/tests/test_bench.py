"""Benchmark harness: plan validation, the large gate, runs, and tables."""

import math

import numpy as np
import pytest

from somkit.bench import (
    BenchPlan,
    BenchRow,
    parse_table_csv,
    render_table,
    requires_large,
    run_plan,
)
from somkit.errors import ParameterError, ParseError

TINY = dict(
    sample_sizes=(120,),
    feature_counts=(3,),
    rows=4,
    cols=4,
    epochs=5,
    runs=2,
)

CSV_HEADER = (
    "samples,features,runs,qe_mean,qe_std,te_mean,te_std,"
    "time_init_s,time_train_s,time_metrics_s,error"
)


def stat_fields(row):
    return (
        row.samples, row.features, row.runs,
        row.qe_mean, row.qe_std, row.te_mean, row.te_std, row.error,
    )


class TestBenchPlan:
    def test_defaults_cover_the_desk_scale_grid(self):
        plan = BenchPlan()
        assert plan.sample_sizes == (240, 4000)
        assert plan.feature_counts == (4, 50)
        assert (plan.rows, plan.cols) == (25, 15)
        assert plan.runs == 10

    def test_validation(self):
        with pytest.raises(ParameterError):
            BenchPlan(sample_sizes=())
        with pytest.raises(ParameterError):
            BenchPlan(feature_counts=())
        with pytest.raises(ParameterError):
            BenchPlan(sample_sizes=(1,))
        with pytest.raises(ParameterError):
            BenchPlan(feature_counts=(0,))
        with pytest.raises(ParameterError):
            BenchPlan(runs=0)
        with pytest.raises(ParameterError):
            BenchPlan(epochs=0)


class TestRequiresLarge:
    def test_desk_scale_defaults_do_not(self):
        assert not requires_large(BenchPlan())

    def test_grid_at_or_above_ninety_by_seventy_cells_does(self):
        assert requires_large(BenchPlan(rows=90, cols=70))
        assert requires_large(BenchPlan(rows=70, cols=90))
        assert requires_large(BenchPlan(rows=100, cols=100))
        assert not requires_large(BenchPlan(rows=89, cols=70))

    def test_big_samples_and_features_must_coincide(self):
        assert requires_large(
            BenchPlan(sample_sizes=(16000,), feature_counts=(300,))
        )
        assert not requires_large(
            BenchPlan(sample_sizes=(16000,), feature_counts=(299,))
        )
        assert not requires_large(
            BenchPlan(sample_sizes=(15999,), feature_counts=(300,))
        )

    def test_any_cell_of_the_cross_product_can_trip_the_gate(self):
        plan = BenchPlan(sample_sizes=(240, 16000), feature_counts=(4, 300))
        assert requires_large(plan)


class TestRunPlan:
    def test_one_row_per_cell_in_plan_order(self):
        plan = BenchPlan(
            sample_sizes=(60, 120), feature_counts=(2, 3),
            rows=3, cols=3, epochs=3, runs=1,
        )
        rows = run_plan(plan)
        assert [(r.samples, r.features) for r in rows] == [
            (60, 2), (60, 3), (120, 2), (120, 3),
        ]
        for r in rows:
            assert r.error == ""
            assert r.runs == 1
            assert math.isfinite(r.qe_mean) and r.qe_mean > 0
            assert 0.0 <= r.te_mean <= 1.0
            assert r.time_train_s >= 0.0

    def test_statistics_are_deterministic_across_calls(self):
        plan = BenchPlan(**TINY)
        a = run_plan(plan)
        b = run_plan(plan)
        assert [stat_fields(r) for r in a] == [stat_fields(r) for r in b]

    def test_std_is_over_runs(self):
        plan = BenchPlan(**TINY)
        (row,) = run_plan(plan)
        assert row.qe_std >= 0.0
        single = BenchPlan(**{**TINY, "runs": 1})
        (one,) = run_plan(single)
        assert one.qe_std == 0.0

    def test_failing_cell_is_recorded_not_fatal(self):
        plan = BenchPlan(
            sample_sizes=(2, 120), feature_counts=(3,),
            rows=4, cols=4, epochs=3, runs=1,
        )
        bad, good = run_plan(plan)
        assert bad.samples == 2
        assert bad.error != ""
        assert math.isnan(bad.qe_mean)
        assert good.error == ""
        assert math.isfinite(good.qe_mean)

    def test_progress_callback_sees_each_run(self):
        plan = BenchPlan(**TINY)
        messages = []
        run_plan(plan, progress=messages.append)
        assert len(messages) == 2
        assert messages[0].startswith("bench 120x3 run 1/2:")
        assert "qe=" in messages[0] and "te=" in messages[0]


class TestRenderTable:
    @staticmethod
    def fixed_rows():
        return [
            BenchRow(240, 4, 10, 1.234, 0.056, 0.1234, 0.019, 0.015, 2.5, 0.31),
            BenchRow(4000, 50, 10, error="boom"),
        ]

    def test_text_formats_mean_plus_minus_std(self):
        text = render_table(self.fixed_rows())
        lines = text.strip().split("\n")
        assert lines[0].split() == [
            "samples", "features", "qe", "te", "t_init", "t_train", "t_metrics",
        ]
        assert "1.23±0.06" in lines[1]
        assert "12±2%" in lines[1]
        assert "0.01" in lines[1] and "2.50" in lines[1] and "0.31" in lines[1]

    def test_text_columns_stay_aligned(self):
        text = render_table(self.fixed_rows())
        lengths = {len(line) for line in text.splitlines()}
        assert len(lengths) == 1

    def test_error_rows_carry_the_message(self):
        text = render_table(self.fixed_rows())
        assert "error: boom" in text.strip().split("\n")[2]

    def test_csv_header_and_exact_floats(self):
        rows = [BenchRow(10, 2, 3, 1 / 3, 0.1, 2 / 7, 0.0, 0.5, 1.5, 0.25)]
        text = render_table(rows, fmt="csv")
        lines = text.strip().split("\n")
        assert lines[0] == CSV_HEADER
        cells = lines[1].split(",")
        assert float(cells[3]) == 1 / 3
        assert float(cells[5]) == 2 / 7

    def test_unknown_format_is_rejected(self):
        with pytest.raises(ParameterError):
            render_table(self.fixed_rows(), fmt="json")


class TestParseTableCsv:
    def test_round_trips_real_results_exactly(self):
        rows = run_plan(BenchPlan(**TINY))
        back = parse_table_csv(render_table(rows, fmt="csv"))
        assert len(back) == len(rows)
        for a, b in zip(rows, back):
            assert stat_fields(a) == stat_fields(b)
            assert a.time_train_s == b.time_train_s
            assert a.time_init_s == b.time_init_s
            assert a.time_metrics_s == b.time_metrics_s

    def test_round_trips_error_rows_with_nan_stats(self):
        rows = [BenchRow(8, 2, 1, error="pca needs more samples")]
        (back,) = parse_table_csv(render_table(rows, fmt="csv"))
        assert back.error == "pca needs more samples"
        assert math.isnan(back.qe_mean) and math.isnan(back.te_std)
        assert (back.samples, back.features, back.runs) == (8, 2, 1)

    def test_rejects_empty_text(self):
        with pytest.raises(ParseError):
            parse_table_csv("")

    def test_rejects_foreign_header(self):
        with pytest.raises(ParseError):
            parse_table_csv("a,b,c\n1,2,3\n")

    def test_rejects_short_and_malformed_rows(self):
        good = render_table([BenchRow(8, 2, 1)], fmt="csv")
        header = good.split("\n")[0]
        with pytest.raises(ParseError, match="row 2"):
            parse_table_csv(header + "\n1,2,3\n")
        with pytest.raises(ParseError, match="row 2"):
            parse_table_csv(
                header + "\n1,2,3,x,nan,nan,nan,nan,nan,nan,\n"
            )


class TestThreadsMatchSingleThread:
    def test_stats_are_identical_for_any_worker_count(self):
        plan = BenchPlan(**TINY)
        base = [stat_fields(r) for r in run_plan(plan, threads=1)]
        assert [stat_fields(r) for r in run_plan(plan, threads=4)] == base
