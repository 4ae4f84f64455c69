"""Step recording, runtime projection, and deadline decisions."""

from __future__ import annotations

import csv

import pytest

from burstline.errors import InsufficientDataError
from burstline.monitor import (
    BurstNeeded,
    MonitorState,
    Ok,
    StepRecord,
    check_deadline,
    estimate_total,
    export_csv,
    record_step,
)


def feed(state, durations, environment="cluster", start=0):
    for offset, duration in enumerate(durations):
        state = record_step(
            state, StepRecord(step_index=start + offset,
                              duration_seconds=duration,
                              environment=environment)
        )
    return state


class TestRecordStep:
    def test_appends_from_zero(self):
        state = MonitorState(deadline_seconds=100.0)
        state = feed(state, [2.0, 3.0])
        assert len(state.records) == 2
        assert state.elapsed_seconds == 5.0

    def test_gap_rejected(self):
        state = feed(MonitorState(deadline_seconds=100.0), [2.0])
        with pytest.raises(ValueError):
            record_step(state, StepRecord(step_index=2, duration_seconds=1.0,
                                          environment="cluster"))

    def test_must_start_at_zero(self):
        state = MonitorState(deadline_seconds=100.0)
        with pytest.raises(ValueError):
            record_step(state, StepRecord(step_index=1, duration_seconds=1.0,
                                          environment="cluster"))

    def test_long_history_sum_is_exact(self):
        state = feed(MonitorState(deadline_seconds=1e9), [0.5] * 100)
        assert state.elapsed_seconds == pytest.approx(50.0, rel=1e-12)
        assert state.records[-1].step_index == 99

    def test_nonpositive_duration_rejected(self):
        with pytest.raises(ValueError):
            StepRecord(step_index=0, duration_seconds=0.0, environment="cluster")


class TestEstimateTotal:
    def test_steady_run(self):
        # 10 steps of 2 s each, 100 steps total: 20 + 2 * 90
        state = feed(MonitorState(deadline_seconds=1e6, window=5), [2.0] * 10)
        assert estimate_total(state, 100) == pytest.approx(200.0, rel=1e-12)

    def test_recent_slowdown_dominates(self):
        # 45 steps at 1 s then 5 at 3 s, window 5: 60 + 3 * 50
        state = feed(MonitorState(deadline_seconds=1e6, window=5), [1.0] * 45 + [3.0] * 5)
        assert estimate_total(state, 100) == pytest.approx(210.0, rel=1e-12)

    def test_window_wider_than_history(self):
        state = feed(MonitorState(deadline_seconds=1e6, window=10), [2.0, 4.0])
        # mean over everything recorded: 6 + 3 * 8
        assert estimate_total(state, 10) == pytest.approx(30.0, rel=1e-12)

    def test_no_remaining_steps_returns_elapsed(self):
        state = feed(MonitorState(deadline_seconds=1e6), [1.5] * 4)
        assert estimate_total(state, 4) == pytest.approx(6.0, rel=1e-12)

    def test_empty_history_rejected(self):
        with pytest.raises(InsufficientDataError):
            estimate_total(MonitorState(deadline_seconds=100.0), 10)

    def test_total_below_recorded_rejected(self):
        state = feed(MonitorState(deadline_seconds=1e6), [1.0] * 5)
        with pytest.raises(ValueError):
            estimate_total(state, 4)


class TestCheckDeadline:
    def test_under_deadline(self):
        state = MonitorState(deadline_seconds=300.0)
        assert check_deadline(state, 200.0) == Ok()

    def test_overrun_reports_surplus(self):
        state = MonitorState(deadline_seconds=300.0)
        decision = check_deadline(state, 300.0 + 305.78)
        assert isinstance(decision, BurstNeeded)
        assert decision.surplus_seconds == pytest.approx(305.78, rel=1e-12)

    def test_exactly_on_deadline_is_ok(self):
        state = MonitorState(deadline_seconds=300.0)
        assert check_deadline(state, 300.0) == Ok()

    def test_slack_raises_threshold_but_not_surplus(self):
        state = MonitorState(deadline_seconds=100.0, slack_fraction=0.1)
        assert check_deadline(state, 109.0) == Ok()
        decision = check_deadline(state, 111.0)
        assert isinstance(decision, BurstNeeded)
        # surplus is against the deadline itself, not the slacked threshold
        assert decision.surplus_seconds == pytest.approx(11.0, rel=1e-12)

    def test_monotone_in_estimate(self):
        state = MonitorState(deadline_seconds=500.0)
        burst_seen = False
        for estimate in range(0, 1000, 7):
            decision = check_deadline(state, float(estimate))
            if isinstance(decision, BurstNeeded):
                burst_seen = True
            else:
                assert not burst_seen, "Ok after BurstNeeded as estimate grows"
        assert burst_seen

    def test_bad_estimate_rejected(self):
        state = MonitorState(deadline_seconds=100.0)
        with pytest.raises(ValueError):
            check_deadline(state, float("nan"))
        with pytest.raises(ValueError):
            check_deadline(state, -1.0)


class TestMonitorStateValidation:
    def test_bad_deadline(self):
        with pytest.raises(ValueError):
            MonitorState(deadline_seconds=0.0)

    def test_bad_window(self):
        with pytest.raises(ValueError):
            MonitorState(deadline_seconds=10.0, window=0)


class TestExportCsv:
    def test_header_and_rows(self, tmp_path):
        path = tmp_path / "monitor.csv"
        state = feed(MonitorState(deadline_seconds=25.0, window=5), [2.0] * 10)
        export_csv(state, 10, path)
        with open(path, newline="") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == [
            "step_index", "duration_seconds", "environment", "estimate_seconds", "decision"
        ]
        assert len(rows) == 11
        assert rows[1][:3] == ["0", "2.0", "cluster"]
        # after the first step the projection is 2 * 10 = 20 <= 25
        assert rows[1][3] == "20.0"
        assert rows[1][4] == "ok"

    def test_decision_column_flips_when_estimate_overruns(self, tmp_path):
        path = tmp_path / "monitor.csv"
        # 1 s steps then 10 s steps against a 40 s deadline over 20 steps
        state = feed(MonitorState(deadline_seconds=40.0, window=2), [1.0] * 10 + [10.0] * 2)
        export_csv(state, 20, path)
        with open(path, newline="") as handle:
            rows = list(csv.reader(handle))
        decisions = [row[4] for row in rows[1:]]
        assert decisions[:10] == ["ok"] * 10
        assert decisions[-1] == "burst_needed"
