import math

import numpy as np
import pytest

from app.costmap.track import Centerline
from app.mppi.optimizer import StepDiagnostics
from app.schemas import EpisodeConfig, MppiParams
from app.sim.episode import LOG_COLUMNS, EpisodeLog, EpisodeRunner, FailureRecord, StepRecord, load_episode_csv, run_episode
from app.sim.laps import LapDetector, StartLine, detect_lap, segment_crosses
from app.sim.sweep import FAILURE, SweepRow, speed_sweep, sweep_episode_config, write_sweep_csv
from app.vehicle.dynamics import Control, VehicleState


@pytest.fixture
def square() -> Centerline:
    return Centerline(vertices=[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)], closed=True, half_width=1.0)


@pytest.fixture
def tiny_mppi() -> MppiParams:
    return MppiParams(num_samples=32, horizon=10)


def _record(t: float, speed: float = 3.0, lap: int = 0) -> StepRecord:
    return StepRecord(t, VehicleState(px=t, vx=speed), Control(0.1, 0.5), 0.0, StepDiagnostics(int(t * 40)), 0.1, lap)


# -------------------------------------------------------------------
# 랩 검출
# -------------------------------------------------------------------


def test_start_line_geometry(square):
    line = StartLine.from_centerline(square)
    np.testing.assert_allclose(line.origin, [0.0, 0.0])
    np.testing.assert_allclose(line.forward, [1.0, 0.0])
    np.testing.assert_allclose(sorted([line.a[1], line.b[1]]), [-1.5, 1.5])


def test_motion_not_crossing(square):
    line = StartLine.from_centerline(square)
    assert not detect_lap((-1.0, 0.2), (-0.5, 0.2), line)
    assert not detect_lap((0.5, 0.2), (1.0, 0.2), line)


def test_single_forward_crossing(square):
    line = StartLine.from_centerline(square)
    assert detect_lap((-0.1, 0.3), (0.1, 0.3), line)
    assert detect_lap((-0.1, 0.3), (0.0, 0.3), line)


def test_backward_or_outside_crossing_ignored(square):
    line = StartLine.from_centerline(square)
    assert not detect_lap((0.1, 0.3), (-0.1, 0.3), line)
    assert not detect_lap((-0.1, 5.0), (0.1, 5.0), line)


def test_segment_crosses():
    assert segment_crosses((0, -1), (0, 1), (-1, 0), (1, 0))
    assert not segment_crosses((0, 1), (0, 2), (-1, 0), (1, 0))
    assert segment_crosses((0, 0), (0, 1), (-1, 0), (1, 0))
    assert segment_crosses((-2, 0), (0, 0), (-1, 0), (1, 0))


def test_jitter_counts_one_lap(square):
    """2 초 안에 앞-뒤-앞으로 흔들리며 통과하면 이벤트 1회"""
    line = StartLine.from_centerline(square)
    xs = [-0.3, -0.1, 0.1, -0.05, 0.05, -0.02, 0.2, 0.5]
    path = [(x, 0.2) for x in xs]
    times = [1.0 + 0.1 * i for i in range(len(xs))]

    raw_forward = sum(
        1
        for p, q in zip(path, path[1:])
        if line.side(p) < 0 <= line.side(q) and segment_crosses(p, q, line.a, line.b)
    )
    assert raw_forward == 3

    detector = LapDetector(line)
    events = [t for p, q, t in zip(path, path[1:], times[1:]) if detector.update(p, q, t)]
    assert events == [times[2]]


def test_guard_allows_next_lap(square):
    line = StartLine.from_centerline(square)
    detector = LapDetector(line)
    assert detector.update((-0.1, 0.0), (0.1, 0.0), 1.0)
    assert not detector.update((-0.1, 0.0), (0.1, 0.0), 2.5)
    assert detector.update((-0.1, 0.0), (0.1, 0.0), 3.1)


# -------------------------------------------------------------------
# EpisodeLog
# -------------------------------------------------------------------


def test_episode_log_lap_statistics():
    log = EpisodeLog("TD", "ccw", 5.0, 0.025, 3)
    log.records = [_record(0.0, 2.0), _record(0.025, 4.5), _record(0.05, 3.0)]
    log.lap_boundaries = [10.0, 21.0, 31.5]
    assert log.lap_times == [10.0, 11.0, 10.5]
    assert log.laps_completed == 3
    assert log.avg_lap_time == pytest.approx(10.5)
    assert log.top_speed == 4.5
    assert log.duration == pytest.approx(0.075)
    assert not log.failed

    summary = log.summary()
    assert "timing" not in summary
    assert summary["failure"] is None
    assert summary["laps_completed"] == 3


def test_episode_log_without_laps():
    log = EpisodeLog("TD", "cw", 5.0, 0.025, 10, failure=FailureRecord("stall", 3.0))
    assert log.lap_times == []
    assert log.avg_lap_time is None
    assert log.top_speed == 0.0
    assert log.summary()["failure"] == {"cause": "stall", "time": 3.0}


def test_episode_csv_round_trip(tmp_path):
    log = EpisodeLog("TD", "ccw", 5.0, 0.025, 1)
    log.records = [_record(0.0), _record(0.025, lap=1)]
    log.write(tmp_path, "ep")

    header = (tmp_path / "ep.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header.split(",") == list(LOG_COLUMNS)
    data = load_episode_csv(tmp_path / "ep.csv")
    np.testing.assert_allclose(data["t"], [0.0, 0.025])
    np.testing.assert_allclose(data["lap"], [0, 1])
    assert (tmp_path / "ep_summary.json").exists()


def test_load_episode_csv_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_episode_csv(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_episode_csv(bad)


# -------------------------------------------------------------------
# 에피소드 실행
# -------------------------------------------------------------------


def test_short_time_limit_gives_four_steps(oval_map, tiny_mppi):
    log = run_episode(EpisodeConfig(time_limit=0.1), world_map=oval_map, mppi_params=tiny_mppi)
    assert len(log.records) == 4
    assert log.laps_completed == 0
    assert not log.failed
    assert [r.t for r in log.records] == pytest.approx([0.0, 0.025, 0.05, 0.075])


def test_zero_latency_oracle_has_frame_every_step(oval_map, tiny_mppi):
    log = run_episode(EpisodeConfig(time_limit=0.1), world_map=oval_map, mppi_params=tiny_mppi)
    assert all(not r.diagnostics.no_frame for r in log.records)
    assert all(abs(r.frame_age) < 1e-12 for r in log.records)


def test_latency_brakes_until_first_frame(oval_map, tiny_mppi):
    episode = EpisodeConfig(time_limit=0.2, provider={"kind": "oracle", "update_rate": 10.0, "latency": 0.1})
    log = run_episode(episode, world_map=oval_map, mppi_params=tiny_mppi)
    no_frame = [r.diagnostics.no_frame for r in log.records]
    assert no_frame[:4] == [True] * 4
    assert not any(no_frame[4:])
    assert (log.records[0].control.steering, log.records[0].control.throttle) == (0.0, -0.3)
    assert math.isnan(log.records[0].frame_age)


def test_all_crash_world_fails_off_track(uniform_world, tiny_mppi):
    log = run_episode(EpisodeConfig(time_limit=5.0), world_map=uniform_world(1.0), mppi_params=tiny_mppi)
    assert log.failure is not None
    assert log.failure.cause == "off_track"
    assert log.failure.time == pytest.approx(0.975)


def test_episode_is_deterministic_across_workers(oval_map):
    logs = []
    for workers in (1, 2):
        params = MppiParams(num_samples=48, horizon=12, workers=workers)
        logs.append(run_episode(EpisodeConfig(time_limit=0.25, seed=7), world_map=oval_map, mppi_params=params))
    rows = [[r.row() for r in log.records] for log in logs]
    assert rows[0] == rows[1]
    assert logs[0].summary() == logs[1].summary()


def test_clockwise_starts_facing_backwards(oval, oval_map, tiny_mppi):
    runner = EpisodeRunner(EpisodeConfig(direction="cw"), world_map=oval_map, mppi_params=tiny_mppi)
    state = runner.initial_state()
    assert (state.px, state.py) == pytest.approx((0.0, -3.8))
    assert abs(state.yaw) == pytest.approx(math.pi)
    assert runner.centerline.vertices[1] == oval.vertices[-1]


def test_target_speed_sets_desired_speed(oval_map, tiny_mppi):
    runner = EpisodeRunner(EpisodeConfig(target_speed=6.5), world_map=oval_map, mppi_params=tiny_mppi)
    assert runner.mppi_params.desired_speed == 6.5


def test_config_errors_raise_before_stepping(tmp_path):
    with pytest.raises(FileNotFoundError):
        EpisodeRunner(EpisodeConfig(track=str(tmp_path / "missing.json")))


# -------------------------------------------------------------------
# 스윕
# -------------------------------------------------------------------


def test_sweep_rejects_bad_targets():
    base = EpisodeConfig()
    with pytest.raises(ValueError):
        speed_sweep(base, [])
    with pytest.raises(ValueError):
        speed_sweep(base, [6.0, 5.0])
    with pytest.raises(ValueError):
        speed_sweep(base, [5.0], directions=["up"])


def test_sweep_seed_derivation():
    base = EpisodeConfig(seed=3)
    a = sweep_episode_config(base, 5.0, "ccw")
    assert a == sweep_episode_config(base, 5, "ccw")
    assert (a.target_speed, a.direction) == (5.0, "ccw")
    assert a.seed != sweep_episode_config(base, 6.0, "ccw").seed
    assert a.seed != sweep_episode_config(base, 5.0, "cw").seed


def test_single_target_sweep_matches_episode(oval_map, tiny_mppi):
    base = EpisodeConfig(time_limit=0.25)
    rows = speed_sweep(base, [5.0], ["ccw"], world_map=oval_map, mppi_params=tiny_mppi)
    assert len(rows) == 1
    log = run_episode(sweep_episode_config(base, 5.0, "ccw"), world_map=oval_map, mppi_params=tiny_mppi)
    assert rows[0] == SweepRow.from_log(log)


def test_sweep_row_failure_formatting(tmp_path):
    log = EpisodeLog("IP", "cw", 8.0, 0.025, 10, failure=FailureRecord("off_track", 12.0))
    log.records = [_record(0.0, 7.9)]
    row = SweepRow.from_log(log)
    assert row.failed
    assert row.csv_row()[3] == FAILURE
    assert row.failure == "off_track"

    ok = EpisodeLog("TD", "ccw", 5.0, 0.025, 2, records=[_record(0.0, 5.1)], lap_boundaries=[12.0, 24.5])
    ok_row = SweepRow.from_log(ok)
    assert ok_row.csv_row()[3] == "12.25"

    path = write_sweep_csv([ok_row, row], tmp_path / "sweep.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "method,direction,target_speed,avg_lap,top_speed,laps,failure"
    assert len(lines) == 3


def test_no_laps_counts_as_failure():
    log = EpisodeLog("TD", "ccw", 5.0, 0.025, 10, records=[_record(0.0)])
    row = SweepRow.from_log(log)
    assert row.failed
    assert row.failure == "no_lap"
