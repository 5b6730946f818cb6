"""
폐루프 에피소드 실행

플랜트와 MPPI 제어기를 dt(40 Hz) 마다 함께 진행시키며 랩/실패를 검출한다.

실패 판정 (FailureCriteria):
  - off_track: 차량 위치의 실제 트랙 비용 > 0.98 이 1.0 초 연속
  - stall    : 속력 < 0.2 m/s 가 3.0 초 연속
  - diverged : 플랜트 적분 결과가 유한하지 않음
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from app import config
from app.costmap.grid import CostMapGrid, Pose2, lookup_cost
from app.costmap.track import Centerline, build_track_costmap
from app.mppi.optimizer import MppiController, StepDiagnostics
from app.perception.provider import get_provider_for_spec
from app.schemas import EpisodeConfig, MppiParams, VehicleParams, load_model
from app.sim.laps import LapDetector, StartLine
from app.utils import TimingStats, measure_time, write_json
from app.vehicle.dynamics import Control, VehicleState, step

logger = logging.getLogger(__name__)

LOG_COLUMNS = (
    "t",
    "px",
    "py",
    "yaw",
    "roll",
    "vx",
    "vy",
    "yaw_rate",
    "speed",
    "steering",
    "throttle",
    "frame_age",
    "cost_min",
    "cost_mean",
    "ess",
    "crash_fraction",
    "track_cost",
    "lap",
)


@dataclass
class StepRecord:
    t: float
    state: VehicleState
    control: Control
    frame_age: float
    diagnostics: StepDiagnostics
    track_cost: float
    lap: int

    def row(self) -> List[float]:
        s, d = self.state, self.diagnostics
        return [
            self.t,
            s.px,
            s.py,
            s.yaw,
            s.roll,
            s.vx,
            s.vy,
            s.yaw_rate,
            s.speed,
            self.control.steering,
            self.control.throttle,
            self.frame_age,
            d.cost_min,
            d.cost_mean,
            d.effective_sample_size,
            d.crash_fraction,
            self.track_cost,
            self.lap,
        ]


@dataclass(frozen=True)
class FailureRecord:
    cause: str  # off_track | stall | diverged
    time: float


@dataclass
class EpisodeLog:
    label: str
    direction: str
    target_speed: float
    dt: float
    lap_goal: int
    records: List[StepRecord] = field(default_factory=list)
    lap_boundaries: List[float] = field(default_factory=list)
    failure: Optional[FailureRecord] = None
    timing: Dict[str, float] = field(default_factory=dict)

    @property
    def lap_times(self) -> List[float]:
        starts = [0.0] + self.lap_boundaries[:-1]
        return [end - start for start, end in zip(starts, self.lap_boundaries)]

    @property
    def laps_completed(self) -> int:
        return len(self.lap_boundaries)

    @property
    def avg_lap_time(self) -> Optional[float]:
        times = self.lap_times
        return float(np.mean(times)) if times else None

    @property
    def top_speed(self) -> float:
        return max((r.state.speed for r in self.records), default=0.0)

    @property
    def duration(self) -> float:
        return self.records[-1].t + self.dt if self.records else 0.0

    @property
    def failed(self) -> bool:
        return self.failure is not None

    def summary(self) -> dict:
        return {
            "label": self.label,
            "direction": self.direction,
            "target_speed": self.target_speed,
            "steps": len(self.records),
            "duration": self.duration,
            "lap_goal": self.lap_goal,
            "laps_completed": self.laps_completed,
            "lap_times": self.lap_times,
            "avg_lap_time": self.avg_lap_time,
            "top_speed": self.top_speed,
            "failure": None if self.failure is None else {"cause": self.failure.cause, "time": self.failure.time},
            "no_frame_steps": sum(1 for r in self.records if r.diagnostics.no_frame),
        }

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(LOG_COLUMNS)
            for record in self.records:
                writer.writerow(record.row())
        return path

    def write(self, out_dir: Union[str, Path], stem: str = "episode") -> Path:
        out_dir = Path(out_dir)
        self.to_csv(out_dir / f"{stem}.csv")
        write_json(out_dir / f"{stem}_summary.json", self.summary())
        return out_dir


def load_episode_csv(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """EpisodeLog CSV 를 열 이름 -> 배열 dict 로 로드"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"에피소드 로그를 찾을 수 없습니다: {path}")
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = [c for c in ("t", "px", "py", "speed") if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"에피소드 로그에 필요한 열이 없습니다: {', '.join(missing)}")
        rows = list(reader)
    return {name: np.array([float(r[name]) for r in rows]) for name in (reader.fieldnames or [])}


class EpisodeRunner:
    """
    설정 로드 → 월드 코스트맵 생성 → 폐루프 실행.

    설정 파일 오류는 생성자에서 발생한다 (스텝 진행 전).
    """

    def __init__(
        self,
        episode: EpisodeConfig,
        base_dir: Union[str, Path, None] = None,
        world_map: Optional[CostMapGrid] = None,
        mppi_params: Optional[MppiParams] = None,
        vehicle_params: Optional[VehicleParams] = None,
    ):
        self.config = episode.resolve_paths(base_dir or config.DEFAULT_CONFIG_DIR)
        cfg = self.config

        centerline = Centerline.load(cfg.track)
        self.centerline = centerline.reversed() if cfg.direction == "cw" else centerline
        self.vehicle_params = vehicle_params or load_model(VehicleParams, cfg.vehicle)
        self.plant_params = load_model(VehicleParams, cfg.plant) if cfg.plant else self.vehicle_params
        mppi = mppi_params or load_model(MppiParams, cfg.mppi)
        self.mppi_params = mppi.model_copy(update={"desired_speed": cfg.target_speed})
        self.world_map = world_map or build_track_costmap(self.centerline, cfg.world_resolution, cfg.world_margin)
        self.start_line = StartLine.from_centerline(self.centerline)

    def initial_state(self) -> VehicleState:
        line = self.start_line
        yaw = math.atan2(line.forward[1], line.forward[0])
        return VehicleState(px=float(line.origin[0]), py=float(line.origin[1]), yaw=yaw, vx=self.config.initial_speed)

    def run(self) -> EpisodeLog:
        cfg = self.config
        dt = self.mppi_params.dt
        n_steps = int(round(cfg.time_limit / dt))
        criteria = cfg.failure

        provider = get_provider_for_spec(cfg.provider, cfg.crop)
        controller = MppiController(self.mppi_params, self.vehicle_params, master_seed=cfg.seed)
        detector = LapDetector(self.start_line)
        stats = TimingStats()
        log = EpisodeLog(cfg.provider.label, cfg.direction, cfg.target_speed, dt, cfg.laps)

        state = self.initial_state()
        off_track_time = 0.0
        stall_time = 0.0
        logger.info(
            f"🏁 에피소드 시작: {cfg.provider.label}/{cfg.direction}, 목표 {cfg.target_speed} m/s, "
            f"{cfg.laps}랩, 최대 {n_steps} 스텝"
        )

        for i in range(n_steps):
            t = i * dt
            pose = Pose2(state.px, state.py, state.yaw)
            track_cost = lookup_cost(self.world_map, state.px, state.py)

            frame = provider.provide(self.world_map, pose, t)
            with measure_time(stats, "control_step"):
                control, diagnostics = controller.control_step(state, frame)
            frame_age = frame.age(t) if frame is not None else float("nan")
            log.records.append(StepRecord(t, state, control, frame_age, diagnostics, track_cost, log.laps_completed))

            off_track_time = off_track_time + dt if track_cost > criteria.off_track_cost else 0.0
            stall_time = stall_time + dt if state.speed < criteria.stall_speed else 0.0
            if off_track_time >= criteria.off_track_duration - config.TIME_EPS:
                log.failure = FailureRecord("off_track", t)
                break
            if stall_time >= criteria.stall_duration - config.TIME_EPS:
                log.failure = FailureRecord("stall", t)
                break

            try:
                next_state = step(state, control, self.plant_params, dt)
            except ValueError as e:
                logger.warning(f"⚠️ 플랜트 적분 실패 (t={t:.3f}): {e}")
                log.failure = FailureRecord("diverged", t)
                break

            t_next = (i + 1) * dt
            if detector.update((state.px, state.py), (next_state.px, next_state.py), t_next):
                log.lap_boundaries.append(t_next)
            state = next_state
            if log.laps_completed >= cfg.laps:
                break

        stats.log_summary()
        step_stats = stats.get_stats("control_step")
        log.timing = {"mean": step_stats["avg"] * 1e3, "median": step_stats["median"] * 1e3, "max": step_stats["max"] * 1e3}

        if log.failure is not None:
            logger.warning(f"❌ 에피소드 실패: {log.failure.cause} (t={log.failure.time:.2f}s, 완료 랩 {log.laps_completed})")
        else:
            avg = log.avg_lap_time
            avg_text = f"{avg:.2f}s" if avg is not None else "-"
            logger.info(f"✅ 에피소드 종료: {log.laps_completed}랩, 평균 랩 {avg_text}, 최고 속력 {log.top_speed:.2f} m/s")
        return log


def run_episode(episode: EpisodeConfig, base_dir: Union[str, Path, None] = None, **kwargs) -> EpisodeLog:
    """EpisodeConfig 한 건 실행 (kwargs 는 EpisodeRunner 로 전달)"""
    return EpisodeRunner(episode, base_dir=base_dir, **kwargs).run()
