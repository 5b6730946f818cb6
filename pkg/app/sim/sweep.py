"""
목표 속도 스윕 (방법 x 방향 x 목표 속도 표)

각 실행의 시드는 mix_seed(기본 시드, 목표 속도, 방향) 으로 새로 유도한다.
에피소드끼리 독립이므로 workers > 1 이면 병렬로 실행하고, 행 순서는 입력 순서를 따른다.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from tqdm import tqdm

from app.schemas import EpisodeConfig
from app.sim.episode import EpisodeLog, run_episode
from app.utils import mix_seed, parallel_map

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ("method", "direction", "target_speed", "avg_lap", "top_speed", "laps", "failure")
FAILURE = "FAILURE"


@dataclass(frozen=True)
class SweepRow:
    method: str
    direction: str
    target_speed: float
    avg_lap: Optional[float]  # None = FAILURE
    top_speed: float
    laps: int
    failure: Optional[str]

    @property
    def failed(self) -> bool:
        return self.avg_lap is None

    @classmethod
    def from_log(cls, log: EpisodeLog) -> "SweepRow":
        failed = log.failed or log.laps_completed == 0
        return cls(
            method=log.label,
            direction=log.direction,
            target_speed=log.target_speed,
            avg_lap=None if failed else log.avg_lap_time,
            top_speed=log.top_speed,
            laps=log.laps_completed,
            failure=log.failure.cause if log.failure else (None if log.laps_completed else "no_lap"),
        )

    def csv_row(self) -> list:
        return [
            self.method,
            self.direction,
            self.target_speed,
            FAILURE if self.failed else f"{self.avg_lap:.2f}",
            f"{self.top_speed:.2f}",
            self.laps,
            self.failure or "",
        ]


def sweep_episode_config(base: EpisodeConfig, target: float, direction: str) -> EpisodeConfig:
    """스윕 한 칸의 에피소드 설정 (목표 속도, 방향, 유도 시드)"""
    return base.model_copy(
        update={"target_speed": float(target), "direction": direction, "seed": mix_seed(base.seed, float(target), direction)}
    )


def speed_sweep(
    base: EpisodeConfig,
    targets: Sequence[float],
    directions: Sequence[str] = ("ccw", "cw"),
    base_dir: Union[str, Path, None] = None,
    workers: int = 1,
    **runner_kwargs,
) -> List[SweepRow]:
    """
    목표 속도 x 방향 조합마다 에피소드를 실행해 표 행 생성.

    Raises:
        ValueError: targets 가 비었거나 오름차순이 아닌 경우
    """
    targets = [float(t) for t in targets]
    if not targets:
        raise ValueError("targets 가 비어 있습니다.")
    if any(b <= a for a, b in zip(targets, targets[1:])):
        raise ValueError(f"targets 는 오름차순이어야 합니다: {targets}")
    for d in directions:
        if d not in ("ccw", "cw"):
            raise ValueError(f"알 수 없는 방향: {d}")

    jobs: List[Tuple[str, float]] = [(d, t) for d in directions for t in targets]
    rows: List[SweepRow] = []
    with tqdm(total=len(jobs), desc="sweep", unit="run", disable=None) as bar:
        for start in range(0, len(jobs), max(1, workers)):
            chunk = jobs[start : start + max(1, workers)]
            logs = parallel_map(
                lambda job: run_episode(sweep_episode_config(base, job[1], job[0]), base_dir=base_dir, **runner_kwargs),
                chunk,
                max_workers=workers,
            )
            rows.extend(SweepRow.from_log(log) for log in logs)
            bar.update(len(chunk))

    failed = sum(1 for r in rows if r.failed)
    logger.info(f"✅ 스윕 완료: {len(rows)}행 (FAILURE {failed}행)")
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_row())
    return path
