"""
CostmapFrame: 인지 → 제어로 전달되는 단위

캡처 시점 pose 기준 차량 좌표계 코스트맵 + 셀 유효성 마스크.
제어기는 현재 월드 좌표를 캡처 pose 를 통해 변환해 조회한다 (이전 프레임 재사용).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from app import config
from app.costmap.grid import CostMapGrid, Pose2, lookup_costs, transform_points


@dataclass(frozen=True)
class CostmapFrame:
    grid: CostMapGrid
    capture_pose: Pose2
    capture_time: float
    valid: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.grid.frame != "body":
            raise ValueError(f"CostmapFrame 의 grid 는 body 좌표계여야 합니다 (입력: {self.grid.frame})")
        valid = np.ones(self.grid.values.shape, dtype=bool) if self.valid is None else np.asarray(self.valid, dtype=bool)
        if valid.shape != self.grid.values.shape:
            raise ValueError(f"유효성 마스크 shape {valid.shape} 가 grid {self.grid.values.shape} 와 다릅니다.")
        valid.setflags(write=False)
        object.__setattr__(self, "valid", valid)

    @cached_property
    def effective_grid(self) -> CostMapGrid:
        """미확인 셀을 OUT_OF_MAP_COST 로 채운 그리드"""
        return self.grid.with_values(np.where(self.valid, self.grid.values, config.OUT_OF_MAP_COST))

    def replace(self, values: Optional[np.ndarray] = None, valid: Optional[np.ndarray] = None) -> "CostmapFrame":
        grid = self.grid if values is None else self.grid.with_values(values)
        return CostmapFrame(grid, self.capture_pose, self.capture_time, self.valid if valid is None else valid)

    def lookup_body(self, bx: np.ndarray, by: np.ndarray) -> np.ndarray:
        return lookup_costs(self.effective_grid, bx, by)

    def lookup_world(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """월드 좌표 조회: 캡처 pose 의 차량 좌표계로 변환 후 보간"""
        body = transform_points(self.capture_pose, np.stack([np.asarray(x), np.asarray(y)], axis=-1), "world_to_body")
        return lookup_costs(self.effective_grid, body[..., 0], body[..., 1])

    def age(self, now: float) -> float:
        return now - self.capture_time
