"""
랩 검출

출발선: 중심선 0번 꼭짓점에서 진행 방향에 수직인 선분 (길이 = 2 * (half_width + 0.5)).
진행 방향으로 통과할 때만 이벤트, 직전 이벤트 후 LAP_RECROSS_GUARD 초 이내 재통과는 무시.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from app import config
from app.costmap.track import Centerline

START_LINE_EXTRA = 0.5  # m, 트랙 폭 바깥으로 연장


def _orient(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    return float((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def segment_crosses(p0: Sequence[float], p1: Sequence[float], a: Sequence[float], b: Sequence[float]) -> bool:
    """이동 선분 p0→p1 이 선분 a-b 와 만나는지 (끝점 접촉 포함)"""
    p0, p1, a, b = (np.asarray(v, dtype=float) for v in (p0, p1, a, b))
    d1, d2 = _orient(a, b, p0), _orient(a, b, p1)
    d3, d4 = _orient(p0, p1, a), _orient(p0, p1, b)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0) or d2 == 0 or d1 == 0) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0) or d3 == 0 or d4 == 0
    ):
        if d1 == d2 == 0:
            # 동일 직선 위: 투영 구간이 겹치는지
            axis = b - a
            t = sorted([float(np.dot(p0 - a, axis)), float(np.dot(p1 - a, axis))])
            return t[1] >= 0 and t[0] <= float(np.dot(axis, axis))
        return True
    return False


@dataclass(frozen=True)
class StartLine:
    a: np.ndarray
    b: np.ndarray
    origin: np.ndarray
    forward: np.ndarray  # 단위 벡터, 요구 통과 방향

    @classmethod
    def from_centerline(cls, centerline: Centerline) -> "StartLine":
        pts = centerline.points()
        origin = pts[0]
        tangent = pts[1] - pts[0]
        tangent = tangent / np.linalg.norm(tangent)
        normal = np.array([-tangent[1], tangent[0]])
        reach = centerline.half_width + START_LINE_EXTRA
        return cls(origin + normal * reach, origin - normal * reach, origin, tangent)

    def side(self, p: Sequence[float]) -> float:
        return float(np.dot(np.asarray(p, dtype=float) - self.origin, self.forward))


def detect_lap(prev: Sequence[float], cur: Sequence[float], line: StartLine) -> bool:
    """출발선을 요구 방향(뒤 → 앞)으로 통과했는지. 재통과 보호는 LapDetector 가 담당."""
    if not (line.side(prev) < 0.0 <= line.side(cur)):
        return False
    return segment_crosses(prev, cur, line.a, line.b)


class LapDetector:
    """랩 이벤트 상태 머신 (재통과 보호 포함)"""

    def __init__(self, line: StartLine, guard: float = config.LAP_RECROSS_GUARD):
        self.line = line
        self.guard = guard
        self.last_event: Optional[float] = None

    def update(self, prev: Sequence[float], cur: Sequence[float], t: float) -> bool:
        if not detect_lap(prev, cur, self.line):
            return False
        if self.last_event is not None and t - self.last_event < self.guard:
            return False
        self.last_event = t
        return True
