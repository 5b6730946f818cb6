"""
트랙 중심선과 트랙 코스트맵 생성

- Centerline: 중심선 폴리라인 + 반폭 (JSON 파일로 저장/로드)
- build_track_costmap: 중심선까지 거리 d 에 대해 cost = min(1, d / half_width)
- 타원형(oval) 트랙 생성, waypoint CSV 로드 및 자기교차 검사
"""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app import config
from app.costmap.grid import CostMapGrid, Pose2
from app.utils import read_json, write_json

logger = logging.getLogger(__name__)


class Centerline(BaseModel):
    """트랙 중심선. closed=True 이면 마지막 점과 첫 점이 이어진다."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    vertices: List[Tuple[float, float]]
    closed: bool = True
    half_width: float = Field(gt=0)

    @model_validator(mode="after")
    def _check_geometry(self) -> "Centerline":
        required = 3 if self.closed else 2
        if len(self.vertices) < required:
            raise ValueError(
                f"중심선 꼭짓점이 부족합니다: {len(self.vertices)}개 (closed={self.closed} 이면 {required}개 이상)"
            )
        pts = np.asarray(self.vertices, dtype=float)
        if not np.all(np.isfinite(pts)):
            raise ValueError("중심선 좌표에 유한하지 않은 값이 있습니다.")
        nxt = np.roll(pts, -1, axis=0) if self.closed else pts[1:]
        cur = pts if self.closed else pts[:-1]
        if np.any(np.all(cur == nxt, axis=1)):
            raise ValueError("연속한 중심선 꼭짓점이 같은 위치입니다.")
        return self

    def points(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    def segments(self) -> Tuple[np.ndarray, np.ndarray]:
        """(시작점, 끝점) 배열 쌍, 각각 (S, 2)"""
        pts = self.points()
        if self.closed:
            return pts, np.roll(pts, -1, axis=0)
        return pts[:-1], pts[1:]

    @property
    def length(self) -> float:
        a, b = self.segments()
        return float(np.sum(np.linalg.norm(b - a, axis=1)))

    def reversed(self) -> "Centerline":
        """진행 방향 반전. 0번 꼭짓점은 유지한다 (출발선 위치 고정)."""
        verts = list(self.vertices)
        if self.closed:
            verts = [verts[0]] + verts[1:][::-1]
        else:
            verts = verts[::-1]
        return Centerline(vertices=verts, closed=self.closed, half_width=self.half_width)

    def pose_at(self, fraction: float) -> Pose2:
        """둘레 비율 fraction 위치의 점과 진행 방향"""
        a, b = self.segments()
        seg_len = np.linalg.norm(b - a, axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        s = (fraction % 1.0 if self.closed else min(max(fraction, 0.0), 1.0)) * cum[-1]
        idx = int(np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg_len) - 1))
        t = (s - cum[idx]) / seg_len[idx]
        p = a[idx] + t * (b[idx] - a[idx])
        d = b[idx] - a[idx]
        return Pose2(float(p[0]), float(p[1]), math.atan2(d[1], d[0]))

    def save(self, path: Union[str, Path]) -> Path:
        return write_json(path, self.model_dump(mode="json"))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Centerline":
        return cls.model_validate(read_json(path))


# -------------------------------------------------------------------
# 거리 계산
# -------------------------------------------------------------------


def point_segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """점들 (N, 2) 과 선분 a-b 사이의 유클리드 거리"""
    ab = b - a
    denom = float(ab @ ab)
    ap = points - a
    t = np.clip((ap @ ab) / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(points))
    closest = a + t[:, None] * ab
    return np.linalg.norm(points - closest, axis=1)


def distance_to_centerline(points: np.ndarray, centerline: Centerline) -> np.ndarray:
    """각 점에서 중심선 폴리라인의 가장 가까운 점까지 거리"""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    best = np.full(len(pts), np.inf)
    for a, b in zip(*centerline.segments()):
        np.minimum(best, point_segment_distance(pts, a, b), out=best)
    return best


def build_track_costmap(
    centerline: Centerline,
    resolution: float = config.DEFAULT_RESOLUTION,
    margin: float = config.DEFAULT_TRACK_MARGIN,
) -> CostMapGrid:
    """
    월드 좌표계 트랙 코스트맵 생성.

    그리드 범위는 중심선 bounding box 를 margin 만큼 확장한 영역.
    """
    if not resolution > 0:
        raise ValueError(f"resolution 은 양수여야 합니다: {resolution}")
    pts = centerline.points()
    lo = pts.min(axis=0) - margin
    hi = pts.max(axis=0) + margin
    width = max(1, int(math.ceil((hi[0] - lo[0]) / resolution)))
    height = max(1, int(math.ceil((hi[1] - lo[1]) / resolution)))

    origin = Pose2(float(lo[0]), float(lo[1]), 0.0)
    template = CostMapGrid(width, height, resolution, origin, "world", np.zeros((height, width)))
    centers = template.cell_centers().reshape(-1, 2)
    dist = distance_to_centerline(centers, centerline)
    values = np.minimum(1.0, dist / centerline.half_width).reshape(height, width)

    logger.info(
        f"✅ 트랙 코스트맵 생성 완료: {width}x{height} 셀, {resolution} m/cell, "
        f"중심선 길이 {centerline.length:.2f} m"
    )
    return template.with_values(values)


# -------------------------------------------------------------------
# 트랙 형상 생성
# -------------------------------------------------------------------


def make_oval_centerline(
    straight_length: float = 18.0,
    radius: float = 3.8,
    half_width: float = 1.5,
    spacing: float = 0.25,
) -> Centerline:
    """
    반시계 방향 타원형(직선 + 반원) 중심선.

    0번 꼭짓점은 아래쪽 직선의 가운데 (0, -radius), 진행 방향 +x.
    """
    if not radius > 0:
        raise ValueError(f"radius 는 양수여야 합니다: {radius}")
    if straight_length < 0:
        raise ValueError(f"straight_length 는 0 이상이어야 합니다: {straight_length}")
    if not spacing > 0:
        raise ValueError(f"spacing 은 양수여야 합니다: {spacing}")

    half = straight_length / 2.0
    arc = math.pi * radius
    perimeter = 2.0 * straight_length + 2.0 * arc
    count = max(8, int(round(perimeter / spacing)))

    vertices = []
    for k in range(count):
        s = perimeter * k / count
        if s < half:
            x, y = s, -radius
        elif s < half + arc:
            theta = -math.pi / 2 + (s - half) / radius
            x, y = half + radius * math.cos(theta), radius * math.sin(theta)
        elif s < half + arc + straight_length:
            x, y = half - (s - half - arc), radius
        elif s < half + 2 * arc + straight_length:
            theta = math.pi / 2 + (s - half - arc - straight_length) / radius
            x, y = -half + radius * math.cos(theta), radius * math.sin(theta)
        else:
            x, y = -half + (s - half - 2 * arc - straight_length), -radius
        vertices.append((round(x, 6), round(y, 6)))
    return Centerline(vertices=vertices, closed=True, half_width=half_width)


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def check_self_intersection(points: np.ndarray, closed: bool) -> None:
    """
    인접하지 않은 두 선분이 교차하면 ValueError.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    segs = [(pts[i], pts[(i + 1) % n]) for i in range(n if closed else n - 1)]
    m = len(segs)
    for i in range(m):
        for j in range(i + 2, m):
            if closed and i == 0 and j == m - 1:
                continue
            if _segments_intersect(segs[i][0], segs[i][1], segs[j][0], segs[j][1]):
                raise ValueError(f"waypoint 경로가 자기 자신과 교차합니다 (선분 {i} 와 {j}).")


def load_waypoints_csv(path: Union[str, Path]) -> np.ndarray:
    """x,y 두 열의 CSV (헤더 행 허용) 로드"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"waypoint 파일을 찾을 수 없습니다: {path}")
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.reader(f):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if rows:
                    raise ValueError(f"waypoint CSV 형식 오류: {row}")
    return np.asarray(rows, dtype=float)


def centerline_from_waypoints(points: np.ndarray, closed: bool, half_width: float) -> Centerline:
    check_self_intersection(points, closed)
    return Centerline(vertices=[tuple(map(float, p)) for p in points], closed=closed, half_width=half_width)
