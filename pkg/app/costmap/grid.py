"""
코스트맵 그리드 표현, 쌍선형 보간 조회, 2D 강체 변환, 파일 입출력

파일 포맷: JSON 헤더 (width, height, resolution, origin, frame, payload)
         + 같은 디렉토리의 little-endian float32 row-major payload (.f32)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional, Tuple, Union

import numpy as np
from scipy import ndimage

from app import config
from app.utils import read_json, write_json

logger = logging.getLogger(__name__)

Frame = Literal["world", "body", "image"]
Direction = Literal["world_to_body", "body_to_world"]


@dataclass(frozen=True)
class Pose2:
    """2D 자세 (위치 + yaw)"""

    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "yaw": self.yaw}

    @classmethod
    def from_dict(cls, data: dict) -> "Pose2":
        return cls(float(data["x"]), float(data["y"]), float(data["yaw"]))


def transform_points(pose: Pose2, points: np.ndarray, direction: Direction) -> np.ndarray:
    """
    (..., 2) 점 배열에 강체 변환 적용.

    world_to_body: pose 좌표계로 표현, body_to_world: 그 역변환
    """
    pts = np.asarray(points, dtype=float)
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    if direction == "world_to_body":
        dx = pts[..., 0] - pose.x
        dy = pts[..., 1] - pose.y
        return np.stack([c * dx + s * dy, -s * dx + c * dy], axis=-1)
    if direction == "body_to_world":
        bx = pts[..., 0]
        by = pts[..., 1]
        return np.stack([pose.x + c * bx - s * by, pose.y + s * bx + c * by], axis=-1)
    raise ValueError(f"알 수 없는 변환 방향: {direction}")


def transform_point(pose: Pose2, point: Tuple[float, float], direction: Direction) -> Tuple[float, float]:
    out = transform_points(pose, np.asarray(point, dtype=float), direction)
    return float(out[0]), float(out[1])


@dataclass(frozen=True)
class CostMapGrid:
    """
    2D 스칼라 코스트 필드.

    셀 (row j, col i) 의 중심은 origin 좌표계에서 ((i + 0.5) * res, (j + 0.5) * res).
    values 는 (height, width) 배열이며 row-major 로 저장된다.
    """

    width: int
    height: int
    resolution: float
    origin: Pose2
    frame: Frame
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.height, self.width):
            raise ValueError(
                f"values shape {values.shape} 가 (height, width)=({self.height}, {self.width}) 와 다릅니다."
            )
        if not self.resolution > 0:
            raise ValueError(f"resolution 은 양수여야 합니다: {self.resolution}")
        if self.frame in ("world", "body") and values.size and (
            not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0
        ):
            raise ValueError("코스트맵 값은 [0, 1] 범위여야 합니다.")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray) -> "CostMapGrid":
        return CostMapGrid(self.width, self.height, self.resolution, self.origin, self.frame, values)

    def cell_centers(self) -> np.ndarray:
        """(height, width, 2) 셀 중심 좌표 (grid 가 속한 좌표계 기준)"""
        cols = (np.arange(self.width) + 0.5) * self.resolution
        rows = (np.arange(self.height) + 0.5) * self.resolution
        local = np.stack(np.meshgrid(cols, rows, indexing="xy"), axis=-1)
        return transform_points(self.origin, local, "body_to_world")


def lookup_costs(
    grid: CostMapGrid,
    x: np.ndarray,
    y: np.ndarray,
    valid: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    쌍선형 보간 조회 (벡터화).

    그리드 밖 좌표, 유한하지 않은 좌표는 OUT_OF_MAP_COST.
    valid 가 주어지면 False 셀은 OUT_OF_MAP_COST 값으로 취급한다.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    values = grid.values if valid is None else np.where(valid, grid.values, config.OUT_OF_MAP_COST)

    c, s = math.cos(grid.origin.yaw), math.sin(grid.origin.yaw)
    dx = x - grid.origin.x
    dy = y - grid.origin.y
    lx = c * dx + s * dy
    ly = -s * dx + c * dy

    extent_x = grid.width * grid.resolution
    extent_y = grid.height * grid.resolution
    with np.errstate(invalid="ignore"):
        inside = (lx >= 0.0) & (lx <= extent_x) & (ly >= 0.0) & (ly <= extent_y)

    u = np.clip(np.nan_to_num(lx / grid.resolution - 0.5), 0.0, grid.width - 1)
    v = np.clip(np.nan_to_num(ly / grid.resolution - 0.5), 0.0, grid.height - 1)
    i0 = np.minimum(np.floor(u).astype(np.intp), max(grid.width - 2, 0))
    j0 = np.minimum(np.floor(v).astype(np.intp), max(grid.height - 2, 0))
    i1 = np.minimum(i0 + 1, grid.width - 1)
    j1 = np.minimum(j0 + 1, grid.height - 1)
    fu = u - i0
    fv = v - j0

    top = (1.0 - fu) * values[j0, i0] + fu * values[j0, i1]
    bottom = (1.0 - fu) * values[j1, i0] + fu * values[j1, i1]
    interp = (1.0 - fv) * top + fv * bottom
    return np.where(inside, interp, config.OUT_OF_MAP_COST)


def lookup_cost(grid: CostMapGrid, x: float, y: float, valid: Optional[np.ndarray] = None) -> float:
    """단일 좌표 조회. 좌표는 grid.frame 기준."""
    return float(lookup_costs(grid, np.asarray(x), np.asarray(y), valid))


def edge_band_mask(values: np.ndarray, band_cells: int = config.EDGE_BAND_CELLS) -> np.ndarray:
    """
    트랙 경계(비용 < 1 과 = 1 의 경계)로부터 band_cells 이내의 셀 마스크.
    트랙이 전혀 없거나 전부 트랙이면 빈 마스크.
    """
    track = np.asarray(values) < 1.0
    if band_cells <= 0 or not track.any() or track.all():
        return np.zeros(track.shape, dtype=bool)
    dist_to_track = ndimage.distance_transform_edt(~track)
    dist_to_off = ndimage.distance_transform_edt(track)
    return (track & (dist_to_off <= band_cells)) | (~track & (dist_to_track <= band_cells))


# -------------------------------------------------------------------
# 파일 입출력
# -------------------------------------------------------------------


def save_grid(grid: CostMapGrid, path: Union[str, Path]) -> Path:
    """헤더 JSON + 같은 이름의 .f32 payload 저장"""
    path = Path(path)
    payload = path.with_suffix(".f32")
    path.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(grid.values, dtype="<f4").tofile(payload)
    write_json(
        path,
        {
            "width": grid.width,
            "height": grid.height,
            "resolution": grid.resolution,
            "origin": grid.origin.to_dict(),
            "frame": grid.frame,
            "payload": payload.name,
            "dtype": "<f4",
        },
    )
    return path


def load_grid(path: Union[str, Path]) -> CostMapGrid:
    path = Path(path)
    header = read_json(path)
    payload = path.parent / header.get("payload", path.with_suffix(".f32").name)
    if not payload.exists():
        raise FileNotFoundError(f"코스트맵 payload 파일이 없습니다: {payload}")
    width, height = int(header["width"]), int(header["height"])
    values = np.fromfile(payload, dtype="<f4").astype(float)
    if values.size != width * height:
        raise ValueError(f"payload 크기 {values.size} 가 width*height={width * height} 와 다릅니다: {payload}")
    return CostMapGrid(
        width=width,
        height=height,
        resolution=float(header["resolution"]),
        origin=Pose2.from_dict(header["origin"]),
        frame=header["frame"],
        values=values.reshape(height, width),
    )
