# app/autolabel/homography.py
"""
카메라 모델과 지면(z = 0) 호모그래피

H = [K | 0] · T(camera <- car) · T(car <- world)   (3x4)
H_hat = H 의 1, 2, 4 열                             (3x3)
p_im ~ H_hat · (x, y, 1)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from app.costmap.grid import Pose2
from app.schemas import CameraConfig

ORTHONORMAL_TOL = 1e-9


@dataclass(frozen=True)
class Pose3:
    """3D 강체 변환. (rotation, translation) 은 child -> parent 좌표 변환."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        trans = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(rot)) or not np.all(np.isfinite(trans)):
            raise ValueError("Pose3 에 유한하지 않은 값이 있습니다.")
        if np.max(np.abs(rot @ rot.T - np.eye(3))) > ORTHONORMAL_TOL or abs(np.linalg.det(rot) - 1.0) > ORTHONORMAL_TOL:
            raise ValueError("rotation 은 det = +1 인 정규직교 행렬이어야 합니다.")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def inverse(self) -> "Pose3":
        rot_t = self.rotation.T
        return Pose3(rot_t, -rot_t @ self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    @classmethod
    def from_pose2(cls, pose: Pose2, z: float = 0.0) -> "Pose3":
        c, s = math.cos(pose.yaw), math.sin(pose.yaw)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return cls(rot, np.array([pose.x, pose.y, z]))

    def to_pose2(self) -> Pose2:
        return Pose2(float(self.translation[0]), float(self.translation[1]), math.atan2(self.rotation[1, 0], self.rotation[0, 0]))

    def to_dict(self) -> dict:
        return {"rotation": self.rotation.tolist(), "translation": self.translation.tolist()}


def pose3_from_quaternion(x: float, y: float, z: float, qw: float, qx: float, qy: float, qz: float) -> Pose3:
    """위치 + 단위 쿼터니언 (정규화 후 사용)"""
    q = np.array([qw, qx, qy, qz], dtype=float)
    norm = np.linalg.norm(q)
    if not norm > 0:
        raise ValueError("쿼터니언 크기가 0 입니다.")
    w, a, b, c = q / norm
    rot = np.array(
        [
            [1 - 2 * (b * b + c * c), 2 * (a * b - c * w), 2 * (a * c + b * w)],
            [2 * (a * b + c * w), 1 - 2 * (a * a + c * c), 2 * (b * c - a * w)],
            [2 * (a * c - b * w), 2 * (b * c + a * w), 1 - 2 * (a * a + b * b)],
        ]
    )
    return Pose3(rot, np.array([x, y, z], dtype=float))


def _camera_from_car(axes_in_car: np.ndarray, position_in_car: np.ndarray) -> Pose3:
    # axes_in_car 의 열 = 카메라 x(오른쪽), y(아래), z(광축) 를 차량 좌표로 표현
    rot = axes_in_car.T
    return Pose3(rot, -rot @ position_in_car)


def forward_camera(mount_height: float, pitch: float, forward_offset: float = 0.0) -> Pose3:
    """전방을 보고 pitch 만큼 아래로 기울어진 카메라의 camera <- car 변환"""
    cp, sp = math.cos(pitch), math.sin(pitch)
    cam_x = np.array([0.0, -1.0, 0.0])
    cam_y = np.array([-sp, 0.0, -cp])
    cam_z = np.array([cp, 0.0, -sp])
    return _camera_from_car(np.column_stack([cam_x, cam_y, cam_z]), np.array([forward_offset, 0.0, mount_height]))


def downward_camera(mount_height: float) -> Pose3:
    """수직 아래를 보는 카메라 (광축 = 차량 -z)"""
    cam_x = np.array([0.0, -1.0, 0.0])
    cam_y = np.array([-1.0, 0.0, 0.0])
    cam_z = np.array([0.0, 0.0, -1.0])
    return _camera_from_car(np.column_stack([cam_x, cam_y, cam_z]), np.array([0.0, 0.0, mount_height]))


@dataclass(frozen=True)
class CameraModel:
    """핀홀 카메라: 내부 파라미터 + camera <- car 외부 파라미터"""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    camera_from_car: Pose3 = field(default_factory=Pose3)

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"fx, fy 는 양수여야 합니다: ({self.fx}, {self.fy})")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError(
                f"주점 ({self.cx}, {self.cy}) 이 이미지 ({self.width}x{self.height}) 범위를 벗어났습니다."
            )

    def intrinsics(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @classmethod
    def from_config(cls, cfg: CameraConfig) -> "CameraModel":
        return cls(
            fx=cfg.fx,
            fy=cfg.fy,
            cx=cfg.cx,
            cy=cfg.cy,
            width=cfg.width,
            height=cfg.height,
            camera_from_car=forward_camera(cfg.mount_height, cfg.pitch, cfg.forward_offset),
        )


@dataclass(frozen=True)
class GroundHomography:
    """3x4 투영 H 와 지면용 3x3 축소 투영 H_hat (+ 유효성 판정용 이미지 크기)"""

    H: np.ndarray
    H_hat: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        if not np.array_equal(self.H_hat, self.H[:, [0, 1, 3]]):
            raise ValueError("H_hat 은 H 의 1, 2, 4 열이어야 합니다.")

    @classmethod
    def from_projection(cls, H: np.ndarray, width: int, height: int) -> "GroundHomography":
        H = np.asarray(H, dtype=float).reshape(3, 4)
        return cls(H=H, H_hat=H[:, [0, 1, 3]].copy(), width=width, height=height)

    def inverse(self) -> np.ndarray:
        """
        Raises:
            ValueError: H_hat 이 특이 행렬인 경우
        """
        try:
            inv = np.linalg.inv(self.H_hat)
        except np.linalg.LinAlgError:
            raise ValueError("H_hat 이 특이 행렬이라 역투영할 수 없습니다.")
        if not np.all(np.isfinite(inv)) or np.linalg.cond(self.H_hat) > 1e15:
            raise ValueError("H_hat 이 특이 행렬이라 역투영할 수 없습니다.")
        return inv


def compose_homography(camera: CameraModel, world_from_car: Pose3) -> GroundHomography:
    """H = [K|0] · T(camera <- car) · T(car <- world), H_hat = H[:, (1, 2, 4)]"""
    k_pad = np.hstack([camera.intrinsics(), np.zeros((3, 1))])
    car_from_world = world_from_car.inverse()
    H = k_pad @ camera.camera_from_car.matrix() @ car_from_world.matrix()
    return GroundHomography.from_projection(H, camera.width, camera.height)


def project_ground_points(h: GroundHomography, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    지면 점 (N, 2) 을 픽셀 (N, 2) 로 투영.

    Returns:
        (pixels, valid). 카메라 뒤(w <= 0) 또는 이미지 밖이면 valid = False
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    homog = np.column_stack([pts, np.ones(len(pts))]) @ h.H_hat.T
    w = homog[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        uv = homog[:, :2] / w[:, None]
    in_front = w > 0
    in_image = (uv[:, 0] >= 0) & (uv[:, 0] < h.width) & (uv[:, 1] >= 0) & (uv[:, 1] < h.height)
    return uv, in_front & in_image


def project_ground_point(h: GroundHomography, p_world: Tuple[float, float]) -> Tuple[Tuple[float, float], bool]:
    uv, valid = project_ground_points(h, np.asarray(p_world, dtype=float)[None, :])
    return (float(uv[0, 0]), float(uv[0, 1])), bool(valid[0])


def back_project_pixels(h: GroundHomography, pixels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    픽셀 (N, 2) 을 지면으로 역투영.

    Returns:
        (ground_points, valid). 광선이 지면과 카메라 앞쪽에서 만나지 않으면(지평선 위) valid = False
    """
    inv = h.inverse()
    px = np.asarray(pixels, dtype=float).reshape(-1, 2)
    g = np.column_stack([px, np.ones(len(px))]) @ inv.T
    # 정방향 투영의 w = 1 / g_z 이므로 g_z > 0 이어야 카메라 앞
    valid = g[:, 2] > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ground = g[:, :2] / g[:, 2:3]
    return ground, valid
