"""Pydantic 스키마 정의 파일입니다.
차량 파라미터, MPPI 파라미터, 인지(프로바이더) 설정, 에피소드/데이터셋/어블레이션 설정 등
JSON 으로 주고받는 모든 설정 구조를 정의합니다."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type, Union, get_args, get_origin

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app import config
from app.utils import read_json

# ==============================================================================
# 차량 / 제어기 파라미터
# ==============================================================================


class VehicleParams(BaseModel):
    """
    동적 자전거 모델 파라미터 (1:5 스케일 차량 기준 기본값은 vehicle_default.json).

    Attributes:
        front_axle_distance / rear_axle_distance: 무게중심에서 앞/뒤 차축까지 거리 (합 = wheelbase)
        roll_gain: 횡가속도 1 m/s^2 당 롤 각 (rad)
        friction_coefficient: 타이어 횡력 포화 한계 μ
    """

    model_config = ConfigDict(extra="forbid")

    mass: float = Field(22.0, gt=0)
    wheelbase: float = Field(0.57, gt=0)
    front_axle_distance: float = Field(0.30, gt=0)
    rear_axle_distance: float = Field(0.27, gt=0)
    yaw_inertia: float = Field(1.0, gt=0)
    cornering_stiffness_front: float = Field(1000.0, gt=0)
    cornering_stiffness_rear: float = Field(1100.0, gt=0)
    max_steering_angle: float = Field(0.45, gt=0)
    drive_force_gain: float = Field(110.0, gt=0)
    rolling_drag: float = Field(0.5, ge=0)
    aero_drag: float = Field(0.03, ge=0)
    roll_gain: float = Field(0.01, gt=0)
    max_speed: float = Field(26.0, gt=0)
    friction_coefficient: float = Field(0.65, gt=0)

    @model_validator(mode="after")
    def _check_axles(self) -> "VehicleParams":
        if abs(self.front_axle_distance + self.rear_axle_distance - self.wheelbase) > 1e-9:
            raise ValueError(
                f"front_axle_distance + rear_axle_distance ({self.front_axle_distance} + "
                f"{self.rear_axle_distance}) 는 wheelbase ({self.wheelbase}) 와 같아야 합니다."
            )
        return self


class MppiParams(BaseModel):
    """
    MPPI 파라미터.

    weights 는 running cost 의 (트랙 비용, 속도 오차, 충돌 지시자, 슬립) 계수.
    lambda 는 JSON 키 이름이 예약어라 필드명은 lambda_ 로 둔다.
    """

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    num_samples: int = Field(1200, ge=1)
    horizon: int = Field(60, ge=1)
    dt: float = Field(0.025, gt=0)
    sigma: List[List[float]] = Field(default_factory=lambda: [[0.09, 0.0], [0.0, 0.04]])
    lambda_: float = Field(0.15, gt=0, alias="lambda")
    gamma: float = Field(0.1, ge=0)
    weights: Tuple[float, float, float, float] = (100.0, 4.25, 10000.0, 1.75)
    desired_speed: float = 5.0
    track_cost_threshold: float = 0.9
    roll_threshold: float = 0.35
    yaw_rate_threshold: float = 6.0
    discount: float = Field(0.9, ge=0)
    latch_indicator: bool = True
    workers: int = Field(1, ge=1)

    @field_validator("sigma")
    @classmethod
    def _check_sigma(cls, value: List[List[float]]) -> List[List[float]]:
        arr = np.asarray(value, dtype=float)
        if arr.shape != (2, 2):
            raise ValueError(f"sigma 는 2x2 행렬이어야 합니다. (입력 shape: {arr.shape})")
        if not np.all(np.isfinite(arr)) or not np.allclose(arr, arr.T, rtol=0.0, atol=1e-15):
            raise ValueError("sigma 는 유한한 대칭 행렬이어야 합니다.")
        try:
            np.linalg.cholesky(arr)
        except np.linalg.LinAlgError:
            raise ValueError("sigma 는 양의 정부호(positive definite) 행렬이어야 합니다.")
        return value

    @property
    def sigma_array(self) -> np.ndarray:
        return np.asarray(self.sigma, dtype=float)


# ==============================================================================
# 인지(코스트맵 프로바이더) 설정
# ==============================================================================


class CorruptionSpec(BaseModel):
    """코스트맵 손상 설정. 모든 값이 0 이면 손상 없음."""

    model_config = ConfigDict(extra="forbid")

    blur_sigma: float = Field(0.0, ge=0)  # cells
    noise_sigma: float = Field(0.0, ge=0)  # cost units
    dropout_block: int = Field(0, ge=0)  # cells
    dropout_probability: float = Field(0.0, ge=0, le=1)
    fov_half_angle: float = Field(0.0, ge=0, le=math.pi / 2)  # 0 = 비활성
    seed: int = 0

    def is_identity(self) -> bool:
        return (
            self.blur_sigma == 0
            and self.noise_sigma == 0
            and (self.dropout_block == 0 or self.dropout_probability == 0)
        )


class ProviderSpec(BaseModel):
    """코스트맵 프로바이더 설정 (갱신 주기, 지연, 손상)"""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["oracle", "corrupted"] = "oracle"
    label: str = "TD"
    update_rate: float = Field(40.0, gt=0)  # Hz
    latency: float = Field(0.0, ge=0)  # s
    camera_offset: float = 0.3  # m, 차량 원점 기준 카메라(FOV 꼭짓점) 전방 위치
    corruption: CorruptionSpec = Field(default_factory=CorruptionSpec)


class CropSpec(BaseModel):
    """차량 좌표계 탑다운 크롭 형상 (그리드 x축 = 차량 전방, y축 = 차량 좌측)"""

    model_config = ConfigDict(extra="forbid")

    longitudinal_cells: int = Field(config.CROP_LONGITUDINAL_CELLS, ge=1)
    lateral_cells: int = Field(config.CROP_LATERAL_CELLS, ge=1)
    resolution: float = Field(config.DEFAULT_RESOLUTION, gt=0)
    x_min: float = config.CROP_X_MIN
    y_min: float = config.CROP_Y_MIN


class CameraConfig(BaseModel):
    """핀홀 카메라 내부 파라미터 + 차량 장착 위치"""

    model_config = ConfigDict(extra="forbid")

    fx: float = Field(400.0, gt=0)
    fy: float = Field(400.0, gt=0)
    cx: float = 320.0
    cy: float = 256.0
    width: int = Field(640, ge=1)
    height: int = Field(512, ge=1)
    mount_height: float = Field(0.6, gt=0)  # m
    pitch: float = 0.25  # rad, 아래 방향이 양수
    forward_offset: float = 0.3  # m


# ==============================================================================
# 시뮬레이션 / 에피소드 설정
# ==============================================================================


class FailureCriteria(BaseModel):
    """실패 판정 기준 (트랙 이탈, 정지)"""

    model_config = ConfigDict(extra="forbid")

    off_track_cost: float = config.OFF_TRACK_COST
    off_track_duration: float = Field(config.OFF_TRACK_DURATION, gt=0)
    stall_speed: float = Field(config.STALL_SPEED, ge=0)
    stall_duration: float = Field(config.STALL_DURATION, gt=0)


class EpisodeConfig(BaseModel):
    """
    폐루프 에피소드 설정.

    track / vehicle / mppi / plant 는 파일 경로 (설정 파일 위치 기준 상대 경로 허용).
    """

    model_config = ConfigDict(extra="forbid")

    track: str = "tracks/oval.json"
    vehicle: str = "vehicle_default.json"
    mppi: str = "mppi_default.json"
    plant: Optional[str] = None
    provider: ProviderSpec = Field(default_factory=ProviderSpec)
    crop: CropSpec = Field(default_factory=CropSpec)
    failure: FailureCriteria = Field(default_factory=FailureCriteria)
    target_speed: float = Field(5.0, gt=0)
    direction: Literal["ccw", "cw"] = "ccw"
    laps: int = Field(10, ge=1)
    seed: int = 0
    time_limit: float = Field(200.0, gt=0)
    initial_speed: float = Field(2.0, ge=0)
    world_resolution: float = Field(config.DEFAULT_RESOLUTION, gt=0)
    world_margin: float = Field(config.DEFAULT_TRACK_MARGIN, ge=0)

    def resolve_paths(self, base_dir: Union[str, Path]) -> "EpisodeConfig":
        """상대 경로를 base_dir 기준 절대 경로로 변환한 사본 반환"""
        return self.model_copy(
            update={
                name: _resolve(getattr(self, name), base_dir)
                for name in ("track", "vehicle", "mppi", "plant")
                if getattr(self, name) is not None
            }
        )


class DatasetConfig(BaseModel):
    """오토라벨링 데이터셋 생성 설정"""

    model_config = ConfigDict(extra="forbid")

    track: str = "tracks/oval.json"
    poses: str = "poses_oval.csv"
    camera: CameraConfig = Field(default_factory=CameraConfig)
    crop: CropSpec = Field(default_factory=CropSpec)
    world_resolution: float = Field(config.DEFAULT_RESOLUTION, gt=0)
    world_margin: float = Field(config.DEFAULT_TRACK_MARGIN, ge=0)
    edge_band_cells: int = Field(config.EDGE_BAND_CELLS, ge=0)
    workers: int = Field(1, ge=1)

    def resolve_paths(self, base_dir: Union[str, Path]) -> "DatasetConfig":
        return self.model_copy(
            update={"track": _resolve(self.track, base_dir), "poses": _resolve(self.poses, base_dir)}
        )


class AblationConfig(BaseModel):
    """블록 어블레이션 설정. 입력 그리드는 트랙 위 pose 에서의 탑다운 크롭."""

    model_config = ConfigDict(extra="forbid")

    track: str = "tracks/oval.json"
    pose_fraction: float = Field(0.3, ge=0, le=1)  # 중심선 둘레 비율로 pose 위치 지정
    predictor: Literal["identity", "blur"] = "identity"
    predictor_blur_sigma: float = Field(1.5, ge=0)
    block_sizes: List[int] = Field(default_factory=lambda: [6, 10, 20])
    stride: Optional[int] = None
    fill_value: Optional[float] = None
    crop: CropSpec = Field(default_factory=CropSpec)
    world_resolution: float = Field(config.DEFAULT_RESOLUTION, gt=0)
    world_margin: float = Field(config.DEFAULT_TRACK_MARGIN, ge=0)
    edge_band_cells: int = Field(config.EDGE_BAND_CELLS, ge=0)
    workers: int = Field(1, ge=1)

    def resolve_paths(self, base_dir: Union[str, Path]) -> "AblationConfig":
        return self.model_copy(update={"track": _resolve(self.track, base_dir)})


def _resolve(path: str, base_dir: Union[str, Path]) -> str:
    p = Path(path)
    if p.is_absolute():
        return str(p)
    return str((Path(base_dir) / p).resolve())


# ==============================================================================
# 설정 파일 로드 + dotted override
# ==============================================================================


def _model_of(annotation: Any) -> Optional[Type[BaseModel]]:
    """필드 annotation 에서 BaseModel 서브클래스 추출 (Optional[...] 포함)"""
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    if get_origin(annotation) is Union:
        for arg in get_args(annotation):
            found = _model_of(arg)
            if found is not None:
                return found
    return None


def valid_keys(model_cls: Type[BaseModel]) -> List[str]:
    """모델이 허용하는 키 목록 (alias 우선)"""
    return sorted(field.alias or name for name, field in model_cls.model_fields.items())


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: Dict[str, Any], overrides: List[str], model_cls: Type[BaseModel]) -> Dict[str, Any]:
    """
    "a.b=value" 형태의 override 목록을 raw dict 에 적용한다.

    Raises:
        ValueError: 형식이 잘못되었거나 존재하지 않는 키인 경우 (유효 키 목록 포함)
    """
    result = json.loads(json.dumps(raw))
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override 형식은 key=value 여야 합니다: '{item}'")
        dotted, text = item.split("=", 1)
        keys = [k for k in dotted.strip().split(".") if k]
        if not keys:
            raise ValueError(f"override 키가 비어 있습니다: '{item}'")

        cursor = result
        cls: Optional[Type[BaseModel]] = model_cls
        for depth, key in enumerate(keys):
            allowed = valid_keys(cls) if cls is not None else None
            if allowed is not None and key not in allowed:
                raise ValueError(
                    f"알 수 없는 설정 키 '{'.'.join(keys[: depth + 1])}'. 유효한 키: {', '.join(allowed)}"
                )
            if depth == len(keys) - 1:
                cursor[key] = _parse_value(text)
                break
            field = next(
                (f for n, f in cls.model_fields.items() if (f.alias or n) == key), None
            ) if cls is not None else None
            cls = _model_of(field.annotation) if field is not None else None
            if cls is None:
                raise ValueError(f"'{'.'.join(keys[: depth + 1])}' 는 하위 키를 가질 수 없습니다.")
            cursor = cursor.setdefault(key, {})
            if not isinstance(cursor, dict):
                raise ValueError(f"'{'.'.join(keys[: depth + 1])}' 값이 객체가 아닙니다.")
    return result


def load_model(model_cls: Type[BaseModel], path: Union[str, Path], overrides: Optional[List[str]] = None):
    """JSON 설정 파일을 읽어 override 적용 후 검증된 모델 반환"""
    raw = read_json(path)
    if not isinstance(raw, dict):
        raise ValueError(f"설정 파일 최상위는 JSON 객체여야 합니다: {path}")
    if overrides:
        raw = apply_overrides(raw, overrides, model_cls)
    return model_cls.model_validate(raw)
