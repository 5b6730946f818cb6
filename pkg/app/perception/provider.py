"""
코스트맵 프로바이더 - CNN 대신 코스트맵 프레임을 공급

사용법:
    from app.perception.provider import get_provider_for_spec

    provider = get_provider_for_spec(image_plane_spec())
    frame = provider.provide(world_map, true_pose, now)   # 아직 없으면 None

프레임은 update_rate 틱 (n / rate) 마다 캡처되고 latency 가 지난 뒤 전달된다.
모든 비동기성은 시뮬레이션 시계로 모사되므로 실행은 결정적이다.
"""

from __future__ import annotations

import logging
import math
from typing import List, Optional

from app import config
from app.autolabel.crop import extract_topdown_crop
from app.costmap.grid import CostMapGrid, Pose2
from app.perception.corruption import apply_corruption, apply_fov_mask
from app.perception.frame import CostmapFrame
from app.schemas import CorruptionSpec, CropSpec, ProviderSpec
from app.utils import mix_seed

logger = logging.getLogger(__name__)


class OracleProvider:
    """월드 코스트맵에서 바로 크롭하는 정답 프로바이더"""

    def __init__(self, spec: ProviderSpec, crop: Optional[CropSpec] = None):
        self.spec = spec
        self.crop = crop or CropSpec()
        self._next_tick = 0
        self._pending: List[CostmapFrame] = []
        self._current: Optional[CostmapFrame] = None

    @property
    def label(self) -> str:
        return self.spec.label

    def reset(self):
        self._next_tick = 0
        self._pending = []
        self._current = None

    def capture(self, world_map: CostMapGrid, pose: Pose2, capture_time: float, tick: int) -> CostmapFrame:
        grid = extract_topdown_crop(world_map, pose, self.crop)
        return CostmapFrame(grid, pose, capture_time)

    def provide(self, world_map: CostMapGrid, pose: Pose2, now: float) -> Optional[CostmapFrame]:
        """
        now 시점에 전달 가능한 가장 최근 프레임 반환.

        호출 사이에 지나간 틱은 가장 최근 것 하나만 캡처한다.
        그 틱 시각이 now 보다 앞서면 pose 를 실제로 얻은 now 를 capture_time 으로 기록한다.

        Args:
            pose: 이번 호출 시점의 실제 차량 pose

        Returns:
            capture_time + latency <= now 인 최신 프레임. 아직 없으면 None (제어기는 제동).
        """
        rate, latency = self.spec.update_rate, self.spec.latency
        last_tick = math.floor(now * rate + config.TIME_EPS)
        if last_tick >= self._next_tick:
            capture_time = last_tick / rate
            if capture_time < now - config.TIME_EPS:
                capture_time = now
            self._pending.append(self.capture(world_map, pose, capture_time, last_tick))
            self._next_tick = last_tick + 1

        while self._pending and self._pending[0].capture_time + latency <= now + config.TIME_EPS:
            self._current = self._pending.pop(0)
        return self._current


class CorruptedProvider(OracleProvider):
    """정답 크롭에 FOV 마스크와 손상을 입히는 프로바이더"""

    def capture(self, world_map: CostMapGrid, pose: Pose2, capture_time: float, tick: int) -> CostmapFrame:
        frame = super().capture(world_map, pose, capture_time, tick)
        corruption = self.spec.corruption
        if corruption.fov_half_angle > 0:
            frame = apply_fov_mask(frame, corruption.fov_half_angle, self.spec.camera_offset)
        return apply_corruption(frame, corruption, seed=mix_seed(corruption.seed, tick))


def get_provider_for_spec(spec: ProviderSpec, crop: Optional[CropSpec] = None) -> OracleProvider:
    """ProviderSpec.kind 에 맞는 프로바이더 인스턴스 반환"""
    if spec.kind == "oracle":
        if not spec.corruption.is_identity() or spec.corruption.fov_half_angle > 0:
            logger.warning("⚠️ oracle 프로바이더는 corruption 설정을 무시합니다. kind='corrupted' 를 사용하세요.")
        return OracleProvider(spec, crop)
    if spec.kind == "corrupted":
        return CorruptedProvider(spec, crop)
    raise ValueError(f"알 수 없는 프로바이더 종류: {spec.kind}")


def top_down_spec(blur_sigma: float = 0.0, **overrides) -> ProviderSpec:
    """탑다운 경로 모사: 40 Hz / 0.025 s"""
    corruption = CorruptionSpec(blur_sigma=blur_sigma)
    kind = "oracle" if corruption.is_identity() else "corrupted"
    return ProviderSpec(kind=kind, label="TD", update_rate=40.0, latency=0.025, corruption=corruption, **overrides)


def image_plane_spec(fov_half_angle: float = 0.55, **overrides) -> ProviderSpec:
    """이미지 평면 경로 모사: 10 Hz / 0.1 s + 전방 시야 제한"""
    return ProviderSpec(
        kind="corrupted",
        label="IP",
        update_rate=10.0,
        latency=0.1,
        corruption=CorruptionSpec(fov_half_angle=fov_half_angle),
        **overrides,
    )
