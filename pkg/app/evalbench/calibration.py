"""
손상 강도 보정

고정 pose 집합(중심선 위 등간격 500개)에서 손상된 크롭의 평균 점수가 목표 점수가 되도록
손상 계열(noise / blur / dropout)의 강도 하나를 이분 탐색한다.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from app import config
from app.autolabel.crop import extract_topdown_crop
from app.costmap.grid import CostMapGrid, Pose2
from app.costmap.track import Centerline
from app.evalbench.scoring import score, track_mask
from app.perception.corruption import apply_corruption
from app.perception.frame import CostmapFrame
from app.perception.provider import top_down_spec
from app.schemas import CorruptionSpec, CropSpec, ProviderSpec
from app.utils import mix_seed

logger = logging.getLogger(__name__)

DEFAULT_POSE_COUNT = 500
DROPOUT_BLOCK = 10  # cells

# 계열별 (강도 -> CorruptionSpec), 탐색 상한
FAMILIES: Dict[str, Tuple[Callable[[float, int], CorruptionSpec], float]] = {
    "noise": (lambda m, seed: CorruptionSpec(noise_sigma=m, seed=seed), 2.0),
    "blur": (lambda m, seed: CorruptionSpec(blur_sigma=m, seed=seed), 40.0),
    "dropout": (
        lambda m, seed: CorruptionSpec(dropout_block=DROPOUT_BLOCK, dropout_probability=min(1.0, m), seed=seed),
        1.0,
    ),
}


def family_spec(family: str, magnitude: float, seed: int = 0) -> CorruptionSpec:
    if family not in FAMILIES:
        raise ValueError(f"알 수 없는 손상 계열: {family} (가능: {', '.join(FAMILIES)})")
    return FAMILIES[family][0](magnitude, seed)


@dataclass
class PoseSet:
    """보정용 고정 pose 집합과 pose 별 정답 크롭/트랙 마스크"""

    poses: List[Pose2]
    frames: List[CostmapFrame]
    masks: List[np.ndarray]

    @classmethod
    def build(
        cls,
        centerline: Centerline,
        world_map: CostMapGrid,
        count: int = DEFAULT_POSE_COUNT,
        crop: Optional[CropSpec] = None,
        band_cells: int = config.EDGE_BAND_CELLS,
    ) -> "PoseSet":
        if count < 1:
            raise ValueError(f"pose 개수는 1 이상이어야 합니다: {count}")
        crop = crop or CropSpec()
        poses = [centerline.pose_at(k / count) for k in range(count)]
        frames = [CostmapFrame(extract_topdown_crop(world_map, p, crop), p, 0.0) for p in poses]
        masks = [track_mask(f.grid.values, band_cells) for f in frames]
        return cls(poses, frames, masks)

    def __len__(self) -> int:
        return len(self.poses)

    def mean_score(self, spec: CorruptionSpec) -> float:
        scores = []
        for k, (frame, mask) in enumerate(zip(self.frames, self.masks)):
            corrupted = apply_corruption(frame, spec, seed=mix_seed(spec.seed, k))
            scores.append(score(corrupted.effective_grid.values, frame.grid.values, mask))
        return float(np.mean(scores))


def scan_family(pose_set: PoseSet, family: str, magnitudes: Sequence[float], seed: int = 0) -> List[Tuple[float, float]]:
    """강도별 평균 점수 [(magnitude, score), ...]"""
    return [(float(m), pose_set.mean_score(family_spec(family, float(m), seed))) for m in magnitudes]


def calibrate_corruption(
    target_score: float,
    family: str,
    pose_set: PoseSet,
    tolerance: float = 0.01,
    max_iterations: int = 40,
    seed: int = 0,
) -> CorruptionSpec:
    """
    평균 점수가 target_score ± tolerance 가 되는 CorruptionSpec 반환.

    Raises:
        ValueError: target 이 (0, 1] 밖이거나 계열 범위 안에서 도달할 수 없는 경우 (도달 가능 구간 포함)
    """
    if not 0 < target_score <= 1:
        raise ValueError(f"target_score 는 (0, 1] 범위여야 합니다: {target_score}")
    if family not in FAMILIES:
        raise ValueError(f"알 수 없는 손상 계열: {family} (가능: {', '.join(FAMILIES)})")
    make, upper = FAMILIES[family]

    lo, hi = 0.0, upper
    s_lo = pose_set.mean_score(make(lo, seed))
    if abs(s_lo - target_score) <= tolerance:
        logger.info(f"✅ 손상 없이 목표 점수 달성 ({s_lo:.4f})")
        return make(lo, seed)
    s_hi = pose_set.mean_score(make(hi, seed))
    if s_lo < target_score - tolerance or s_hi > target_score + tolerance:
        raise ValueError(
            f"'{family}' 계열로는 목표 점수 {target_score} 에 도달할 수 없습니다 "
            f"(도달 가능 범위: {s_hi:.4f} ~ {s_lo:.4f})"
        )

    with tqdm(total=max_iterations, desc=f"calibrate {family}", unit="iter", disable=None) as bar:
        for _ in range(max_iterations):
            mid = 0.5 * (lo + hi)
            spec = make(mid, seed)
            s_mid = pose_set.mean_score(spec)
            bar.update(1)
            if abs(s_mid - target_score) <= tolerance:
                logger.info(f"✅ 보정 완료: {family}={mid:.4f} → 평균 점수 {s_mid:.4f} (목표 {target_score})")
                return spec
            if s_mid > target_score:
                lo = mid
            else:
                hi = mid

    raise ValueError(
        f"'{family}' 계열 이분 탐색이 {max_iterations}회 안에 수렴하지 않았습니다 (마지막 구간 {lo:.4f} ~ {hi:.4f})"
    )


def graded_provider_spec(
    target_score: float,
    pose_set: PoseSet,
    family: str = "noise",
    base: Optional[ProviderSpec] = None,
    seed: int = 0,
) -> ProviderSpec:
    """목표 점수 등급의 손상 프로바이더 (기본: 40 Hz 탑다운 타이밍)"""
    base = base or top_down_spec()
    corruption = calibrate_corruption(target_score, family, pose_set, seed=seed)
    corruption = corruption.model_copy(update={"fov_half_angle": base.corruption.fov_half_angle})
    return base.model_copy(update={"kind": "corrupted", "label": f"{base.label}-{target_score:.2f}", "corruption": corruption})
