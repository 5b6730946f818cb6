"""
코스트맵 손상 (CNN 예측 오류 모사)

순서: 가우시안 블러 → 가산 가우시안 노이즈 → 블록 드롭아웃, 마지막에 [0, 1] 재클램프.
유효성은 줄어들기만 하고 늘어나지 않는다.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.ndimage import gaussian_filter

from app.perception.frame import CostmapFrame
from app.schemas import CorruptionSpec

BLUR_TRUNCATE = 3.0  # sigma 배수


def masked_gaussian_blur(values: np.ndarray, sigma: float, valid: Optional[np.ndarray] = None) -> np.ndarray:
    """
    유효 셀만 커널에 포함하는 정규화 가우시안 블러 (3 sigma 에서 절단).

    유효 이웃이 없는 셀은 원래 값을 유지한다.
    """
    values = np.asarray(values, dtype=float)
    if sigma <= 0:
        return values.copy()
    weight = np.ones(values.shape) if valid is None else np.asarray(valid, dtype=float)
    num = gaussian_filter(values * weight, sigma, mode="nearest", truncate=BLUR_TRUNCATE)
    den = gaussian_filter(weight, sigma, mode="nearest", truncate=BLUR_TRUNCATE)
    out = values.copy()
    ok = den > 1e-12
    out[ok] = num[ok] / den[ok]
    if valid is not None:
        out = np.where(valid, out, values)
    return out


def block_dropout_mask(shape, block: int, probability: float, rng: np.random.Generator) -> np.ndarray:
    """그리드에 정렬된 block x block 블록 단위로 True(드롭) 마스크 생성"""
    rows, cols = shape
    n_r, n_c = math.ceil(rows / block), math.ceil(cols / block)
    drop = rng.random((n_r, n_c)) < probability
    return np.repeat(np.repeat(drop, block, axis=0), block, axis=1)[:rows, :cols]


def apply_fov_mask(frame: CostmapFrame, half_angle: float, camera_offset: float = 0.0) -> CostmapFrame:
    """
    전방 시야 원뿔 밖 셀을 무효 처리. 원뿔 꼭짓점 = 차량 x축 위 camera_offset.

    Raises:
        ValueError: half_angle 이 (0, pi/2] 밖인 경우
    """
    if not 0 < half_angle <= math.pi / 2:
        raise ValueError(f"half_angle 은 (0, pi/2] 범위여야 합니다: {half_angle}")
    centers = frame.grid.cell_centers()
    dx = centers[..., 0] - camera_offset
    dy = centers[..., 1]
    inside = (dx > 0) & (np.abs(np.arctan2(dy, dx)) <= half_angle)
    return frame.replace(valid=frame.valid & inside)


def apply_corruption(frame: CostmapFrame, spec: CorruptionSpec, seed: Optional[int] = None) -> CostmapFrame:
    """
    블러 → 노이즈 → 드롭아웃 적용. 모든 값이 0 인 spec 이면 입력 프레임을 그대로 반환한다.

    Args:
        seed: 프레임별 시드 (None 이면 spec.seed)
    """
    if spec.blur_sigma == 0 and spec.noise_sigma == 0 and (spec.dropout_block == 0 or spec.dropout_probability == 0):
        return frame

    rng = np.random.default_rng(spec.seed if seed is None else seed)
    values = frame.grid.values
    valid = frame.valid.copy()

    if spec.blur_sigma > 0:
        values = masked_gaussian_blur(values, spec.blur_sigma, valid)
    if spec.noise_sigma > 0:
        values = values + rng.normal(0.0, spec.noise_sigma, size=values.shape)
    if spec.dropout_block > 0 and spec.dropout_probability > 0:
        valid &= ~block_dropout_mask(values.shape, spec.dropout_block, spec.dropout_probability, rng)

    return frame.replace(values=np.clip(values, 0.0, 1.0), valid=valid)
