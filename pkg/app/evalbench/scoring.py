"""
코스트맵 예측 점수

score = 1 - mean|pred - gt|, 단 트랙 셀(정답 비용 < 1 또는 경계 밴드)에서만 평균한다.
"""

from __future__ import annotations

from typing import Optional, Union

import numpy as np

from app import config
from app.costmap.grid import CostMapGrid, edge_band_mask

GridLike = Union[CostMapGrid, np.ndarray]


def grid_values(grid: GridLike) -> np.ndarray:
    return np.asarray(grid.values if isinstance(grid, CostMapGrid) else grid, dtype=float)


def track_mask(ground_truth: GridLike, band_cells: int = config.EDGE_BAND_CELLS) -> np.ndarray:
    """정답에서 트랙으로 보는 셀: 비용 < 1 이거나 경계에서 band_cells 이내"""
    gt = grid_values(ground_truth)
    return (gt < 1.0) | edge_band_mask(gt, band_cells)


def score(
    predicted: GridLike,
    ground_truth: GridLike,
    mask: Optional[np.ndarray] = None,
    band_cells: int = config.EDGE_BAND_CELLS,
) -> float:
    """
    Raises:
        ValueError: shape 가 다르거나 트랙 마스크가 비어 있는 경우
    """
    pred, gt = grid_values(predicted), grid_values(ground_truth)
    if pred.shape != gt.shape:
        raise ValueError(f"예측 shape {pred.shape} 와 정답 shape {gt.shape} 가 다릅니다.")
    mask = track_mask(gt, band_cells) if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != gt.shape:
        raise ValueError(f"마스크 shape {mask.shape} 가 정답 shape {gt.shape} 와 다릅니다.")
    if not mask.any():
        raise ValueError("트랙 마스크가 비어 있어 점수를 계산할 수 없습니다.")
    error = float(np.mean(np.abs(pred[mask] - gt[mask])))
    return min(1.0, max(0.0, 1.0 - error))
