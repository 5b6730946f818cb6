"""
블록 가림(ablation) 민감도 분석

입력 그리드의 block x block 영역을 fill_value 로 덮고 다시 예측해 점수를 기록한다.
배치 위치는 서로 독립이라 병렬 평가하되 결과는 위치 인덱스 순으로 저장한다.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from PIL import Image
from tqdm import tqdm

from app import config
from app.costmap.grid import CostMapGrid, Pose2, save_grid
from app.evalbench.scoring import GridLike, grid_values, score, track_mask
from app.utils import parallel_map, write_json

logger = logging.getLogger(__name__)

Predictor = Callable[[np.ndarray], np.ndarray]


class AblationError(RuntimeError):
    """특정 블록 위치에서 예측기가 실패한 경우"""

    def __init__(self, placement: Tuple[int, int], cause: Exception):
        self.placement = placement
        self.cause = cause
        super().__init__(f"블록 위치 (row={placement[0]}, col={placement[1]}) 에서 예측 실패: {cause}")


@dataclass
class SensitivityMap:
    scores: np.ndarray  # (n_rows, n_cols)
    block_size: int
    stride: int
    rows: np.ndarray  # 블록 좌상단 행 인덱스
    cols: np.ndarray  # 블록 좌상단 열 인덱스
    baseline_score: float
    fill_value: float

    @property
    def errors(self) -> np.ndarray:
        return 1.0 - self.scores

    def to_grid(self) -> CostMapGrid:
        n_rows, n_cols = self.scores.shape
        return CostMapGrid(n_cols, n_rows, 1.0, Pose2(), "image", self.scores)

    def save(self, out_dir: Union[str, Path], stem: str) -> Path:
        out_dir = Path(out_dir)
        save_grid(self.to_grid(), out_dir / f"{stem}.json")
        write_pgm(normalize_sensitivity(self), out_dir / f"{stem}.pgm")
        write_json(
            out_dir / f"{stem}_report.json",
            {
                "block_size": self.block_size,
                "stride": self.stride,
                "fill_value": self.fill_value,
                "baseline_score": self.baseline_score,
                "min_score": float(self.scores.min()),
                "max_score": float(self.scores.max()),
                "mean_score": float(self.scores.mean()),
                "shape": list(self.scores.shape),
            },
        )
        return out_dir


def placements(size: int, block: int, stride: int) -> np.ndarray:
    return np.arange(0, size - block + 1, stride)


def ablate(
    predictor: Predictor,
    input_grid: GridLike,
    block_size: int,
    fill_value: Optional[float] = None,
    stride: Optional[int] = None,
    ground_truth: Optional[GridLike] = None,
    band_cells: int = config.EDGE_BAND_CELLS,
    workers: int = 1,
) -> SensitivityMap:
    """
    모든 블록 위치에 대해 가림 → 재예측 → 점수 기록.

    Args:
        fill_value: 기본값은 입력 그리드 평균
        stride: 기본값은 block_size // 2 (최소 1)
        ground_truth: 기본값은 가리지 않은 입력에 대한 예측

    Raises:
        ValueError: block_size 가 입력보다 작지 않은 경우
        AblationError: 예측기 실패 (위치 포함)
    """
    values = grid_values(input_grid)
    height, width = values.shape
    if not 0 < block_size < min(height, width):
        raise ValueError(f"block_size {block_size} 는 입력 크기 {values.shape} 보다 작은 양수여야 합니다.")
    stride = stride or max(1, block_size // 2)
    fill = float(values.mean()) if fill_value is None else float(fill_value)

    try:
        baseline = grid_values(predictor(values.copy()))
    except Exception as e:
        raise AblationError((-1, -1), e) from e
    gt = baseline if ground_truth is None else grid_values(ground_truth)
    mask = track_mask(gt, band_cells)
    baseline_score = score(baseline, gt, mask)

    rows, cols = placements(height, block_size, stride), placements(width, block_size, stride)
    jobs: List[Tuple[int, int]] = [(int(r), int(c)) for r in rows for c in cols]

    def run(job: Tuple[int, int]) -> float:
        r, c = job
        ablated = values.copy()
        ablated[r : r + block_size, c : c + block_size] = fill
        try:
            pred = grid_values(predictor(ablated))
        except Exception as e:
            raise AblationError(job, e) from e
        return score(pred, gt, mask)

    results: List[float] = []
    batch = max(1, workers) * 16
    with tqdm(total=len(jobs), desc=f"ablate b={block_size}", unit="block", disable=None) as bar:
        for start in range(0, len(jobs), batch):
            chunk = jobs[start : start + batch]
            results.extend(parallel_map(run, chunk, max_workers=workers))
            bar.update(len(chunk))

    scores = np.asarray(results, dtype=float).reshape(len(rows), len(cols))
    logger.info(
        f"✅ ablation 완료 (block={block_size}, stride={stride}): {len(jobs)}개 위치, "
        f"점수 {scores.min():.4f} ~ {scores.max():.4f}"
    )
    return SensitivityMap(scores, block_size, stride, rows, cols, baseline_score, fill)


def normalize_sensitivity(sensitivity: SensitivityMap) -> np.ndarray:
    """오차(1 - score) 최소 → 0(검정), 최대 → 255(흰색). 값이 하나뿐이면 전부 0."""
    errors = sensitivity.errors
    if errors.size == 0:
        raise ValueError("민감도 맵이 비어 있습니다.")
    lo, hi = float(errors.min()), float(errors.max())
    if hi - lo <= 0:
        return np.zeros(errors.shape, dtype=np.uint8)
    return np.rint((errors - lo) / (hi - lo) * 255.0).astype(np.uint8)


def write_pgm(image: np.ndarray, path: Union[str, Path]) -> Path:
    """8-bit 그레이 이미지를 binary PGM(P5) 으로 저장"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(path, format="PPM")
    return path
