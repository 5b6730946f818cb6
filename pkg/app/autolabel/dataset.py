# app/autolabel/dataset.py
"""
오토라벨링 데이터셋 생성

pose 로그의 각 pose 마다:
  - crop_XXXXXX.json/.f32   : 차량 좌표계 탑다운 크롭
  - mask_XXXXXX.u8          : 트랙 경계 밴드 마스크 (uint8 0/1, row-major, 크롭과 같은 shape)
  - image_XXXXXX.json/.f32  : 이미지 평면 라벨 (라벨 없음 = -1.0)
  - sample_XXXXXX.json      : 사이드카 (timestamp, pose, homography, 파일 이름)
파일 이름이 인덱스 기반이므로 병렬 저장 순서와 무관하게 결과가 같다.
"""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from app import config
from app.autolabel.crop import extract_topdown_crop
from app.autolabel.homography import (
    CameraModel,
    GroundHomography,
    Pose3,
    back_project_pixels,
    compose_homography,
    pose3_from_quaternion,
)
from app.costmap.grid import CostMapGrid, Pose2, edge_band_mask, lookup_costs, save_grid
from app.schemas import CropSpec
from app.utils import parallel_map, write_json

logger = logging.getLogger(__name__)

POSE_LOG_COLUMNS = ("t", "x", "y", "z", "qw", "qx", "qy", "qz")


@dataclass(frozen=True)
class PoseSample:
    """타임스탬프가 붙은 차량 pose (world <- car)"""

    t: float
    pose: Pose3


def load_pose_log_csv(path: Union[str, Path]) -> List[PoseSample]:
    """t,x,y,z,qw,qx,qy,qz 헤더를 가진 CSV 로드"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"pose 로그 파일을 찾을 수 없습니다: {path}")
    samples: List[PoseSample] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = [c for c in POSE_LOG_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"pose 로그에 필요한 열이 없습니다: {', '.join(missing)}")
        for row in reader:
            v = {c: float(row[c]) for c in POSE_LOG_COLUMNS}
            pose = pose3_from_quaternion(v["x"], v["y"], v["z"], v["qw"], v["qx"], v["qy"], v["qz"])
            samples.append(PoseSample(v["t"], pose))
    return samples


def render_image_plane_labels(
    world_map: CostMapGrid,
    h: GroundHomography,
    image_size: Tuple[int, int],
) -> CostMapGrid:
    """
    이미지 평면 라벨 생성. 각 픽셀 중심 (col + 0.5, row + 0.5) 을 지면으로 역투영해 월드 코스트맵을 샘플링.

    Args:
        image_size: (width, height) 픽셀

    Returns:
        frame="image", resolution=1 인 그리드. 지평선 위 픽셀은 IMAGE_SENTINEL.

    Raises:
        ValueError: H_hat 이 특이 행렬인 경우
    """
    width, height = image_size
    cols, rows = np.meshgrid(np.arange(width) + 0.5, np.arange(height) + 0.5, indexing="xy")
    pixels = np.column_stack([cols.ravel(), rows.ravel()])
    ground, valid = back_project_pixels(h, pixels)

    labels = np.full(len(pixels), config.IMAGE_SENTINEL)
    if valid.any():
        labels[valid] = lookup_costs(world_map, ground[valid, 0], ground[valid, 1])
    return CostMapGrid(width, height, 1.0, Pose2(), "image", labels.reshape(height, width))


def _sidecar(index: int, sample: PoseSample, pose2: Pose2, h: GroundHomography, names: dict) -> dict:
    return {
        "index": index,
        "timestamp": sample.t,
        "pose": sample.pose.to_dict(),
        "pose2": pose2.to_dict(),
        "homography": h.H.tolist(),
        "reduced_homography": h.H_hat.tolist(),
        "files": names,
    }


def emit_dataset(
    pose_log: Sequence[PoseSample],
    world_map: CostMapGrid,
    camera: CameraModel,
    out_dir: Union[str, Path],
    crop: CropSpec = CropSpec(),
    band_cells: int = config.EDGE_BAND_CELLS,
    workers: int = 1,
) -> int:
    """
    pose 로그 전체에 대해 크롭/이미지 라벨/사이드카 저장.

    Returns:
        저장한 샘플 수

    Raises:
        PermissionError / OSError: 출력 디렉토리에 쓸 수 없는 경우
    """
    if not pose_log:
        logger.warning("⚠️ pose 로그가 비어 있어 저장할 샘플이 없습니다.")
        return 0

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"출력 디렉토리에 쓸 수 없습니다: {out_dir}")

    def emit_one(item: Tuple[int, PoseSample]) -> int:
        idx, sample = item
        pose2 = sample.pose.to_pose2()
        topdown = extract_topdown_crop(world_map, pose2, crop)
        band = edge_band_mask(topdown.values, band_cells)
        h = compose_homography(camera, sample.pose)
        image = render_image_plane_labels(world_map, h, (camera.width, camera.height))

        names = {
            "crop": f"crop_{idx:06d}.json",
            "mask": f"mask_{idx:06d}.u8",
            "image": f"image_{idx:06d}.json",
        }
        save_grid(topdown, out_dir / names["crop"])
        band.astype(np.uint8).tofile(out_dir / names["mask"])
        save_grid(image, out_dir / names["image"])
        write_json(out_dir / f"sample_{idx:06d}.json", _sidecar(idx, sample, pose2, h, names))
        return idx

    items = list(enumerate(pose_log))
    written = 0
    batch = max(1, workers) * 8
    with tqdm(total=len(items), desc="dataset", unit="pose", disable=None) as bar:
        for start in range(0, len(items), batch):
            chunk = items[start : start + batch]
            written += len(parallel_map(emit_one, chunk, max_workers=workers))
            bar.update(len(chunk))

    logger.info(f"✅ 데이터셋 저장 완료: {written}개 샘플 → {out_dir}")
    return written
