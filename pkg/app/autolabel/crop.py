"""
차량 전방 탑다운 크롭 추출

기본 크롭: 128(종) x 160(횡) 셀, 0.0625 m/cell, 종 -1 m ~ +7 m, 횡 -5 m ~ +5 m.
그리드 x축 = 차량 전방, y축 = 차량 좌측.
"""

import numpy as np

from app.costmap.grid import CostMapGrid, Pose2, lookup_costs, transform_points
from app.schemas import CropSpec


def crop_template(crop: CropSpec) -> CostMapGrid:
    """값이 0 인 차량 좌표계 크롭 그리드 (형상만 사용)"""
    return CostMapGrid(
        width=crop.longitudinal_cells,
        height=crop.lateral_cells,
        resolution=crop.resolution,
        origin=Pose2(crop.x_min, crop.y_min, 0.0),
        frame="body",
        values=np.zeros((crop.lateral_cells, crop.longitudinal_cells)),
    )


def extract_topdown_crop(world_map: CostMapGrid, vehicle_pose: Pose2, crop: CropSpec) -> CostMapGrid:
    """각 크롭 셀 값 = lookup_cost(world_map, body_to_world(셀 중심))"""
    if world_map.frame != "world":
        raise ValueError(f"world 좌표계 코스트맵이 필요합니다 (입력: {world_map.frame})")
    template = crop_template(crop)
    world_pts = transform_points(vehicle_pose, template.cell_centers(), "body_to_world")
    values = lookup_costs(world_map, world_pts[..., 0], world_pts[..., 1])
    return template.with_values(values)
