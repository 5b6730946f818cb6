"""공용 fixture: 기본 oval 트랙, 월드 코스트맵, 작은 MPPI 파라미터"""

import numpy as np
import pytest

from app import config
from app.costmap.grid import CostMapGrid, Pose2
from app.costmap.track import Centerline, build_track_costmap
from app.schemas import CropSpec, MppiParams, VehicleParams, load_model


@pytest.fixture(scope="session")
def oval() -> Centerline:
    return Centerline.load(config.DEFAULT_CONFIG_DIR / "tracks" / "oval.json")


@pytest.fixture(scope="session")
def oval_map(oval) -> CostMapGrid:
    return build_track_costmap(oval)


@pytest.fixture(scope="session")
def straight() -> Centerline:
    return Centerline(vertices=[(-10.0, 0.0), (30.0, 0.0)], closed=False, half_width=1.5)


@pytest.fixture(scope="session")
def straight_map(straight) -> CostMapGrid:
    return build_track_costmap(straight, resolution=0.125)


@pytest.fixture(scope="session")
def vehicle_params() -> VehicleParams:
    return load_model(VehicleParams, config.DEFAULT_CONFIG_DIR / "vehicle_default.json")


@pytest.fixture
def small_mppi() -> MppiParams:
    return MppiParams(num_samples=64, horizon=20)


@pytest.fixture
def small_crop() -> CropSpec:
    return CropSpec(longitudinal_cells=40, lateral_cells=48, resolution=0.125, x_min=-1.0, y_min=-3.0)


@pytest.fixture(scope="session")
def uniform_world():
    """원점 중심 size x size m, 값이 전부 value 인 월드 코스트맵 생성기"""

    def make(value: float, size: float = 60.0, resolution: float = 0.5) -> CostMapGrid:
        cells = int(size / resolution)
        origin = Pose2(-size / 2, -size / 2, 0.0)
        return CostMapGrid(cells, cells, resolution, origin, "world", np.full((cells, cells), value))

    return make
