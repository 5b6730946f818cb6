"""
시뮬레이터 전역 상수 및 실행 환경 설정

- 상수: 물리 상수, 코스트맵/크롭 기본값, 실패 판정 기준 등 (코드 전역에서 공유)
- AppSettings: 환경 변수(MPPI_SIM_*) 및 .env 파일에서 읽는 실행 설정
"""

import logging
from pathlib import Path

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)

load_dotenv()

# ========================================
# 경로
# ========================================
PACKAGE_DIR = Path(__file__).resolve().parent
DEFAULT_CONFIG_DIR = PACKAGE_DIR / "configs"

# ========================================
# 물리 상수 / 차량 모델
# ========================================
GRAVITY = 9.81  # m/s^2
# |vx| 가 이 값보다 작으면 슬립각 계산 시 sign(vx)*LOW_SPEED_GUARD 로 대체
LOW_SPEED_GUARD = 0.1  # m/s
# 제동 시 tanh(vx / BRAKE_SMOOTHING) 로 방향을 부드럽게 결정
BRAKE_SMOOTHING = 0.1  # m/s

# ========================================
# 코스트맵
# ========================================
OUT_OF_MAP_COST = 1.0  # 맵 밖 / 미확인 셀 비용 (최댓값)
DEFAULT_RESOLUTION = 0.0625  # m/cell
DEFAULT_TRACK_MARGIN = 2.0  # m, 중심선 bounding box 여유

# ========================================
# 탑다운 크롭 (차량 좌표계)
# ========================================
# 160(횡) x 128(종) 셀, 0.0625 m/cell → 횡 ±5 m, 종 -1 m ~ +7 m
CROP_LATERAL_CELLS = 160
CROP_LONGITUDINAL_CELLS = 128
CROP_X_MIN = -1.0  # m (차량 뒤쪽 가장자리)
CROP_Y_MIN = -5.0  # m (오른쪽 가장자리)

# ========================================
# 오토라벨링
# ========================================
IMAGE_SENTINEL = -1.0  # 이미지 평면 라벨 없음 값 (지평선 위)
EDGE_BAND_CELLS = 10  # 트랙 경계로부터의 마스크 밴드 폭

# ========================================
# 제어 / 시뮬레이션
# ========================================
BRAKE_COMMAND = (0.0, -0.3)  # 프레임이 없을 때의 (steering, throttle)
LAP_RECROSS_GUARD = 2.0  # s, 재통과 무시 구간
OFF_TRACK_COST = 0.98
OFF_TRACK_DURATION = 1.0  # s
STALL_SPEED = 0.2  # m/s
STALL_DURATION = 3.0  # s
TIME_EPS = 1e-9

TOOL_VERSION = "1.0.0"


class AppSettings(BaseSettings):
    """환경 변수 기반 실행 설정 (MPPI_SIM_ 접두사)"""

    model_config = SettingsConfigDict(env_prefix="MPPI_SIM_", extra="ignore")

    runs_dir: Path = Path("runs")
    log_level: str = "INFO"
    workers: int = 1
    config_dir: Path = DEFAULT_CONFIG_DIR


def get_settings() -> AppSettings:
    """현재 환경 기준 설정 객체 반환"""
    settings = AppSettings()
    if settings.workers < 1:
        logger.error(f"MPPI_SIM_WORKERS 값 {settings.workers} 은(는) 1 이상이어야 합니다.")
        raise EnvironmentError("MPPI_SIM_WORKERS 환경 변수 오류. 1 이상의 정수여야 합니다.")
    return settings
