"""
공통 유틸리티 함수

- 시드 혼합 (프로세스/플랫폼 무관하게 동일한 결과)
- 속도 측정 통계 (TimingStats)
- 인덱스 순서를 보장하는 병렬 처리
- JSON 저장
"""

import json
import logging
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence, Tuple, TypeVar, Union

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# ============================================================
# 시드 혼합
# ============================================================
# 내장 hash() 는 실행마다 salt 가 달라지므로 64-bit FNV-1a 를 사용

_FNV_OFFSET64 = 0xCBF29CE484222325
_FNV_PRIME64 = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _to_bytes(x: Union[int, float, str, bytes]) -> bytes:
    if isinstance(x, bytes):
        return x
    if isinstance(x, bool):
        x = int(x)
    if isinstance(x, int):
        return int(x & _MASK64).to_bytes(8, "little", signed=False)
    if isinstance(x, float):
        return repr(x).encode("utf-8")
    return str(x).encode("utf-8")


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET64
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME64) & _MASK64
    return h


def mix_seed(base_seed: int, *parts: Union[int, float, str, bytes]) -> int:
    """
    base_seed 와 임의 개수의 parts 를 섞어 양의 31-bit 정수 시드를 만든다.

    Examples:
        >>> mix_seed(7, "ccw", 5.0) == mix_seed(7, "ccw", 5.0)
        True
    """
    h = _fnv1a64(_to_bytes(base_seed))
    for p in parts:
        h ^= _fnv1a64(_to_bytes(p))
        h = (h * _FNV_PRIME64) & _MASK64
    out = (h ^ (h >> 33)) & 0x7FFFFFFF
    return out or 1


# ============================================================
# 속도 측정 유틸리티
# ============================================================


class TimingStats:
    """속도 측정 통계를 저장하는 클래스"""

    def __init__(self):
        self.timings: Dict[str, List[float]] = {}

    def add_timing(self, category: str, duration: float):
        """특정 카테고리에 실행 시간 추가"""
        self.timings.setdefault(category, []).append(duration)

    def get_stats(self, category: str) -> Dict[str, float]:
        """특정 카테고리의 통계 반환 (중앙값 포함)"""
        times = self.timings.get(category)
        if not times:
            return {"count": 0, "total": 0.0, "avg": 0.0, "median": 0.0, "min": 0.0, "max": 0.0}

        return {
            "count": len(times),
            "total": sum(times),
            "avg": sum(times) / len(times),
            "median": statistics.median(times),
            "min": min(times),
            "max": max(times),
        }

    def log_summary(self):
        """전체 통계 요약 로그 출력"""
        for category in sorted(self.timings):
            stats = self.get_stats(category)
            logger.info(
                f"⏱️  [{category}] {stats['count']}회, 평균 {stats['avg'] * 1e3:.2f}ms, "
                f"중앙값 {stats['median'] * 1e3:.2f}ms, 최대 {stats['max'] * 1e3:.2f}ms"
            )


@contextmanager
def measure_time(stats: TimingStats, category: str):
    """
    코드 블록의 실행 시간을 측정하는 컨텍스트 매니저

    사용 예:
        with measure_time(stats, "control_step"):
            controller.control_step(state, frame)
    """
    start_time = time.perf_counter()
    try:
        yield
    finally:
        stats.add_timing(category, time.perf_counter() - start_time)


# ============================================================
# 병렬 처리
# ============================================================


def split_ranges(total: int, parts: int) -> List[Tuple[int, int]]:
    """[0, total) 구간을 최대 parts 개의 연속 구간으로 분할"""
    parts = max(1, min(parts, total))
    bounds = [round(i * total / parts) for i in range(parts + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(parts) if bounds[i] < bounds[i + 1]]


def parallel_map(func: Callable[[T], R], items: Sequence[T], max_workers: int = 1) -> List[R]:
    """
    항목들을 병렬로 처리하되 결과는 입력 순서대로 반환한다.

    max_workers == 1 이면 스레드 풀 없이 순차 실행.
    """
    if max_workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    results: List[Any] = [None] * len(items)
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_idx = {executor.submit(func, item): idx for idx, item in enumerate(items)}
        for future, idx in future_to_idx.items():
            results[idx] = future.result()
    return results


# ============================================================
# 파일 출력
# ============================================================


def write_json(path: Union[str, Path], data: Any) -> Path:
    """정렬된 키로 JSON 저장 (재실행 시 바이트 단위 동일)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    return path


def read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"파일을 찾을 수 없습니다: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
