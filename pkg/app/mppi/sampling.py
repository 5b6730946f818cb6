"""
MPPI 섭동 샘플링

샘플 k 의 난수 스트림은 (step_seed XOR k) 를 키로 하는 카운터 기반 SplitMix64 해시에서 나온다.
어떤 워커가 어떤 샘플을 계산하든 같은 값이 나오므로 병렬 스케줄과 무관하게 결정적이다.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from app.schemas import MppiParams

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_TWO_NEG_53 = 1.0 / float(1 << 53)


def _splitmix64(z: np.ndarray) -> np.ndarray:
    # uint64 배열 곱셈은 2^64 로 wrap 된다
    z = (z ^ (z >> np.uint64(30))) * _MUL1
    z = (z ^ (z >> np.uint64(27))) * _MUL2
    return z ^ (z >> np.uint64(31))


def sample_seeds(master_seed: int, count: int) -> np.ndarray:
    """샘플별 시드 master_seed XOR k"""
    return np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF) ^ np.arange(count, dtype=np.uint64)


def uniform_streams(seeds: np.ndarray, count: int) -> np.ndarray:
    """시드별 (0, 1) 균등 난수 count 개 → (len(seeds), count)"""
    keys = _splitmix64(np.asarray(seeds, dtype=np.uint64) * _GOLDEN + _GOLDEN)
    counters = (np.arange(count, dtype=np.uint64) + np.uint64(1)) * _GOLDEN
    bits = _splitmix64(keys[:, None] + counters[None, :])
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_NEG_53


def normal_streams(seeds: np.ndarray, count: int) -> np.ndarray:
    """시드별 표준정규 난수 count 개 (Box-Muller)"""
    pairs = (count + 1) // 2
    u = uniform_streams(seeds, 2 * pairs)
    radius = np.sqrt(-2.0 * np.log(u[:, 0::2]))
    angle = 2.0 * np.pi * u[:, 1::2]
    z = np.empty((u.shape[0], 2 * pairs))
    z[:, 0::2] = radius * np.cos(angle)
    z[:, 1::2] = radius * np.sin(angle)
    return z[:, :count]


class Perturbations(NamedTuple):
    samples: np.ndarray  # (K, T, m), 클램프 후
    clamped_fraction: float


def sample_perturbations(U: np.ndarray, params: MppiParams, seed: int) -> Perturbations:
    """
    ε_k^t ~ N(u_t, Σ) 를 K 개 샘플링한 뒤 [-1, 1] 로 클램프.

    Args:
        U: (T, m) 현재 제어 시퀀스
        seed: 이번 스텝의 마스터 시드
    """
    U = np.asarray(U, dtype=float)
    horizon, dim = U.shape
    chol = np.linalg.cholesky(params.sigma_array)
    z = normal_streams(sample_seeds(seed, params.num_samples), horizon * dim).reshape(params.num_samples, horizon, dim)
    raw = U[None, :, :] + z @ chol.T
    samples = np.clip(raw, -1.0, 1.0)
    clamped = float(np.mean(samples != raw))
    return Perturbations(samples, clamped)
