"""
MPPI running cost

q(x_t) = w1 * C_M(px, py) + w2 * (vx - v_d)^2 + w3 * discount^t * I(x_t) + w4 * (vy / vx)^2

I 는 충돌 지시자: 트랙 비용, |roll|, |yaw_rate| 중 하나라도 임계값을 넘으면 1.
latch_indicator 가 켜져 있으면 한 번 1 이 된 샘플은 이후 시간 스텝에서도 1 로 유지된다.
"""

from __future__ import annotations

from typing import Callable, Tuple, Union

import numpy as np

from app.schemas import MppiParams
from app.vehicle.dynamics import PX, PY, ROLL, VX, VY, YAW_RATE, VehicleState, guarded_speed

# (x, y) 월드 좌표 배열 -> 트랙 비용 배열
CostField = Callable[[np.ndarray, np.ndarray], np.ndarray]


def crash_indicator(states: np.ndarray, track_costs: np.ndarray, params: MppiParams) -> np.ndarray:
    """(..., 7) 상태 + (...) 트랙 비용 -> (...) bool. 유한하지 않은 상태는 충돌로 본다."""
    states = np.atleast_2d(states)
    finite = np.all(np.isfinite(states), axis=-1) & np.isfinite(track_costs)
    with np.errstate(invalid="ignore"):
        hit = (
            (track_costs > params.track_cost_threshold)
            | (np.abs(states[..., ROLL]) > params.roll_threshold)
            | (np.abs(states[..., YAW_RATE]) > params.yaw_rate_threshold)
        )
    return hit | ~finite


def running_costs(
    states: np.ndarray,
    t: Union[int, np.ndarray],
    track_costs: np.ndarray,
    params: MppiParams,
    indicator: np.ndarray,
) -> np.ndarray:
    """
    시간 스텝 t 의 running cost (배치).

    Args:
        states: (K, 7), 또는 t 가 (T+1,) 배열이면 (K, T+1, 7)
        track_costs: states 앞쪽 shape 의 C_M 조회값
        indicator: 이번 스텝에 적용할 충돌 지시자 (래치 반영 후)
    """
    w1, w2, w3, w4 = params.weights
    states = np.atleast_2d(states)
    vx = states[..., VX]
    discount = params.discount ** np.asarray(t, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        slip = states[..., VY] / guarded_speed(vx)
        q = (
            w1 * track_costs
            + w2 * (vx - params.desired_speed) ** 2
            + w3 * discount * indicator.astype(float)
            + w4 * slip**2
        )
    # 발산한 샘플은 트랙 비용 최댓값 + 충돌 비용으로 고정
    penalty = w1 + w3 * discount
    return np.where(np.isfinite(q), q, penalty)


def running_cost(state: VehicleState, t: int, track_cost: float, params: MppiParams) -> Tuple[float, bool]:
    """단일 상태 running cost. (q, 충돌 지시자) 반환 (래치 없음)"""
    x = state.as_array()[None, :]
    c = np.array([track_cost], dtype=float)
    hit = crash_indicator(x, c, params)
    return float(running_costs(x, t, c, params, hit)[0]), bool(hit[0])


def trajectory_costs(trajectories: np.ndarray, cost_field: CostField, params: MppiParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    (K, T+1, 7) 궤적의 누적 비용 S_k = sum_{t=0..T} q(x_t).

    코스트맵 조회는 K*(T+1) 점을 한 번에 처리한다.

    Returns:
        (S, crashed): (K,) 비용, (K,) 한 번이라도 충돌 지시자가 켜졌는지
    """
    trajectories = np.asarray(trajectories, dtype=float)
    k, steps, _ = trajectories.shape
    with np.errstate(invalid="ignore"):
        c = np.asarray(cost_field(trajectories[..., PX].ravel(), trajectories[..., PY].ravel()), dtype=float)
    c = c.reshape(k, steps)
    hit = crash_indicator(trajectories, c, params)
    latched = np.logical_or.accumulate(hit, axis=1)
    indicator = latched if params.latch_indicator else hit
    q = running_costs(trajectories, np.arange(steps), np.where(np.isfinite(c), c, 1.0), params, indicator)

    # 시간 순서대로 누적 (샘플별 합산 순서 고정)
    total = np.zeros(k)
    for t in range(steps):
        total += q[:, t]
    return total, latched[:, -1]


def trajectory_cost(trajectory: np.ndarray, cost_field: CostField, params: MppiParams) -> float:
    """단일 (T+1, 7) 궤적 누적 비용"""
    total, _ = trajectory_costs(np.asarray(trajectory, dtype=float)[None, :, :], cost_field, params)
    return float(total[0])
