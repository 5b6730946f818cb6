"""
MPPI 최적화기

매 제어 주기:
  1. U 주변으로 K 개 섭동 시퀀스 샘플링 (클램프)
  2. 현재 상태에서 K 개 롤아웃 + 누적 비용 S_k
  3. 지수 가중 평균으로 U 갱신 (최소 비용 기준 안정화)
  4. U[0] 실행, U 를 한 칸 당기고 마지막 값을 반복
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from app import config
from app.mppi.cost import trajectory_costs
from app.mppi.sampling import sample_perturbations
from app.perception.frame import CostmapFrame
from app.schemas import MppiParams, VehicleParams
from app.utils import mix_seed, parallel_map, split_ranges
from app.vehicle.dynamics import CONTROL_DIM, Control, VehicleState, rollout_batch

logger = logging.getLogger(__name__)


def control_costs(U: np.ndarray, samples: np.ndarray, params: MppiParams) -> np.ndarray:
    """gamma * sum_t u_t^T Sigma^-1 eps_k^t  →  (K,)"""
    sigma_inv = np.linalg.inv(params.sigma_array)
    return params.gamma * np.einsum("tm,ktm->k", U @ sigma_inv, samples)


def importance_weights(state_costs: np.ndarray, ctrl_costs: np.ndarray, lambda_: float) -> np.ndarray:
    """
    w_k = exp(-(S_k + C_k - min) / lambda) / 정규화 상수

    Raises:
        RuntimeError: 유한한 가중치가 하나도 없는 경우
    """
    total = np.asarray(state_costs, dtype=float) + np.asarray(ctrl_costs, dtype=float)
    total = np.where(np.isnan(total), np.inf, total)
    finite = np.isfinite(total)
    if not finite.any():
        raise RuntimeError("모든 샘플 비용이 유한하지 않아 가중치를 계산할 수 없습니다.")
    exponent = np.where(finite, -(total - total[finite].min()) / lambda_, -np.inf)
    w = np.exp(exponent)
    norm = w.sum()
    if not (norm > 0 and np.isfinite(norm)):
        raise RuntimeError(f"가중치 정규화 상수가 비정상입니다: {norm}")
    return w / norm


@dataclass
class RolloutBatch:
    samples: np.ndarray  # (K, T, m)
    state_costs: np.ndarray  # (K,)
    control_costs: np.ndarray  # (K,)
    weights: np.ndarray  # (K,)
    crashed: np.ndarray  # (K,) bool
    trajectories: Optional[np.ndarray] = field(default=None, repr=False)  # (K, T+1, 7)

    @classmethod
    def from_costs(
        cls,
        U: np.ndarray,
        samples: np.ndarray,
        state_costs: np.ndarray,
        params: MppiParams,
        crashed: Optional[np.ndarray] = None,
        trajectories: Optional[np.ndarray] = None,
    ) -> "RolloutBatch":
        ctrl = control_costs(U, samples, params)
        weights = importance_weights(state_costs, ctrl, params.lambda_)
        if crashed is None:
            crashed = np.zeros(len(state_costs), dtype=bool)
        return cls(samples, np.asarray(state_costs, dtype=float), ctrl, weights, crashed, trajectories)

    @property
    def effective_sample_size(self) -> float:
        return float(1.0 / np.sum(self.weights**2))


def mppi_update(U: np.ndarray, batch: RolloutBatch, params: Optional[MppiParams] = None) -> np.ndarray:
    """
    U_new[t] = sum_k w_k * eps_k^t (샘플 순서 고정 축약)

    batch.weights 는 from_costs 시점의 params 로 계산된 값이다.
    params 를 넘기면 배치의 S_k, C_k 에서 그 lambda 로 가중치를 다시 계산하고 horizon 도 확인한다.
    """
    if batch.samples.shape[1:] != np.shape(U):
        raise ValueError(f"샘플 shape {batch.samples.shape[1:]} 이 제어 시퀀스 shape {np.shape(U)} 와 다릅니다.")
    weights = batch.weights
    if params is not None:
        if params.horizon != np.shape(U)[0]:
            raise ValueError(f"horizon {params.horizon} 이 제어 시퀀스 길이 {np.shape(U)[0]} 와 다릅니다.")
        weights = importance_weights(batch.state_costs, batch.control_costs, params.lambda_)
    total = float(weights.sum())
    if not np.isclose(total, 1.0, rtol=0.0, atol=1e-9):
        raise RuntimeError(f"가중치 합이 1 이 아닙니다: {total}")
    return np.einsum("k,ktm->tm", weights, batch.samples)


def shift_sequence(U: np.ndarray) -> np.ndarray:
    """한 칸 앞으로 당기고 마지막 제어를 반복"""
    return np.concatenate([U[1:], U[-1:]], axis=0)


@dataclass
class StepDiagnostics:
    step_index: int
    cost_min: float = float("nan")
    cost_mean: float = float("nan")
    effective_sample_size: float = float("nan")
    crash_fraction: float = float("nan")
    clamped_fraction: float = float("nan")
    no_frame: bool = False

    def to_dict(self) -> dict:
        return {
            "step_index": self.step_index,
            "cost_min": self.cost_min,
            "cost_mean": self.cost_mean,
            "ess": self.effective_sample_size,
            "crash_fraction": self.crash_fraction,
            "clamped_fraction": self.clamped_fraction,
            "no_frame": self.no_frame,
        }


class MppiController:
    """
    제어 시퀀스 U 를 보관하는 MPPI 제어기.

    같은 (master_seed, 입력 순서) 에 대해 workers 수와 무관하게 같은 명령을 낸다.
    """

    def __init__(self, mppi_params: MppiParams, vehicle_params: VehicleParams, master_seed: int = 0):
        self.params = mppi_params
        self.vehicle_params = vehicle_params
        self.master_seed = master_seed
        self.U = np.zeros((mppi_params.horizon, CONTROL_DIM))
        self.step_index = 0
        self.last_update: Optional[np.ndarray] = None
        self.last_batch: Optional[RolloutBatch] = None

    def reset(self):
        self.U = np.zeros((self.params.horizon, CONTROL_DIM))
        self.step_index = 0
        self.last_update = None
        self.last_batch = None

    def _evaluate(self, x0: np.ndarray, samples: np.ndarray, frame: CostmapFrame) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        p = self.params

        def run_chunk(bounds: Tuple[int, int]):
            lo, hi = bounds
            trajs = rollout_batch(x0, samples[lo:hi], self.vehicle_params, p.dt)
            costs, crashed = trajectory_costs(trajs, frame.lookup_world, p)
            return trajs, costs, crashed

        chunks: List = parallel_map(run_chunk, split_ranges(len(samples), p.workers), max_workers=p.workers)
        trajs = np.concatenate([c[0] for c in chunks], axis=0)
        costs = np.concatenate([c[1] for c in chunks], axis=0)
        crashed = np.concatenate([c[2] for c in chunks], axis=0)
        return trajs, costs, crashed

    def control_step(self, state: VehicleState, frame: Optional[CostmapFrame]) -> Tuple[Control, StepDiagnostics]:
        """
        한 제어 주기 실행.

        프레임이 아직 없으면 제동 명령 (0, -0.3) 을 내고 U 는 건드리지 않는다.

        Raises:
            ValueError: 상태가 유한하지 않은 경우
            RuntimeError: 가중치 정규화 실패
        """
        state.validate()
        index = self.step_index
        self.step_index += 1
        if frame is None:
            steering, throttle = config.BRAKE_COMMAND
            return Control(steering, throttle), StepDiagnostics(step_index=index, no_frame=True)

        step_seed = mix_seed(self.master_seed, index)
        perturbed = sample_perturbations(self.U, self.params, step_seed)
        trajs, costs, crashed = self._evaluate(state.as_array(), perturbed.samples, frame)
        batch = RolloutBatch.from_costs(self.U, perturbed.samples, costs, self.params, crashed, trajs)
        U_new = mppi_update(self.U, batch, self.params)

        self.last_update = U_new
        self.last_batch = batch
        self.U = shift_sequence(U_new)

        diagnostics = StepDiagnostics(
            step_index=index,
            cost_min=float(costs.min()),
            cost_mean=float(costs.mean()),
            effective_sample_size=batch.effective_sample_size,
            crash_fraction=float(crashed.mean()),
            clamped_fraction=perturbed.clamped_fraction,
        )
        if diagnostics.effective_sample_size < 2.0:
            logger.debug(f"⚠️ step {index}: 유효 샘플 수가 매우 작습니다 (ESS={diagnostics.effective_sample_size:.2f})")
        u0 = np.clip(U_new[0], -1.0, 1.0)
        return Control(float(u0[0]), float(u0[1])), diagnostics
