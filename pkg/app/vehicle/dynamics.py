"""
동적 자전거 모델 (선형 타이어 + 마찰 포화, 스로틀 비례 구동력, 공기 저항, 대수적 롤)

MPPI 롤아웃과 시뮬레이션 플랜트가 같은 RK4 커널 (numba) 을 사용한다.
상태 배열 레이아웃: [px, py, yaw, roll, vx, vy, yaw_rate]
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass
from typing import Sequence, Union

import numpy as np
from numba import njit

from app import config
from app.schemas import VehicleParams

PX, PY, YAW, ROLL, VX, VY, YAW_RATE = range(7)
STATE_DIM = 7
CONTROL_DIM = 2


@dataclass(frozen=True)
class VehicleState:
    """평면 강체 상태. 속도는 차량 좌표계 (x 전방, y 좌측)."""

    px: float = 0.0
    py: float = 0.0
    yaw: float = 0.0
    roll: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    yaw_rate: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "VehicleState":
        values = np.asarray(arr, dtype=float).reshape(STATE_DIM)
        return cls(*(float(v) for v in values))

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    def validate(self) -> "VehicleState":
        values = astuple(self)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"차량 상태에 유한하지 않은 값이 있습니다: {self}")
        if abs(self.roll) > math.pi / 2:
            raise ValueError(f"roll 은 [-pi/2, pi/2] 범위여야 합니다: {self.roll}")
        return self


@dataclass(frozen=True)
class Control:
    """조향/스로틀 명령 (모두 [-1, 1] 무차원)"""

    steering: float = 0.0
    throttle: float = 0.0

    def clamped(self) -> "Control":
        return Control(
            steering=min(1.0, max(-1.0, self.steering)),
            throttle=min(1.0, max(-1.0, self.throttle)),
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.steering, self.throttle], dtype=float)


# -------------------------------------------------------------------
# 힘 모델
# -------------------------------------------------------------------


def guarded_speed(vx: np.ndarray) -> np.ndarray:
    """|vx| < LOW_SPEED_GUARD 이면 sign(vx)*LOW_SPEED_GUARD (sign(0) = +1)"""
    guard = config.LOW_SPEED_GUARD
    return np.where(np.abs(vx) < guard, np.where(vx < 0.0, -guard, guard), vx)


def drag_force(vx: np.ndarray, params: VehicleParams) -> np.ndarray:
    """구름 저항(속도 비례) + 공기 저항(속도 제곱)"""
    return params.rolling_drag * vx + params.aero_drag * vx * np.abs(vx)


def longitudinal_force(vx: np.ndarray, throttle: np.ndarray, params: VehicleParams) -> np.ndarray:
    """
    종방향 합력.

    throttle >= 0: 구동력 throttle*gain*(1 - vx/max_speed), max_speed 에서 0
    throttle < 0 : vx 반대 방향 제동력 (정지 상태에서는 0)
    """
    vx = np.asarray(vx, dtype=float)
    throttle = np.asarray(throttle, dtype=float)
    taper = np.clip(1.0 - vx / params.max_speed, 0.0, 1.0)
    drive = throttle * params.drive_force_gain * taper
    brake = throttle * params.drive_force_gain * np.tanh(vx / config.BRAKE_SMOOTHING)
    return np.where(throttle >= 0.0, drive, brake) - drag_force(vx, params)


# -------------------------------------------------------------------
# RK4 커널 (numba)
# -------------------------------------------------------------------
# step / rollout / rollout_batch 가 모두 같은 커널을 거치므로 결과가 비트 단위로 같다.
# 샘플 k 는 서로 독립이라 어떤 청크로 나눠 호출해도 행별 결과는 변하지 않는다.


def _kernel_params(p: VehicleParams) -> tuple:
    fz_front = p.mass * config.GRAVITY * p.rear_axle_distance / p.wheelbase
    fz_rear = p.mass * config.GRAVITY * p.front_axle_distance / p.wheelbase
    return (
        float(p.mass),
        float(p.front_axle_distance),
        float(p.rear_axle_distance),
        float(p.yaw_inertia),
        float(p.cornering_stiffness_front),
        float(p.cornering_stiffness_rear),
        float(p.friction_coefficient * fz_front),
        float(p.friction_coefficient * fz_rear),
        float(p.max_steering_angle),
        float(p.drive_force_gain),
        float(p.rolling_drag),
        float(p.aero_drag),
        float(p.max_speed),
        float(p.roll_gain),
        float(config.LOW_SPEED_GUARD),
        float(config.BRAKE_SMOOTHING),
    )


@njit(cache=False, nogil=True)
def _forces(vx, vy, r, delta, throttle, prm):
    lf, lr, cf, cr, limit_f, limit_r = prm[1], prm[2], prm[4], prm[5], prm[6], prm[7]
    gain, rolling, aero, max_speed, guard, smoothing = prm[9], prm[10], prm[11], prm[12], prm[14], prm[15]
    if abs(vx) < guard:
        vx_g = -guard if vx < 0.0 else guard
    else:
        vx_g = vx
    alpha_f = delta - math.atan((vy + lf * r) / vx_g)
    alpha_r = -math.atan((vy - lr * r) / vx_g)
    # 소슬립 영역 기울기 = 코너링 강성, |F| <= mu * Fz 로 부드럽게 포화
    fy_front = limit_f * math.tanh(cf * alpha_f / limit_f)
    fy_rear = limit_r * math.tanh(cr * alpha_r / limit_r)

    if throttle >= 0.0:
        taper = 1.0 - vx / max_speed
        if taper < 0.0:
            taper = 0.0
        elif taper > 1.0:
            taper = 1.0
        drive = throttle * gain * taper
    else:
        drive = throttle * gain * math.tanh(vx / smoothing)
    fx = drive - (rolling * vx + aero * vx * abs(vx))
    return fx, fy_front, fy_rear


@njit(cache=False, nogil=True)
def _derivatives(yaw, vx, vy, r, delta, cos_d, sin_d, throttle, prm):
    mass, lf, lr, inertia = prm[0], prm[1], prm[2], prm[3]
    fx, fy_front, fy_rear = _forces(vx, vy, r, delta, throttle, prm)
    cos_yaw, sin_yaw = math.cos(yaw), math.sin(yaw)
    return (
        vx * cos_yaw - vy * sin_yaw,
        vx * sin_yaw + vy * cos_yaw,
        r,
        (fx - fy_front * sin_d) / mass + vy * r,
        (fy_rear + fy_front * cos_d) / mass - vx * r,
        (lf * fy_front * cos_d - lr * fy_rear) / inertia,
    )


@njit(cache=False, nogil=True)
def _rollout_kernel(x0, controls, prm, dt, out):
    """
    x0 (K, 7), controls (K, T, 2) → out (K, T+1, 7).
    롤은 적분하지 않고 스텝 끝 상태의 횡가속도에서 대수적으로 계산한다.
    """
    max_steer, roll_gain, mass = prm[8], prm[13], prm[0]
    half = 0.5 * dt
    sixth = dt / 6.0
    half_pi = 0.5 * math.pi
    for k in range(controls.shape[0]):
        px, py, yaw, roll = x0[k, 0], x0[k, 1], x0[k, 2], x0[k, 3]
        vx, vy, r = x0[k, 4], x0[k, 5], x0[k, 6]
        for i in range(7):
            out[k, 0, i] = x0[k, i]
        for t in range(controls.shape[1]):
            delta = controls[k, t, 0] * max_steer
            throttle = controls[k, t, 1]
            cos_d, sin_d = math.cos(delta), math.sin(delta)

            k1 = _derivatives(yaw, vx, vy, r, delta, cos_d, sin_d, throttle, prm)
            k2 = _derivatives(
                yaw + half * k1[2], vx + half * k1[3], vy + half * k1[4], r + half * k1[5], delta, cos_d, sin_d, throttle, prm
            )
            k3 = _derivatives(
                yaw + half * k2[2], vx + half * k2[3], vy + half * k2[4], r + half * k2[5], delta, cos_d, sin_d, throttle, prm
            )
            k4 = _derivatives(
                yaw + dt * k3[2], vx + dt * k3[3], vy + dt * k3[4], r + dt * k3[5], delta, cos_d, sin_d, throttle, prm
            )

            px = px + sixth * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            py = py + sixth * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            yaw = yaw + sixth * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
            vx_next = vx + sixth * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
            vy = vy + sixth * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4])
            r = r + sixth * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5])

            # 제동은 한 스텝 안에서 vx 부호를 뒤집지 않는다
            if throttle < 0.0 and vx * vx_next < 0.0:
                vx_next = 0.0
            vx = vx_next

            _, fy_front, fy_rear = _forces(vx, vy, r, delta, throttle, prm)
            roll = roll_gain * (fy_rear + fy_front * cos_d) / mass
            if roll > half_pi:
                roll = half_pi
            elif roll < -half_pi:
                roll = -half_pi

            out[k, t + 1, 0] = px
            out[k, t + 1, 1] = py
            out[k, t + 1, 2] = yaw
            out[k, t + 1, 3] = roll
            out[k, t + 1, 4] = vx
            out[k, t + 1, 5] = vy
            out[k, t + 1, 6] = r


def _integrate(x0: np.ndarray, controls: np.ndarray, params: VehicleParams, dt: float) -> np.ndarray:
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    controls = np.ascontiguousarray(controls, dtype=np.float64)
    out = np.empty((controls.shape[0], controls.shape[1] + 1, STATE_DIM), dtype=np.float64)
    _rollout_kernel(x0, controls, _kernel_params(params), float(dt), out)
    return out


# -------------------------------------------------------------------
# 공개 연산
# -------------------------------------------------------------------


def step(state: VehicleState, control: Control, params: VehicleParams, dt: float) -> VehicleState:
    """
    RK4 로 dt 만큼 상태 전진.

    Raises:
        ValueError: dt <= 0 이거나 입력 상태가 유한하지 않은 경우
    """
    if not dt > 0:
        raise ValueError(f"dt 는 양수여야 합니다: {dt}")
    state.validate()
    x = state.as_array()[None, :]
    u = np.clip(control.as_array(), -1.0, 1.0)[None, :]
    x_next = _integrate(x, u[:, None, :], params, dt)[0, 1]
    if not np.all(np.isfinite(x_next)):
        raise ValueError(f"적분 결과가 유한하지 않습니다 (state={state}, control={control})")
    return VehicleState.from_array(x_next)


def _controls_array(controls: Union[np.ndarray, Sequence[Control]]) -> np.ndarray:
    if isinstance(controls, np.ndarray):
        arr = np.asarray(controls, dtype=float)
    else:
        arr = np.array([c.as_array() for c in controls], dtype=float).reshape(-1, CONTROL_DIM)
    return np.clip(arr, -1.0, 1.0)


def rollout(
    state: VehicleState,
    controls: Union[np.ndarray, Sequence[Control]],
    params: VehicleParams,
    dt: float,
) -> np.ndarray:
    """
    제어 시퀀스를 따라 상태 궤적 계산.

    Returns:
        (T+1, 7) 배열. 0번째 행은 입력 상태, t+1 번째 행은 step(t번째 행, controls[t]).
    """
    u = _controls_array(controls)
    if u.ndim != 2 or u.shape[0] == 0:
        raise ValueError("제어 시퀀스가 비어 있습니다 (T >= 1 필요).")
    if not dt > 0:
        raise ValueError(f"dt 는 양수여야 합니다: {dt}")
    state.validate()

    traj = _integrate(state.as_array()[None, :], u[None, :, :], params, dt)[0]
    if not np.all(np.isfinite(traj)):
        raise ValueError("롤아웃 중 유한하지 않은 상태가 발생했습니다.")
    return traj


def rollout_batch(x0: np.ndarray, controls: np.ndarray, params: VehicleParams, dt: float) -> np.ndarray:
    """
    K 개 제어 시퀀스 동시 롤아웃.

    Args:
        x0: (7,) 초기 상태
        controls: (K, T, 2) 제어 (이미 [-1, 1] 로 클램프된 값)

    Returns:
        (K, T+1, 7) 궤적
    """
    x0 = np.asarray(x0, dtype=float).reshape(STATE_DIM)
    return _integrate(np.repeat(x0[None, :], len(controls), axis=0), controls, params, dt)
