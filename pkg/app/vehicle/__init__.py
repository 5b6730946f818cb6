from app.vehicle.dynamics import (
    CONTROL_DIM,
    STATE_DIM,
    Control,
    VehicleState,
    drag_force,
    longitudinal_force,
    rollout,
    rollout_batch,
    step,
)

__all__ = [
    "CONTROL_DIM",
    "STATE_DIM",
    "Control",
    "VehicleState",
    "drag_force",
    "longitudinal_force",
    "rollout",
    "rollout_batch",
    "step",
]
