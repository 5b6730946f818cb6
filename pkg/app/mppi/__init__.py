from app.mppi.cost import crash_indicator, running_cost, running_costs, trajectory_cost, trajectory_costs
from app.mppi.optimizer import (
    MppiController,
    RolloutBatch,
    StepDiagnostics,
    control_costs,
    importance_weights,
    mppi_update,
    shift_sequence,
)
from app.mppi.sampling import Perturbations, normal_streams, sample_perturbations

__all__ = [
    "MppiController",
    "Perturbations",
    "RolloutBatch",
    "StepDiagnostics",
    "control_costs",
    "crash_indicator",
    "importance_weights",
    "mppi_update",
    "normal_streams",
    "running_cost",
    "running_costs",
    "sample_perturbations",
    "shift_sequence",
    "trajectory_cost",
    "trajectory_costs",
]
