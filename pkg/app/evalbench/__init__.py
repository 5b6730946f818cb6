from app.evalbench.ablation import AblationError, SensitivityMap, ablate, normalize_sensitivity, write_pgm
from app.evalbench.calibration import PoseSet, calibrate_corruption, family_spec, graded_provider_spec, scan_family
from app.evalbench.scoring import score, track_mask

__all__ = [
    "AblationError",
    "PoseSet",
    "SensitivityMap",
    "ablate",
    "calibrate_corruption",
    "family_spec",
    "graded_provider_spec",
    "normalize_sensitivity",
    "scan_family",
    "score",
    "track_mask",
    "write_pgm",
]
