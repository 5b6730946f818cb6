from app.perception.corruption import apply_corruption, apply_fov_mask, masked_gaussian_blur
from app.perception.frame import CostmapFrame
from app.perception.provider import (
    CorruptedProvider,
    OracleProvider,
    get_provider_for_spec,
    image_plane_spec,
    top_down_spec,
)

__all__ = [
    "CorruptedProvider",
    "CostmapFrame",
    "OracleProvider",
    "apply_corruption",
    "apply_fov_mask",
    "get_provider_for_spec",
    "image_plane_spec",
    "masked_gaussian_blur",
    "top_down_spec",
]
