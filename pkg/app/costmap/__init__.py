from app.costmap.grid import (
    CostMapGrid,
    Pose2,
    edge_band_mask,
    load_grid,
    lookup_cost,
    lookup_costs,
    save_grid,
    transform_point,
    transform_points,
)
from app.costmap.track import (
    Centerline,
    build_track_costmap,
    centerline_from_waypoints,
    check_self_intersection,
    distance_to_centerline,
    load_waypoints_csv,
    make_oval_centerline,
)

__all__ = [
    "Centerline",
    "CostMapGrid",
    "Pose2",
    "build_track_costmap",
    "centerline_from_waypoints",
    "check_self_intersection",
    "distance_to_centerline",
    "edge_band_mask",
    "load_grid",
    "load_waypoints_csv",
    "lookup_cost",
    "lookup_costs",
    "make_oval_centerline",
    "save_grid",
    "transform_point",
    "transform_points",
]
