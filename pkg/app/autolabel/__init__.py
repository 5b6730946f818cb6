from app.autolabel.crop import crop_template, extract_topdown_crop
from app.autolabel.dataset import PoseSample, emit_dataset, load_pose_log_csv, render_image_plane_labels
from app.autolabel.homography import (
    CameraModel,
    GroundHomography,
    Pose3,
    back_project_pixels,
    compose_homography,
    downward_camera,
    forward_camera,
    pose3_from_quaternion,
    project_ground_point,
    project_ground_points,
)

__all__ = [
    "CameraModel",
    "GroundHomography",
    "Pose3",
    "PoseSample",
    "back_project_pixels",
    "compose_homography",
    "crop_template",
    "downward_camera",
    "emit_dataset",
    "extract_topdown_crop",
    "forward_camera",
    "load_pose_log_csv",
    "pose3_from_quaternion",
    "project_ground_point",
    "project_ground_points",
    "render_image_plane_labels",
]
