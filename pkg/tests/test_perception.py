import math

import numpy as np
import pytest

from app.autolabel.crop import extract_topdown_crop
from app.costmap.grid import CostMapGrid, Pose2, lookup_costs
from app.perception.corruption import (
    apply_corruption,
    apply_fov_mask,
    block_dropout_mask,
    masked_gaussian_blur,
)
from app.perception.frame import CostmapFrame
from app.perception.provider import (
    CorruptedProvider,
    OracleProvider,
    get_provider_for_spec,
    image_plane_spec,
    top_down_spec,
)
from app.schemas import CorruptionSpec, CropSpec, ProviderSpec


def _body_frame(values, resolution=1.0, origin=Pose2(), pose=Pose2(), t=0.0) -> CostmapFrame:
    values = np.asarray(values, dtype=float)
    grid = CostMapGrid(values.shape[1], values.shape[0], resolution, origin, "body", values)
    return CostmapFrame(grid, pose, t)


def _crop_frame(world_map, pose: Pose2, crop: CropSpec) -> CostmapFrame:
    return CostmapFrame(extract_topdown_crop(world_map, pose, crop), pose, 0.0)


# -------------------------------------------------------------------
# CostmapFrame
# -------------------------------------------------------------------


def test_frame_requires_body_grid():
    grid = CostMapGrid(2, 2, 1.0, Pose2(), "world", np.zeros((2, 2)))
    with pytest.raises(ValueError):
        CostmapFrame(grid, Pose2(), 0.0)


def test_frame_mask_shape_checked():
    with pytest.raises(ValueError):
        _body_frame(np.zeros((2, 2))).replace(valid=np.ones((3, 3), dtype=bool))


def test_invalid_cells_read_as_max_cost():
    frame = _body_frame(np.zeros((3, 3)))
    valid = np.ones((3, 3), dtype=bool)
    valid[1, 1] = False
    masked = frame.replace(valid=valid)
    assert masked.lookup_body(np.array(1.5), np.array(1.5)) == 1.0
    assert masked.lookup_body(np.array(0.5), np.array(0.5)) == 0.0
    assert frame.lookup_body(np.array(1.5), np.array(1.5)) == 0.0


def test_lookup_world_goes_through_capture_pose():
    values = np.zeros((4, 4))
    values[0, 3] = 1.0
    frame = _body_frame(values, pose=Pose2(10.0, 5.0, math.pi / 2))
    # 차량 좌표 (3.5, 0.5) = 월드 (10 - 0.5, 5 + 3.5)
    assert float(frame.lookup_world(np.array(9.5), np.array(8.5))) == pytest.approx(1.0)
    assert frame.age(0.25) == 0.25


def _driving_pose(oval, speed: float = 5.0):
    """중심선을 speed m/s 로 달리는 차량의 시각 t pose"""
    return lambda t: oval.pose_at(speed * t / oval.length)


def test_stale_frame_matches_world_lookup(oval, oval_map):
    """10 Hz / 0.1 s 프로바이더가 넘긴 지난 프레임으로 조회해도 월드 직접 조회와 한 셀 이내로 일치"""
    crop = CropSpec()
    provider = OracleProvider(ProviderSpec(update_rate=10.0, latency=0.1), crop)
    pose_at_time = _driving_pose(oval)
    rng = np.random.default_rng(0)
    tolerance = crop.resolution / oval.half_width
    x_max = crop.x_min + crop.longitudinal_cells * crop.resolution
    y_max = crop.y_min + crop.lateral_cells * crop.resolution

    delivered = 0
    for i in range(100):
        now = i * 0.025
        frame = provider.provide(oval_map, pose_at_time(now), now)
        if frame is None:
            continue
        delivered += 1
        assert frame.age(now) >= 0.1 - 1e-9
        capture = frame.capture_pose
        local = np.column_stack(
            [
                rng.uniform(crop.x_min + crop.resolution, x_max - crop.resolution, 200),
                rng.uniform(crop.y_min + crop.resolution, y_max - crop.resolution, 200),
            ]
        )
        c, s = math.cos(capture.yaw), math.sin(capture.yaw)
        wx = capture.x + c * local[:, 0] - s * local[:, 1]
        wy = capture.y + s * local[:, 0] + c * local[:, 1]
        through_frame = frame.lookup_world(wx, wy)
        direct = lookup_costs(oval_map, wx, wy)
        assert np.max(np.abs(through_frame - direct)) <= tolerance
    # 0.1 s 지연 전 4 틱을 제외한 전부
    assert delivered == 96


# -------------------------------------------------------------------
# 손상
# -------------------------------------------------------------------


def test_identity_spec_returns_same_frame():
    frame = _body_frame(np.random.default_rng(0).uniform(size=(8, 8)))
    assert apply_corruption(frame, CorruptionSpec()) is frame
    assert apply_corruption(frame, CorruptionSpec(dropout_block=4, dropout_probability=0.0)) is frame


def test_full_dropout_invalidates_everything():
    frame = _body_frame(np.zeros((10, 10)))
    out = apply_corruption(frame, CorruptionSpec(dropout_block=3, dropout_probability=1.0))
    assert not out.valid.any()
    xs, ys = np.meshgrid(np.linspace(0.2, 9.8, 7), np.linspace(0.2, 9.8, 7))
    np.testing.assert_allclose(out.lookup_body(xs, ys), 1.0, rtol=0.0, atol=1e-12)


def test_blur_preserves_constant_map():
    frame = _body_frame(np.full((20, 20), 0.37))
    out = apply_corruption(frame, CorruptionSpec(blur_sigma=2.5))
    np.testing.assert_allclose(out.grid.values, 0.37, rtol=0.0, atol=1e-6)


def test_masked_blur_ignores_invalid_cells():
    values = np.full((9, 9), 0.2)
    values[:, 6:] = 0.9
    valid = np.ones((9, 9), dtype=bool)
    valid[:, 6:] = False
    out = masked_gaussian_blur(values, 2.0, valid)
    np.testing.assert_allclose(out[:, :6], 0.2, atol=1e-12)
    np.testing.assert_array_equal(out[:, 6:], values[:, 6:])


def test_noise_is_seeded_and_clipped():
    frame = _body_frame(np.full((16, 16), 0.5))
    spec = CorruptionSpec(noise_sigma=0.8, seed=3)
    a = apply_corruption(frame, spec)
    b = apply_corruption(frame, spec)
    c = apply_corruption(frame, spec, seed=4)
    np.testing.assert_array_equal(a.grid.values, b.grid.values)
    assert not np.array_equal(a.grid.values, c.grid.values)
    assert a.grid.values.min() >= 0.0 and a.grid.values.max() <= 1.0
    assert a.grid.values.min() == 0.0 and a.grid.values.max() == 1.0


def test_corruption_only_shrinks_validity():
    frame = _body_frame(np.zeros((12, 12))).replace(valid=np.tri(12, dtype=bool))
    out = apply_corruption(frame, CorruptionSpec(blur_sigma=1.0, noise_sigma=0.1, dropout_block=2, dropout_probability=0.5, seed=9))
    assert not np.any(out.valid & ~frame.valid)


def test_block_dropout_is_grid_aligned():
    mask = block_dropout_mask((10, 7), 3, 0.5, np.random.default_rng(1))
    assert mask.shape == (10, 7)
    for r0 in range(0, 10, 3):
        for c0 in range(0, 7, 3):
            block = mask[r0 : r0 + 3, c0 : c0 + 3]
            assert block.all() or not block.any()


def test_fov_full_half_angle_with_apex_behind_keeps_all():
    frame = _crop_frame_template()
    out = apply_fov_mask(frame, math.pi / 2, camera_offset=-2.0)
    assert out.valid.all()


def test_fov_never_masks_cells_on_axis():
    # 셀 중심 y = 0 인 행이 있는 5x5 그리드
    frame = _body_frame(np.zeros((5, 5)), origin=Pose2(-0.5, -2.5, 0.0))
    out = apply_fov_mask(frame, 0.01, camera_offset=-1.0)
    assert out.valid[2].all()
    assert not out.valid[0].any()


def test_fov_valid_fraction_matches_cone_area():
    # 10 m x 20 m 차량 좌표 그리드, 0.02 m 셀
    frame = _body_frame(np.zeros((1000, 500)), resolution=0.02, origin=Pose2(0.0, -10.0, 0.0))
    for half_angle, offset in ((0.5, 0.0), (math.pi / 4, 2.0), (0.2, -1.0)):
        out = apply_fov_mask(frame, half_angle, camera_offset=offset)
        # x 가 [max(0, offset), 10] 인 구간의 원뿔 넓이, 원뿔은 |y| < 10 안에 있음
        start = max(0.0, offset)
        cone = math.tan(half_angle) * ((10.0 - offset) ** 2 - (start - offset) ** 2)
        assert out.valid.mean() == pytest.approx(cone / 200.0, rel=0.02)


def test_fov_masks_cells_behind_apex():
    frame = _crop_frame_template()
    out = apply_fov_mask(frame, 0.55, camera_offset=0.3)
    centers = frame.grid.cell_centers()
    assert not out.valid[centers[..., 0] <= 0.3].any()


def test_fov_rejects_bad_half_angle():
    frame = _body_frame(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        apply_fov_mask(frame, 0.0)
    with pytest.raises(ValueError):
        apply_fov_mask(frame, 2.0)


def _crop_frame_template() -> CostmapFrame:
    crop = CropSpec(longitudinal_cells=32, lateral_cells=40, resolution=0.25, x_min=-1.0, y_min=-5.0)
    grid = CostMapGrid(32, 40, 0.25, Pose2(crop.x_min, crop.y_min, 0.0), "body", np.zeros((40, 32)))
    return CostmapFrame(grid, Pose2(), 0.0)


# -------------------------------------------------------------------
# 프로바이더
# -------------------------------------------------------------------


def test_no_frame_before_first_delivery(oval_map, small_crop):
    provider = OracleProvider(ProviderSpec(update_rate=10.0, latency=0.1), small_crop)
    assert provider.provide(oval_map, Pose2(), 0.0) is None
    assert provider.provide(oval_map, Pose2(), 0.05) is None
    assert provider.provide(oval_map, Pose2(), 0.1).capture_time == 0.0


def test_schedule_with_latency(oval_map, small_crop):
    provider = OracleProvider(ProviderSpec(update_rate=10.0, latency=0.1), small_crop)
    assert provider.provide(oval_map, Pose2(), 0.0) is None
    frame = provider.provide(oval_map, Pose2(), 0.15)
    assert frame.capture_time == 0.0


def test_zero_latency_on_tick(oval_map, small_crop):
    provider = OracleProvider(ProviderSpec(update_rate=40.0, latency=0.0), small_crop)
    for i in range(5):
        frame = provider.provide(oval_map, Pose2(), i * 0.025)
        assert frame.capture_time == pytest.approx(i * 0.025)


def test_frame_held_between_updates(oval_map, small_crop):
    provider = OracleProvider(ProviderSpec(update_rate=10.0, latency=0.1), small_crop)
    pose_a, pose_b = Pose2(0.0, -3.8, 0.0), Pose2(1.0, -3.8, 0.0)
    provider.provide(oval_map, pose_a, 0.0)
    first = provider.provide(oval_map, pose_b, 0.125)
    second = provider.provide(oval_map, pose_b, 0.175)
    assert first is second
    assert first.capture_pose == pose_a
    # 0.1 틱은 0.125 호출에서 pose_b 로 캡처되어 0.225 에 전달
    assert provider.provide(oval_map, pose_b, 0.2) is first
    third = provider.provide(oval_map, pose_b, 0.225)
    assert third.capture_time == 0.125
    assert third.capture_pose == pose_b


def test_missed_ticks_are_stamped_with_pose_time(oval, oval_map, small_crop):
    """40 Hz 로 나누어지지 않는 15 Hz 에서도 capture_pose 는 capture_time 의 pose"""
    provider = OracleProvider(ProviderSpec(update_rate=15.0, latency=0.05), small_crop)
    pose_at_time = _driving_pose(oval)
    frames = {}
    for i in range(80):
        now = i * 0.025
        frame = provider.provide(oval_map, pose_at_time(now), now)
        if frame is not None:
            assert frame.capture_time + 0.05 <= now + 1e-9
            frames[frame.capture_time] = frame
    assert len(frames) >= 20
    for capture_time, frame in frames.items():
        expected = pose_at_time(capture_time)
        assert frame.capture_pose.x == pytest.approx(expected.x, abs=1e-9)
        assert frame.capture_pose.y == pytest.approx(expected.y, abs=1e-9)


def test_reset_clears_schedule(oval_map, small_crop):
    provider = OracleProvider(ProviderSpec(update_rate=40.0, latency=0.0), small_crop)
    provider.provide(oval_map, Pose2(), 1.0)
    provider.reset()
    assert provider.provide(oval_map, Pose2(), 0.0).capture_time == 0.0


def test_corrupted_provider_is_deterministic(oval, oval_map, small_crop):
    spec = ProviderSpec(
        kind="corrupted",
        update_rate=20.0,
        corruption=CorruptionSpec(noise_sigma=0.2, dropout_block=4, dropout_probability=0.3, seed=11),
    )
    frames = []
    for _ in range(2):
        provider = get_provider_for_spec(spec, small_crop)
        assert isinstance(provider, CorruptedProvider)
        frames.append([provider.provide(oval_map, oval.pose_at(0.0), t) for t in (0.0, 0.05, 0.1)])
    for a, b in zip(*frames):
        np.testing.assert_array_equal(a.grid.values, b.grid.values)
        np.testing.assert_array_equal(a.valid, b.valid)
    # 틱마다 다른 시드
    assert not np.array_equal(frames[0][0].grid.values, frames[0][1].grid.values)


def test_image_plane_spec_masks_fov(oval, oval_map):
    provider = get_provider_for_spec(image_plane_spec())
    assert provider.label == "IP"
    assert provider.provide(oval_map, oval.pose_at(0.0), 0.0) is None
    frame = provider.provide(oval_map, oval.pose_at(0.0), 0.1)
    assert frame is not None
    assert 0 < frame.valid.sum() < frame.valid.size


def test_top_down_spec():
    spec = top_down_spec()
    assert (spec.kind, spec.label, spec.update_rate, spec.latency) == ("oracle", "TD", 40.0, 0.025)
    assert top_down_spec(blur_sigma=1.0).kind == "corrupted"


def test_oracle_ignores_corruption(caplog):
    spec = ProviderSpec(kind="oracle", corruption=CorruptionSpec(noise_sigma=0.5))
    with caplog.at_level("WARNING"):
        provider = get_provider_for_spec(spec)
    assert type(provider) is OracleProvider
    assert "corruption" in caplog.text
