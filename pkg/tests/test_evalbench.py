import numpy as np
import pytest
from PIL import Image

from app.costmap.grid import load_grid
from app.evalbench.ablation import AblationError, SensitivityMap, ablate, normalize_sensitivity, placements, write_pgm
from app.evalbench.calibration import PoseSet, calibrate_corruption, family_spec, scan_family
from app.evalbench.scoring import score, track_mask
from app.schemas import CropSpec
from app.utils import read_json


def _sensitivity(scores) -> SensitivityMap:
    scores = np.asarray(scores, dtype=float)
    rows, cols = np.arange(scores.shape[0]), np.arange(scores.shape[1])
    return SensitivityMap(scores, 2, 1, rows, cols, 1.0, 0.5)


# -------------------------------------------------------------------
# 점수
# -------------------------------------------------------------------


def test_perfect_prediction_scores_one():
    gt = np.random.default_rng(0).uniform(0.0, 0.9, size=(12, 12))
    assert score(gt, gt) == 1.0


def test_uniform_offset():
    gt = np.zeros((8, 8))
    assert score(gt + 0.25, gt, band_cells=0) == 0.75


def test_off_track_differences_ignored():
    gt = np.ones((20, 20))
    gt[:, :8] = 0.5
    pred = gt.copy()
    pred[:, 14:] = 0.0
    assert score(pred, gt, band_cells=2) == 1.0
    assert score(pred, gt, band_cells=10) < 1.0


def test_score_errors():
    with pytest.raises(ValueError):
        score(np.zeros((2, 2)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        score(np.ones((4, 4)), np.ones((4, 4)))


def test_track_mask_includes_band():
    gt = np.ones((10, 10))
    gt[:, :3] = 0.0
    mask = track_mask(gt, band_cells=2)
    assert mask[:, :5].all()
    assert not mask[:, 5:].any()


# -------------------------------------------------------------------
# ablation
# -------------------------------------------------------------------


def test_ablation_matches_brute_force():
    values = np.random.default_rng(3).uniform(0.0, 0.9, size=(16, 16))
    result = ablate(lambda x: x, values, block_size=4, stride=2)

    fill = values.mean()
    expected = np.empty((7, 7))
    for i, r in enumerate(range(0, 13, 2)):
        for j, c in enumerate(range(0, 13, 2)):
            ablated = values.copy()
            ablated[r : r + 4, c : c + 4] = fill
            expected[i, j] = 1.0 - np.mean(np.abs(ablated - values))
    np.testing.assert_allclose(result.scores, expected, rtol=0.0, atol=1e-12)
    assert result.baseline_score == 1.0
    np.testing.assert_array_equal(result.rows, np.arange(0, 13, 2))


def test_ablation_workers_do_not_change_result():
    values = np.random.default_rng(5).uniform(0.0, 0.9, size=(20, 20))
    a = ablate(lambda x: x, values, block_size=6, workers=1)
    b = ablate(lambda x: x, values, block_size=6, workers=3)
    np.testing.assert_array_equal(a.scores, b.scores)
    assert a.stride == 3


def test_constant_predictor_gives_uniform_map():
    constant = np.full((12, 12), 0.3)
    result = ablate(lambda x: constant, np.random.default_rng(1).uniform(size=(12, 12)), block_size=4)
    assert np.all(result.scores == result.scores[0, 0])
    assert not normalize_sensitivity(result).any()


def test_fill_equal_to_input_matches_baseline():
    values = np.full((12, 12), 0.4)
    result = ablate(lambda x: x * 0.5, values, block_size=4)
    np.testing.assert_array_equal(result.scores, np.full(result.scores.shape, result.baseline_score))


def test_ablation_error_carries_placement():
    def predictor(x):
        if x[0, 0] == 0.5:
            raise RuntimeError("boom")
        return x

    with pytest.raises(AblationError) as excinfo:
        ablate(predictor, np.zeros((8, 8)), block_size=2, fill_value=0.5)
    assert excinfo.value.placement == (0, 0)

    def broken(x):
        raise RuntimeError("always")

    with pytest.raises(AblationError) as excinfo:
        ablate(broken, np.zeros((8, 8)), block_size=2)
    assert excinfo.value.placement == (-1, -1)


def test_ablation_rejects_oversized_block():
    with pytest.raises(ValueError):
        ablate(lambda x: x, np.zeros((8, 8)), block_size=8)


def test_placements():
    np.testing.assert_array_equal(placements(10, 4, 2), [0, 2, 4, 6])
    np.testing.assert_array_equal(placements(10, 4, 3), [0, 3, 6])


# -------------------------------------------------------------------
# 정규화 / 파일 출력
# -------------------------------------------------------------------


def test_normalize_two_levels():
    image = normalize_sensitivity(_sensitivity([[1.0, 0.8], [0.8, 1.0]]))
    np.testing.assert_array_equal(image, [[0, 255], [255, 0]])
    assert image.dtype == np.uint8


def test_normalize_preserves_error_ranking():
    scores = np.random.default_rng(17).permutation(np.linspace(0.7, 1.0, 48)).reshape(6, 8)
    image = normalize_sensitivity(_sensitivity(scores)).astype(int).ravel()
    flat = scores.ravel()
    order = np.argsort(flat)
    # 점수가 낮을수록 (오차가 클수록) 밝다
    assert np.all(np.diff(image[order]) <= 0)
    assert image[order[0]] == 255
    assert image[order[-1]] == 0


def test_normalize_uniform_map_is_black():
    assert not normalize_sensitivity(_sensitivity(np.full((3, 4), 0.9))).any()


def test_write_pgm(tmp_path):
    image = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    path = write_pgm(image, tmp_path / "out.pgm")
    assert path.read_bytes()[:2] == b"P5"
    with Image.open(path) as loaded:
        assert loaded.mode == "L"
        np.testing.assert_array_equal(np.asarray(loaded), image)


def test_sensitivity_save(tmp_path):
    sensitivity = _sensitivity([[1.0, 0.9, 0.8]])
    sensitivity.save(tmp_path, "abl")
    grid = load_grid(tmp_path / "abl.json")
    np.testing.assert_allclose(grid.values, [[1.0, 0.9, 0.8]], atol=1e-7)
    report = read_json(tmp_path / "abl_report.json")
    assert report["block_size"] == 2
    assert report["min_score"] == pytest.approx(0.8)
    assert (tmp_path / "abl.pgm").exists()


# -------------------------------------------------------------------
# 손상 보정
# -------------------------------------------------------------------


@pytest.fixture(scope="module")
def pose_set(oval, oval_map) -> PoseSet:
    crop = CropSpec(longitudinal_cells=40, lateral_cells=48, resolution=0.125, x_min=-1.0, y_min=-3.0)
    return PoseSet.build(oval, oval_map, count=20, crop=crop)


def test_pose_set_build(pose_set):
    assert len(pose_set) == 20
    assert all(mask.any() for mask in pose_set.masks)


def test_calibrate_target_one_returns_identity(pose_set):
    spec = calibrate_corruption(1.0, "noise", pose_set)
    assert spec.is_identity()


def test_calibrate_noise_reaches_target(pose_set):
    spec = calibrate_corruption(0.92, "noise", pose_set)
    assert spec.noise_sigma > 0
    assert 0.91 <= pose_set.mean_score(spec) <= 0.93


def test_calibrate_unreachable_target(pose_set):
    with pytest.raises(ValueError):
        calibrate_corruption(0.01, "dropout", pose_set)
    with pytest.raises(ValueError):
        calibrate_corruption(0.0, "noise", pose_set)
    with pytest.raises(ValueError):
        calibrate_corruption(0.9, "fog", pose_set)


def test_scan_family_blur_lowers_score(pose_set):
    scanned = scan_family(pose_set, "blur", [0.0, 2.0, 8.0])
    scores = [s for _, s in scanned]
    assert scores[0] == 1.0
    assert scores[1] < 1.0 and scores[2] < 1.0


def test_family_spec():
    assert family_spec("dropout", 0.3).dropout_probability == 0.3
    with pytest.raises(ValueError):
        family_spec("fog", 1.0)
