"""
CLI 명령 구현

각 명령은 두 단계로 나뉜다.
  - prepare(args)      : 파일 + --set override 를 읽어 완전히 해석된 설정 dict 생성
  - execute(cfg, dir)  : 설정 dict 만으로 계산 후 run 디렉토리에 출력, 종료 코드 반환
--manifest 재실행은 prepare 를 건너뛰고 manifest 의 설정 dict 로 execute 한다.
"""

from __future__ import annotations

import argparse
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from app.autolabel.crop import extract_topdown_crop
from app.autolabel.dataset import emit_dataset, load_pose_log_csv
from app.autolabel.homography import CameraModel
from app.costmap.grid import save_grid
from app.costmap.track import (
    Centerline,
    build_track_costmap,
    centerline_from_waypoints,
    load_waypoints_csv,
    make_oval_centerline,
)
from app.evalbench.ablation import ablate
from app.perception.corruption import masked_gaussian_blur
from app.schemas import AblationConfig, DatasetConfig, EpisodeConfig, MppiParams, VehicleParams, load_model
from app.sim.episode import load_episode_csv, run_episode
from app.sim.sweep import speed_sweep, write_sweep_csv
from app.cli.plot import render_trajectory

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


@dataclass(frozen=True)
class Command:
    prepare: Callable[[argparse.Namespace], Dict[str, Any]]
    execute: Callable[[Dict[str, Any], Path], int]
    outputs: Callable[[Dict[str, Any]], List[str]]


def _config_path(args: argparse.Namespace, default_name: str) -> Path:
    if args.config:
        return Path(args.config)
    return Path(args.config_dir) / default_name


def _dump(model) -> Dict[str, Any]:
    return model.model_dump(mode="json", by_alias=True)


# -------------------------------------------------------------------
# track-gen
# -------------------------------------------------------------------


def prepare_track_gen(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "shape": args.shape,
        "straight": args.straight,
        "radius": args.radius,
        "half_width": args.half_width,
        "spacing": args.spacing,
        "waypoints": str(Path(args.waypoints).resolve()) if args.waypoints else None,
        "closed": not args.open,
        "resolution": args.resolution,
        "margin": args.margin,
    }


def execute_track_gen(cfg: Dict[str, Any], run_dir: Path) -> int:
    if cfg["shape"] == "oval":
        centerline = make_oval_centerline(cfg["straight"], cfg["radius"], cfg["half_width"], cfg["spacing"])
    else:
        if not cfg["waypoints"]:
            raise ValueError("--shape waypoints 에는 --waypoints CSV 경로가 필요합니다.")
        points = load_waypoints_csv(cfg["waypoints"])
        centerline = centerline_from_waypoints(points, cfg["closed"], cfg["half_width"])

    world_map = build_track_costmap(centerline, cfg["resolution"], cfg["margin"])
    centerline.save(run_dir / "centerline.json")
    save_grid(world_map, run_dir / "world_costmap.json")
    logger.info(f"✅ 트랙 생성: 둘레 {centerline.length:.2f} m, 꼭짓점 {len(centerline.vertices)}개 → {run_dir}")
    return EXIT_OK


# -------------------------------------------------------------------
# simulate / sweep
# -------------------------------------------------------------------


def prepare_simulate(args: argparse.Namespace) -> Dict[str, Any]:
    path = _config_path(args, "oval.json")
    episode = load_model(EpisodeConfig, path, args.set).resolve_paths(path.parent)
    resolved = {
        "vehicle": _dump(load_model(VehicleParams, episode.vehicle)),
        "mppi": _dump(load_model(MppiParams, episode.mppi)),
    }
    if episode.plant:
        resolved["plant"] = _dump(load_model(VehicleParams, episode.plant))
    cfg: Dict[str, Any] = {"episode": _dump(episode), "resolved": resolved, "workers": args.workers}
    if getattr(args, "targets", None) is not None:
        cfg["targets"] = [float(t) for t in args.targets.split(",") if t.strip()]
        directions = args.directions or episode.direction
        cfg["directions"] = [d.strip() for d in directions.split(",") if d.strip()]
    return cfg


def _runner_kwargs(cfg: Dict[str, Any]) -> Dict[str, Any]:
    resolved = cfg["resolved"]
    mppi = MppiParams.model_validate(resolved["mppi"]).model_copy(update={"workers": int(cfg.get("workers") or 1)})
    return {"mppi_params": mppi, "vehicle_params": VehicleParams.model_validate(resolved["vehicle"])}


def execute_simulate(cfg: Dict[str, Any], run_dir: Path) -> int:
    episode = EpisodeConfig.model_validate(cfg["episode"])
    log = run_episode(episode, **_runner_kwargs(cfg))
    log.write(run_dir, "episode")
    return EXIT_FAILURE if log.failed else EXIT_OK


def execute_sweep(cfg: Dict[str, Any], run_dir: Path) -> int:
    episode = EpisodeConfig.model_validate(cfg["episode"])
    kwargs = _runner_kwargs(cfg)
    rows = speed_sweep(episode, cfg["targets"], cfg["directions"], **kwargs)
    write_sweep_csv(rows, run_dir / "sweep.csv")
    return EXIT_OK


# -------------------------------------------------------------------
# dataset / ablate
# -------------------------------------------------------------------


def prepare_dataset(args: argparse.Namespace) -> Dict[str, Any]:
    path = _config_path(args, "dataset_oval.json")
    dataset = load_model(DatasetConfig, path, args.set).resolve_paths(path.parent)
    return {"dataset": _dump(dataset)}


def execute_dataset(cfg: Dict[str, Any], run_dir: Path) -> int:
    ds = DatasetConfig.model_validate(cfg["dataset"])
    centerline = Centerline.load(ds.track)
    world_map = build_track_costmap(centerline, ds.world_resolution, ds.world_margin)
    emit_dataset(
        load_pose_log_csv(ds.poses),
        world_map,
        CameraModel.from_config(ds.camera),
        run_dir / "dataset",
        crop=ds.crop,
        band_cells=ds.edge_band_cells,
        workers=ds.workers,
    )
    # 빈 pose 로그는 0 쌍 결과 (emit_dataset 이 경고를 남김)
    return EXIT_OK


def prepare_ablate(args: argparse.Namespace) -> Dict[str, Any]:
    path = _config_path(args, "ablate_oval.json")
    ablation = load_model(AblationConfig, path, args.set).resolve_paths(path.parent)
    return {"ablation": _dump(ablation)}


def execute_ablate(cfg: Dict[str, Any], run_dir: Path) -> int:
    ab = AblationConfig.model_validate(cfg["ablation"])
    centerline = Centerline.load(ab.track)
    world_map = build_track_costmap(centerline, ab.world_resolution, ab.world_margin)
    crop = extract_topdown_crop(world_map, centerline.pose_at(ab.pose_fraction), ab.crop)

    if ab.predictor == "blur":
        predictor = lambda values: masked_gaussian_blur(values, ab.predictor_blur_sigma)  # noqa: E731
    else:
        predictor = lambda values: values  # noqa: E731

    save_grid(crop, run_dir / "input.json")
    for block in ab.block_sizes:
        sensitivity = ablate(
            predictor,
            crop,
            block,
            fill_value=ab.fill_value,
            stride=ab.stride,
            band_cells=ab.edge_band_cells,
            workers=ab.workers,
        )
        sensitivity.save(run_dir, f"sensitivity_b{block}")
    return EXIT_OK


# -------------------------------------------------------------------
# plot
# -------------------------------------------------------------------


def prepare_plot(args: argparse.Namespace) -> Dict[str, Any]:
    if not args.log:
        raise ValueError("plot 명령에는 --log (EpisodeLog CSV) 가 필요합니다.")
    track = Path(args.track) if args.track else Path(args.config_dir) / "tracks" / "oval.json"
    return {
        "log": str(Path(args.log).resolve()),
        "track": str(track.resolve()),
        "format": args.format,
        "direction": args.direction,
    }


def execute_plot(cfg: Dict[str, Any], run_dir: Path) -> int:
    centerline = Centerline.load(cfg["track"])
    if cfg.get("direction") == "cw":
        centerline = centerline.reversed()
    out = render_trajectory(load_episode_csv(cfg["log"]), centerline, run_dir / f"trajectory.{cfg['format']}", cfg["format"])
    logger.info(f"✅ 궤적 플롯 저장: {out}")
    return EXIT_OK


COMMANDS: Dict[str, Command] = {
    "track-gen": Command(prepare_track_gen, execute_track_gen, lambda c: ["centerline.json", "world_costmap.json", "world_costmap.f32"]),
    "simulate": Command(prepare_simulate, execute_simulate, lambda c: ["episode.csv", "episode_summary.json"]),
    "sweep": Command(prepare_simulate, execute_sweep, lambda c: ["sweep.csv"]),
    "dataset": Command(prepare_dataset, execute_dataset, lambda c: ["dataset/"]),
    "ablate": Command(
        prepare_ablate,
        execute_ablate,
        lambda c: ["input.json", "input.f32"]
        + [f"sensitivity_b{b}{ext}" for b in c["ablation"]["block_sizes"] for ext in (".json", ".f32", ".pgm", "_report.json")],
    ),
    "plot": Command(prepare_plot, execute_plot, lambda c: [f"trajectory.{c['format']}"]),
}


def command_seed(cfg: Dict[str, Any]) -> Optional[int]:
    episode = cfg.get("episode")
    return int(episode["seed"]) if episode else None
