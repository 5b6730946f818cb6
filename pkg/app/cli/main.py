"""
명령행 진입점

사용법:
    python -m app track-gen --radius 3.8
    python -m app simulate --config app/configs/oval.json --set target_speed=6
    python -m app sweep --targets 5,6,7,8 --directions ccw,cw
    python -m app dataset --config app/configs/dataset_oval.json
    python -m app ablate --set block_sizes=[10]
    python -m app plot --log runs/<run>/episode.csv --format png
    python -m app simulate --manifest runs/<run>/manifest.json

종료 코드: 0 성공, 1 사용법/설정 오류, 2 에피소드 실패
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, NoReturn, Optional

from pydantic import ValidationError

from app import config
from app.cli.commands import COMMANDS, EXIT_USAGE, command_seed
from app.cli.manifest import RunManifest, create_run_dir, load_manifest

logger = logging.getLogger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    """사용법 오류도 종료 코드 1 로 통일"""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: 오류: {message}\n")


def build_parser(settings: config.AppSettings) -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="python -m app", description="MPPI 코스트맵 주행 시뮬레이터")
    parser.add_argument("--log-level", default=settings.log_level, help="로그 레벨 (기본: MPPI_SIM_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    def common(p: argparse.ArgumentParser, config_help: Optional[str] = None):
        if config_help:
            p.add_argument("--config", help=config_help)
            p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="설정 override (반복 가능)")
        p.add_argument("--out", default=str(settings.runs_dir), help="run 디렉토리를 만들 상위 경로")
        p.add_argument("--manifest", help="이전 실행의 manifest.json 으로 재실행")
        p.add_argument("--config-dir", default=str(settings.config_dir), help=argparse.SUPPRESS)

    p = sub.add_parser("track-gen", help="중심선 + 월드 코스트맵 생성")
    common(p)
    p.add_argument("--shape", choices=["oval", "waypoints"], default="oval")
    p.add_argument("--straight", type=float, default=18.0, help="직선 길이 (m)")
    p.add_argument("--radius", type=float, default=3.8, help="회전 반경 (m)")
    p.add_argument("--half-width", type=float, default=1.5, help="트랙 반폭 (m)")
    p.add_argument("--spacing", type=float, default=0.25, help="꼭짓점 간격 (m)")
    p.add_argument("--waypoints", help="x,y 열을 가진 waypoint CSV")
    p.add_argument("--open", action="store_true", help="열린 중심선 (waypoints 전용)")
    p.add_argument("--resolution", type=float, default=config.DEFAULT_RESOLUTION)
    p.add_argument("--margin", type=float, default=config.DEFAULT_TRACK_MARGIN)

    p = sub.add_parser("simulate", help="폐루프 에피소드 1회 실행")
    common(p, "EpisodeConfig JSON (기본: oval.json)")
    p.add_argument("--workers", type=int, default=settings.workers, help="MPPI 롤아웃 스레드 수")

    p = sub.add_parser("sweep", help="목표 속도 스윕")
    common(p, "기준 EpisodeConfig JSON (기본: oval.json)")
    p.add_argument("--targets", default="5,6,7,8", help="쉼표 구분 목표 속도 (오름차순)")
    p.add_argument("--directions", help="쉼표 구분 방향 (ccw,cw). 기본: 설정 파일의 direction")
    p.add_argument("--workers", type=int, default=settings.workers, help="MPPI 롤아웃 스레드 수")

    p = sub.add_parser("dataset", help="오토라벨 데이터셋 생성")
    common(p, "DatasetConfig JSON (기본: dataset_oval.json)")

    p = sub.add_parser("ablate", help="블록 가림 민감도 맵 생성")
    common(p, "AblationConfig JSON (기본: ablate_oval.json)")

    p = sub.add_parser("plot", help="EpisodeLog CSV 궤적 플롯")
    common(p)
    p.add_argument("--log", help="EpisodeLog CSV 경로")
    p.add_argument("--track", help="중심선 JSON (기본: 기본 oval 트랙)")
    p.add_argument("--direction", choices=["ccw", "cw"], default="ccw")
    p.add_argument("--format", choices=["svg", "png"], default="svg")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        settings = config.get_settings()
    except (EnvironmentError, ValidationError) as e:
        print(f"❌ 환경 설정 오류: {e}", file=sys.stderr)
        return EXIT_USAGE

    args = build_parser(settings).parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    command = COMMANDS[args.command]

    try:
        if args.manifest:
            cfg = load_manifest(args.manifest, expected_command=args.command).config
        else:
            cfg = command.prepare(args)
        manifest = RunManifest(command=args.command, config=cfg, seed=command_seed(cfg), outputs=command.outputs(cfg))
    except (ValueError, OSError) as e:
        logger.error(f"❌ 설정 오류: {e}")
        return EXIT_USAGE

    run_dir = create_run_dir(Path(args.out), args.command)
    manifest.write(run_dir)
    logger.info(f"📁 run 디렉토리: {run_dir}")

    try:
        code = command.execute(cfg, run_dir)
    except (ValueError, OSError, RuntimeError) as e:
        logger.error(f"❌ 실행 오류: {e}")
        return EXIT_USAGE
    if code != 0:
        logger.warning(f"⚠️ '{args.command}' 종료 코드 {code}")
    return code
