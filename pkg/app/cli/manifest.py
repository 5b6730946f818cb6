"""
RunManifest: 실행 재현 정보

계산 결과보다 먼저 run 디렉토리에 기록된다. --manifest 로 다시 실행하면 같은 출력이 나온다.
"""

from __future__ import annotations

from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from app import config
from app.utils import read_json, write_json

MANIFEST_NAME = "manifest.json"


class RunManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str
    config: Dict[str, Any]
    seed: Optional[int] = None
    tool_version: str = config.TOOL_VERSION
    outputs: List[str] = Field(default_factory=list)  # run 디렉토리 기준 상대 경로

    def write(self, run_dir: Union[str, Path]) -> Path:
        return write_json(Path(run_dir) / MANIFEST_NAME, self.model_dump(mode="json"))


def load_manifest(path: Union[str, Path], expected_command: Optional[str] = None) -> RunManifest:
    """
    Raises:
        FileNotFoundError: 파일이 없는 경우
        ValueError: 형식 오류이거나 다른 명령의 manifest 인 경우
    """
    manifest = RunManifest.model_validate(read_json(path))
    if expected_command and manifest.command != expected_command:
        raise ValueError(f"'{manifest.command}' 명령의 manifest 입니다 (요청: '{expected_command}').")
    if manifest.tool_version != config.TOOL_VERSION:
        raise ValueError(f"manifest 버전 {manifest.tool_version} 이 현재 버전 {config.TOOL_VERSION} 과 다릅니다.")
    return manifest


def create_run_dir(runs_dir: Union[str, Path], command: str) -> Path:
    """runs_dir/<YYYYmmdd-HHMMSS-ffffff>_<command> 생성"""
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S-%f")
    run_dir = Path(runs_dir) / f"{stamp}_{command}"
    run_dir.mkdir(parents=True, exist_ok=False)
    return run_dir
