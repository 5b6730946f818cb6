"""
주행 궤적 플롯 (트랙 외곽선 + 속력 색상 점)

SVG 는 직접 문자열로, PNG 는 Pillow ImageDraw 로 그린다.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Union

import numpy as np
from PIL import Image, ImageDraw

from app.costmap.track import Centerline

CANVAS = 900  # px
PADDING = 30  # px


def _track_edges(centerline: Centerline) -> List[np.ndarray]:
    """중심선을 반폭만큼 좌우로 이동한 경계선 두 개"""
    pts = centerline.points()
    nxt = np.roll(pts, -1, axis=0) if centerline.closed else np.vstack([pts[1:], pts[-1:] + (pts[-1] - pts[-2])])
    tangent = nxt - pts
    tangent /= np.linalg.norm(tangent, axis=1, keepdims=True)
    normal = np.column_stack([-tangent[:, 1], tangent[:, 0]])
    return [pts + normal * centerline.half_width, pts - normal * centerline.half_width]


def speed_color(speed: np.ndarray, vmax: float) -> np.ndarray:
    """0 → 파랑, vmax → 빨강 선형 보간 (uint8 RGB)"""
    f = np.clip(np.asarray(speed, dtype=float) / max(vmax, 1e-9), 0.0, 1.0)[:, None]
    blue, red = np.array([40, 80, 220]), np.array([230, 40, 30])
    return np.rint(blue * (1 - f) + red * f).astype(np.uint8)


class _Viewport:
    def __init__(self, points: np.ndarray):
        lo, hi = points.min(axis=0), points.max(axis=0)
        self.lo = lo
        self.scale = (CANVAS - 2 * PADDING) / max(float(np.max(hi - lo)), 1e-9)
        self.height = int(np.ceil((hi[1] - lo[1]) * self.scale)) + 2 * PADDING
        self.width = int(np.ceil((hi[0] - lo[0]) * self.scale)) + 2 * PADDING

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        px = (pts[:, 0] - self.lo[0]) * self.scale + PADDING
        py = self.height - ((pts[:, 1] - self.lo[1]) * self.scale + PADDING)
        return np.column_stack([px, py])


def render_trajectory(
    log: Dict[str, np.ndarray],
    centerline: Centerline,
    path: Union[str, Path],
    fmt: str = "svg",
) -> Path:
    """
    Raises:
        ValueError: 지원하지 않는 형식이거나 로그가 빈 경우
    """
    if fmt not in ("svg", "png"):
        raise ValueError(f"지원하지 않는 플롯 형식: {fmt} (svg | png)")
    if len(log.get("px", [])) == 0:
        raise ValueError("에피소드 로그에 기록이 없습니다.")

    traj = np.column_stack([log["px"], log["py"]])
    edges = _track_edges(centerline)
    view = _Viewport(np.vstack([traj] + edges))
    colors = speed_color(log["speed"], float(np.max(log["speed"])))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    if fmt == "png":
        image = Image.new("RGB", (view.width, view.height), "white")
        draw = ImageDraw.Draw(image)
        for edge in edges:
            xy = [tuple(p) for p in view(edge)]
            draw.line(xy + ([xy[0]] if centerline.closed else []), fill=(60, 60, 60), width=2)
        for (x, y), c in zip(view(traj), colors):
            draw.ellipse([x - 1.5, y - 1.5, x + 1.5, y + 1.5], fill=tuple(int(v) for v in c))
        image.save(path, format="PNG")
        return path

    lines: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{view.width}" height="{view.height}" '
        f'viewBox="0 0 {view.width} {view.height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for edge in edges:
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in view(edge))
        tag = "polygon" if centerline.closed else "polyline"
        lines.append(f'<{tag} points="{pts}" fill="none" stroke="#3c3c3c" stroke-width="2"/>')
    for (x, y), c in zip(view(traj), colors):
        lines.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.5" fill="rgb({c[0]},{c[1]},{c[2]})"/>')
    lines.append("</svg>")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path

