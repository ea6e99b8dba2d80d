# app/renderers.py
"""
Self-contained SVG overlays: shapes, force arrows, triangulations.

Styles are inline; no timestamps or external assets, so identical inputs
render byte-identical files.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from pipelines.geometry import Polygon, PolygonSet

CANVAS_PX = 640
MARGIN_PX = 40
ARROW_FRACTION = 0.12  # longest arrow relative to the drawing diagonal

SOURCE_STYLE = "fill:#4C78A8;fill-opacity:0.25;stroke:#1F4E79;stroke-width:1.5"
DEFORMED_STYLE = "fill:#4C78A8;fill-opacity:0.35;stroke:#1F4E79;stroke-width:1.5"
TARGET_STYLE = "fill:#F58518;fill-opacity:0.25;stroke:#B3590B;stroke-width:1.5"
REGION_STYLE = "fill:#E45756;fill-opacity:0.5;fill-rule:evenodd;stroke:#9D2A29;stroke-width:1"
MESH_STYLE = "fill:none;stroke:#555555;stroke-width:0.6"
ARROW_STYLE = "stroke:#1B3FD1;stroke-width:1.4;fill:none"
ALT_ARROW_STYLE = "stroke:#2CA02C;stroke-width:1.4;fill:none"
TEXT_STYLE = "font-family:monospace;font-size:12px;fill:#222222"


def _fmt(v: float) -> str:
    return f"{v:.3f}"


class SvgCanvas:
    """Maps world coordinates (y up) onto a fixed-size SVG viewport."""

    def __init__(self, points: np.ndarray, size: int = CANVAS_PX, margin: int = MARGIN_PX) -> None:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = float(max(hi[0] - lo[0], hi[1] - lo[1])) or 1.0
        self.lo, self.hi = lo, hi
        self.size = size
        self.margin = margin
        self.px_per_unit = (size - 2 * margin) / span
        self.world_diagonal = float(np.hypot(*(hi - lo))) or 1.0
        self._body: list[str] = []

    def xy(self, p: Sequence[float]) -> tuple[float, float]:
        x = self.margin + (p[0] - self.lo[0]) * self.px_per_unit
        y = self.size - self.margin - (p[1] - self.lo[1]) * self.px_per_unit
        return x, y

    def _path(self, rings: Sequence[np.ndarray]) -> str:
        parts = []
        for ring in rings:
            pts = [self.xy(p) for p in ring]
            parts.append("M " + " L ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts) + " Z")
        return " ".join(parts)

    def polygon(self, p: Polygon, style: str) -> None:
        self._body.append(f'<path d="{self._path([p.vertices])}" style="{style}"/>')

    def polygon_set(self, s: PolygonSet, style: str) -> None:
        if s.is_empty:
            return
        d = self._path([r.polygon.vertices for r in s.rings])
        self._body.append(f'<path d="{d}" style="{style};fill-rule:evenodd"/>')

    def triangles(self, nodes: np.ndarray, tris: np.ndarray, style: str = MESH_STYLE) -> None:
        d = self._path([nodes[t] for t in tris])
        self._body.append(f'<path d="{d}" style="{style}"/>')

    def arrows(self, origins: np.ndarray, vectors: np.ndarray, scale: float, style: str = ARROW_STYLE) -> None:
        """Arrows of length scale * |v| in world units, with a small head."""
        for o, v in zip(np.asarray(origins, dtype=float), np.asarray(vectors, dtype=float)):
            tip = o + scale * v
            x0, y0 = self.xy(o)
            x1, y1 = self.xy(tip)
            length = float(np.hypot(x1 - x0, y1 - y0))
            if length < 0.5:
                continue
            ux, uy = (x1 - x0) / length, (y1 - y0) / length
            head = min(6.0, 0.4 * length)
            hx1, hy1 = x1 - head * (ux - 0.5 * uy), y1 - head * (uy + 0.5 * ux)
            hx2, hy2 = x1 - head * (ux + 0.5 * uy), y1 - head * (uy - 0.5 * ux)
            self._body.append(
                f'<path d="M {_fmt(x0)},{_fmt(y0)} L {_fmt(x1)},{_fmt(y1)} '
                f'M {_fmt(hx1)},{_fmt(hy1)} L {_fmt(x1)},{_fmt(y1)} L {_fmt(hx2)},{_fmt(hy2)}" style="{style}"/>'
            )

    def text(self, line: int, content: str) -> None:
        self._body.append(f'<text x="8" y="{16 + 14 * line}" style="{TEXT_STYLE}">{content}</text>')

    def render(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" height="{self.size}" '
            f'viewBox="0 0 {self.size} {self.size}">'
        )
        background = f'<rect x="0" y="0" width="{self.size}" height="{self.size}" style="fill:#FFFFFF"/>'
        return "\n".join([head, background, *self._body, "</svg>"]) + "\n"


def arrow_scale(vectors: np.ndarray, world_diagonal: float) -> float:
    """World length per unit of force so the longest arrow spans ARROW_FRACTION of the drawing."""
    mags = np.linalg.norm(np.asarray(vectors, dtype=float).reshape(-1, 2), axis=1)
    top = float(mags.max()) if mags.size else 0.0
    return ARROW_FRACTION * world_diagonal / top if top > 0 else 0.0


def _all_points(*shapes) -> np.ndarray:
    pts = []
    for s in shapes:
        if s is None:
            continue
        if isinstance(s, Polygon):
            pts.append(s.vertices)
        elif isinstance(s, PolygonSet):
            pts.extend(r.polygon.vertices for r in s.rings)
        else:
            pts.append(np.asarray(s, dtype=float).reshape(-1, 2))
    return np.vstack(pts)


def render_overlay(
    shape: Polygon,
    target: PolygonSet,
    forces: Optional[np.ndarray] = None,
    title: str = "",
    deformed: bool = False,
    alt_forces: Optional[np.ndarray] = None,
    alt_label: str = "",
) -> str:
    """Source (or deformed source) over the target, with force arrows at the vertices."""
    canvas = SvgCanvas(_all_points(shape, target))
    canvas.polygon_set(target, TARGET_STYLE)
    canvas.polygon(shape, DEFORMED_STYLE if deformed else SOURCE_STYLE)
    lines = [title] if title else []
    if forces is not None:
        scale = arrow_scale(forces if alt_forces is None else np.vstack([forces, alt_forces]), canvas.world_diagonal)
        canvas.arrows(shape.vertices, forces, scale)
        if alt_forces is not None:
            canvas.arrows(shape.vertices, alt_forces, scale, ALT_ARROW_STYLE)
        lines.append(f"arrow scale: 1 force unit = {scale:.6g} length units")
        if alt_label:
            lines.append(f"green: {alt_label}")
    for i, line in enumerate(lines):
        canvas.text(i, line)
    return canvas.render()


def render_region(a: PolygonSet, b: PolygonSet, region: PolygonSet, title: str = "") -> str:
    canvas = SvgCanvas(_all_points(a, b))
    canvas.polygon_set(a, SOURCE_STYLE)
    canvas.polygon_set(b, TARGET_STYLE)
    canvas.polygon_set(region, REGION_STYLE)
    if title:
        canvas.text(0, title)
    return canvas.render()


def render_mesh(nodes: np.ndarray, triangles: np.ndarray, title: str = "") -> str:
    canvas = SvgCanvas(nodes)
    canvas.triangles(np.asarray(nodes, dtype=float), np.asarray(triangles))
    if title:
        canvas.text(0, title)
    return canvas.render()
