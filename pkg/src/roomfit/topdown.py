"""Top-down vector drawings of scenes (SVG).

Renders the floor polygon, derived walls, object footprints (optionally with
ground-truth footprints grayed underneath), attachment links, and collision
markers, mirroring a bird's-eye debugging view of the arrangement.
"""

from __future__ import annotations

import numpy as np

from .collision import sat_profile
from .relations import RelationSet
from .scene import Scene, footprint

_PALETTE = (
    "#4477aa", "#66ccee", "#228833", "#ccbb44", "#ee6677",
    "#aa3377", "#bbbbbb", "#994455", "#6699cc", "#997700",
)


def _color(category: str) -> str:
    return _PALETTE[hash(category) % len(_PALETTE)]


def _polyline(points: np.ndarray, to_px) -> str:
    return " ".join(f"{x:.2f},{z:.2f}" for x, z in (to_px(p) for p in points))


def render_topdown_svg(
    scene: Scene,
    relations: RelationSet | None = None,
    reference: Scene | None = None,
    width_px: int = 640,
) -> str:
    """SVG string of the scene seen from above (x right, z up)."""
    poly = scene.layout.polygon_array()
    margin = 0.5
    lo = poly.min(axis=0) - margin
    hi = poly.max(axis=0) + margin
    span = hi - lo
    scale = width_px / span[0]
    height_px = int(span[1] * scale)

    def to_px(p):
        return ((p[0] - lo[0]) * scale, (hi[1] - p[1]) * scale)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" '
        f'height="{height_px}" viewBox="0 0 {width_px} {height_px}">',
        f'<rect width="{width_px}" height="{height_px}" fill="#ffffff"/>',
    ]

    for wall in scene.walls:
        parts.append(
            f'<polygon points="{_polyline(footprint(wall), to_px)}" '
            'fill="#dddddd" stroke="#888888" stroke-width="1"/>'
        )
    parts.append(
        f'<polygon points="{_polyline(poly, to_px)}" fill="none" '
        'stroke="#333333" stroke-width="2"/>'
    )

    if reference is not None:
        for obj in reference.objects:
            parts.append(
                f'<polygon points="{_polyline(footprint(obj.box(reference.camera)), to_px)}" '
                'fill="#cccccc" fill-opacity="0.5" stroke="#999999" stroke-width="1"/>'
            )

    boxes = scene.boxes()
    for obj, box in zip(scene.objects, boxes):
        color = _color(obj.category)
        parts.append(
            f'<polygon points="{_polyline(footprint(box), to_px)}" '
            f'fill="{color}" fill-opacity="0.55" stroke="{color}" stroke-width="1.5">'
            f"<title>{obj.id}: {obj.category}</title></polygon>"
        )

    def center_px(box):
        x, z = to_px((box.center[0], box.center[2]))
        return x, z

    if relations is not None:
        n = len(boxes)
        columns = boxes + list(scene.walls)
        for i in range(n):
            for j in range(i + 1, len(columns)):
                if j < relations.attach.shape[1] and relations.attach[i, j]:
                    x1, z1 = center_px(boxes[i])
                    x2, z2 = center_px(columns[j])
                    parts.append(
                        f'<line x1="{x1:.2f}" y1="{z1:.2f}" x2="{x2:.2f}" y2="{z2:.2f}" '
                        'stroke="#228833" stroke-width="1" stroke-dasharray="4 3"/>'
                    )

    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            if sat_profile(boxes[i], boxes[j]).colliding:
                x1, z1 = center_px(boxes[i])
                x2, z2 = center_px(boxes[j])
                parts.append(
                    f'<line x1="{x1:.2f}" y1="{z1:.2f}" x2="{x2:.2f}" y2="{z2:.2f}" '
                    'stroke="#cc0000" stroke-width="2.5"/>'
                )

    cx, cz = to_px((0.0, 0.0))
    parts.append(f'<circle cx="{cx:.2f}" cy="{cz:.2f}" r="5" fill="#000000"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
