"""Oriented footprint boxes: convex clipping and polygon area."""

from __future__ import annotations

import math

import numpy as np


def box_corners(cx: float, cy: float, length: float, width: float, yaw_deg: float) -> np.ndarray:
    """Counter-clockwise corners of a yawed rectangle; length runs along the heading."""
    c, s = math.cos(math.radians(yaw_deg)), math.sin(math.radians(yaw_deg))
    hl, hw = length / 2.0, width / 2.0
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    # rotate; the local order is CCW for positive length/width
    R = np.array([[c, -s], [s, c]])
    return local @ R.T + np.array([cx, cy])


def polygon_area(poly) -> float:
    """Shoelace area (positive for counter-clockwise vertices)."""
    p = np.asarray(poly, dtype=float)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def clip_convex(subject, clipper) -> list[tuple[float, float]]:
    """Sutherland-Hodgman clipping of ``subject`` by the convex CCW ``clipper``."""
    output = [tuple(p) for p in subject]
    clip = [tuple(p) for p in clipper]
    for k in range(len(clip)):
        if not output:
            break
        a, b = clip[k], clip[(k + 1) % len(clip)]
        inp, output = output, []
        prev = inp[-1]
        prev_in = _cross(a, b, prev) >= 0.0
        for cur in inp:
            cur_in = _cross(a, b, cur) >= 0.0
            if cur_in != prev_in:
                # edge crosses the clip line
                dx, dy = cur[0] - prev[0], cur[1] - prev[1]
                ex, ey = b[0] - a[0], b[1] - a[1]
                denom = ex * dy - ey * dx
                if denom != 0.0:
                    t = (ex * (a[1] - prev[1]) - ey * (a[0] - prev[0])) / denom
                    output.append((prev[0] + t * dx, prev[1] + t * dy))
            if cur_in:
                output.append(cur)
            prev, prev_in = cur, cur_in
    return output


def oriented_iou(box_a, box_b) -> float:
    """IoU of two boxes given as (cx, cy, length, width, yaw_deg)."""
    pa, pb = box_corners(*box_a), box_corners(*box_b)
    area_a, area_b = polygon_area(pa), polygon_area(pb)
    if area_a <= 0.0 or area_b <= 0.0:
        return 0.0
    inter = clip_convex(pa, pb)
    ia = max(polygon_area(inter), 0.0) if len(inter) >= 3 else 0.0
    union = area_a + area_b - ia
    return min(max(ia / union, 0.0), 1.0)
