"""Planar collision geometry: discs, simple polygons, and a walled channel.

Signed distances follow the convention negative inside the body, positive
outside, zero on the boundary, and are 1-Lipschitz in the query point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..errors import ConfigurationError

_EPS = 1e-12


@dataclass(frozen=True)
class Disc:
    """Disc centered at the body-frame origin."""

    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ConfigurationError("disc radius must be positive")


@dataclass(frozen=True)
class Polygon:
    """Simple polygon, vertices (n, 2) in counterclockwise body-frame order."""

    vertices: NDArray[np.float64]

    def __post_init__(self) -> None:
        verts = np.asarray(self.vertices, dtype=np.float64)
        if verts.ndim != 2 or verts.shape[0] < 3 or verts.shape[1] != 2:
            raise ConfigurationError("polygon needs at least 3 planar vertices")
        if abs(polygon_area(verts)) < _EPS:
            raise ConfigurationError("degenerate polygon: zero area")
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)


@dataclass(frozen=True)
class Channel:
    """Interior of a walled rectangular container.

    The body is the wall material (the complement of the open box), so the
    signed distance is positive for points inside the container interior and
    negative for points that have penetrated a wall. half_extents are the
    interior half-widths along body-frame x and y.
    """

    half_extents: tuple[float, float] = field(default=(0.125, 0.056))

    def __post_init__(self) -> None:
        hx, hy = self.half_extents
        if hx <= 0.0 or hy <= 0.0:
            raise ConfigurationError("channel half extents must be positive")


Geometry = Disc | Polygon | Channel


def polygon_area(vertices: NDArray[np.float64]) -> float:
    """Signed shoelace area, positive for counterclockwise order."""
    x, y = vertices[:, 0], vertices[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def polygon_centroid(vertices: NDArray[np.float64]) -> NDArray[np.float64]:
    """Area centroid of a simple polygon."""
    x, y = vertices[:, 0], vertices[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * np.sum(cross)
    if abs(area) < _EPS:
        raise ConfigurationError("degenerate polygon: zero area")
    cx = np.sum((x + xn) * cross) / (6.0 * area)
    cy = np.sum((y + yn) * cross) / (6.0 * area)
    return np.array([cx, cy])


def t_block_polygon(
    height: float = 0.5, width: float = 0.6, thickness: float = 0.2
) -> Polygon:
    """T-shaped block outline with its centroid at the body-frame origin.

    The crossbar spans the full width at the top with the given thickness;
    the stem (same thickness) extends down to the full height.

    Args:
        height: Total extent along y.
        width: Crossbar extent along x.
        thickness: Bar and stem thickness.

    Returns:
        Counterclockwise 8-vertex Polygon centered on its area centroid.
    """
    if min(height, width, thickness) <= 0 or thickness >= min(height, width):
        raise ConfigurationError("inconsistent T-block dimensions")
    top = height / 2.0
    bar_bottom = top - thickness
    stem_half = thickness / 2.0
    raw = np.array(
        [
            (-stem_half, -top),
            (stem_half, -top),
            (stem_half, bar_bottom),
            (width / 2.0, bar_bottom),
            (width / 2.0, top),
            (-width / 2.0, top),
            (-width / 2.0, bar_bottom),
            (-stem_half, bar_bottom),
        ]
    )
    return Polygon(raw - polygon_centroid(raw))


def rotations(heading: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """cos/sin arrays for a batch of headings."""
    return np.cos(heading), np.sin(heading)


def t_block_boxes(
    height: float = 0.5, width: float = 0.6, thickness: float = 0.2
) -> NDArray[np.float64]:
    """The T-block as two stacked boxes, rows of (center_y, half_x, half_y).

    The stem box is extended up through the crossbar so the union is unchanged
    but no phantom face sits near the outer boundary. Centers are shifted so
    the area centroid is at the origin, matching t_block_polygon.
    """
    if min(height, width, thickness) <= 0 or thickness >= min(height, width):
        raise ConfigurationError("inconsistent T-block dimensions")
    top = height / 2.0
    bar_bottom = top - thickness
    bar_area = width * thickness
    stem_area = thickness * (height - thickness)
    cy = (
        bar_area * (bar_bottom + top) / 2.0 + stem_area * (-top + bar_bottom) / 2.0
    ) / (bar_area + stem_area)
    return np.array(
        [
            ((bar_bottom + top) / 2.0 - cy, width / 2.0, thickness / 2.0),
            (-cy, thickness / 2.0, height / 2.0),
        ]
    )


def box_union_sdf(
    boxes: NDArray[np.float64], points: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Signed distance and outward gradient of a union of aligned boxes.

    Exact (equal to the polygon SDF) outside the union and on its boundary;
    inside, the magnitude is the distance to the nearest face of the
    containing box, which keeps the sign and a repulsive gradient. That is
    sufficient for penalty contact and several times cheaper than the
    general polygon query.

    Args:
        boxes: (n, 3) rows of (center_y, half_x, half_y), centers on the y axis.
        points: (B, 2) query points in the body frame.

    Returns:
        (sdf, grad) with unit gradients away from degenerate box centers.
    """
    pts = np.atleast_2d(points)
    best = None
    for center_y, half_x, half_y in boxes:
        px = pts[:, 0]
        py = pts[:, 1] - center_y
        qx = np.abs(px) - half_x
        qy = np.abs(py) - half_y
        ox = np.maximum(qx, 0.0)
        oy = np.maximum(qy, 0.0)
        dist_out = np.sqrt(ox * ox + oy * oy)
        sdf = dist_out + np.minimum(np.maximum(qx, qy), 0.0)
        sx = np.where(px >= 0.0, 1.0, -1.0)
        sy = np.where(py >= 0.0, 1.0, -1.0)
        outside = (qx > 0.0) | (qy > 0.0)
        safe = np.maximum(dist_out, _EPS)
        gx = np.where(outside, sx * ox / safe, np.where(qx >= qy, sx, 0.0))
        gy = np.where(outside, sy * oy / safe, np.where(qx >= qy, 0.0, sy))
        if best is None:
            best = (sdf, gx, gy)
        else:
            closer = sdf < best[0]
            best = (
                np.where(closer, sdf, best[0]),
                np.where(closer, gx, best[1]),
                np.where(closer, gy, best[2]),
            )
    assert best is not None
    return best[0], np.stack([best[1], best[2]], axis=-1)


def world_to_body(
    points: NDArray[np.float64], pose: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Transform world points (..., 2) into the frame of pose (x, y, heading)."""
    c, s = np.cos(pose[..., 2]), np.sin(pose[..., 2])
    dx = points[..., 0] - pose[..., 0]
    dy = points[..., 1] - pose[..., 1]
    return np.stack([c * dx + s * dy, -s * dx + c * dy], axis=-1)


def body_to_world(
    points: NDArray[np.float64], pose: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Transform body-frame points (..., 2) into world coordinates."""
    c, s = np.cos(pose[..., 2]), np.sin(pose[..., 2])
    px, py = points[..., 0], points[..., 1]
    return np.stack(
        [pose[..., 0] + c * px - s * py, pose[..., 1] + s * px + c * py], axis=-1
    )


def polygon_sdf(
    vertices: NDArray[np.float64], points: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Signed distance and outward gradient of a polygon at body-frame points.

    Args:
        vertices: (E, 2) counterclockwise polygon vertices.
        points: (B, 2) query points in the polygon's frame.

    Returns:
        (sdf, grad): (B,) signed distances (negative inside) and (B, 2) unit
        gradients pointing in the direction of increasing distance. On-boundary
        queries fall back to the nearest edge's outward normal.
    """
    pts = np.atleast_2d(points)
    v0 = vertices
    v1 = np.roll(vertices, -1, axis=0)
    edge = v1 - v0  # (E, 2)
    edge_len2 = np.maximum(np.sum(edge * edge, axis=1), _EPS)

    w = pts[:, None, :] - v0[None, :, :]  # (B, E, 2)
    t = np.clip(np.einsum("bej,ej->be", w, edge) / edge_len2, 0.0, 1.0)
    closest = v0[None, :, :] + t[..., None] * edge[None, :, :]
    diff = pts[:, None, :] - closest
    dist2 = np.sum(diff * diff, axis=2)  # (B, E)
    nearest = np.argmin(dist2, axis=1)
    rows = np.arange(pts.shape[0])
    best = diff[rows, nearest]  # (B, 2)
    dist = np.sqrt(dist2[rows, nearest])

    # Even-odd crossing test for containment.
    y0, y1 = v0[None, :, 1], v1[None, :, 1]
    py = pts[:, 1][:, None]
    px = pts[:, 0][:, None]
    straddles = (y0 > py) != (y1 > py)
    denom = np.where(np.abs(y1 - y0) < _EPS, _EPS, y1 - y0)
    x_cross = v0[None, :, 0] + (py - y0) * edge[None, :, 0] / denom
    inside = np.sum(straddles & (px < x_cross), axis=1) % 2 == 1

    sign = np.where(inside, -1.0, 1.0)
    safe = dist > _EPS
    grad = np.empty_like(best)
    # Outward normal of a CCW edge is (ey, -ex); used when the query sits on
    # the boundary and the nearest-point direction is undefined.
    edge_normal = np.stack([edge[:, 1], -edge[:, 0]], axis=1)
    edge_normal /= np.sqrt(edge_len2)[:, None]
    grad[:] = edge_normal[nearest]
    np.divide(best * sign[:, None], dist[:, None], out=grad, where=safe[:, None])
    return sign * dist, grad


def signed_distance(
    geometry: Geometry, pose: NDArray[np.float64], query_point: NDArray[np.float64]
) -> float:
    """Signed distance from a world-frame query point to a posed geometry.

    Args:
        geometry: Disc, Polygon, or Channel.
        pose: Body pose (x, y, heading).
        query_point: World-frame point (2,).

    Returns:
        Distance, negative inside the body.
    """
    pose = np.asarray(pose, dtype=np.float64)
    q = world_to_body(np.asarray(query_point, dtype=np.float64), pose)
    if isinstance(geometry, Disc):
        return float(np.hypot(q[0], q[1]) - geometry.radius)
    if isinstance(geometry, Polygon):
        sdf, _ = polygon_sdf(geometry.vertices, q[None, :])
        return float(sdf[0])
    if isinstance(geometry, Channel):
        hx, hy = geometry.half_extents
        return float(min(hx - abs(q[0]), hy - abs(q[1])))
    raise ConfigurationError(f"unsupported geometry {type(geometry).__name__}")
