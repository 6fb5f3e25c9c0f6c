"""Planar geometry used by the simulator, the belief and the motion planner.

Polygons are ``(n, 2)`` float arrays with counter-clockwise vertex order.
Every obstacle in the system is convex (rotated rectangles and clipped
shadow cones), which lets collision queries run as vectorized half-plane
clipping instead of general polygon boolean operations.
"""

from __future__ import annotations

import numpy as np
from shapely.geometry import Polygon, box
from shapely.geometry.polygon import orient

DEGENERATE_AREA = 1e-12


class DegeneratePolygon(ValueError):
    pass


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def rect_corners(x: float, y: float, theta: float, hx: float, hy: float) -> np.ndarray:
    local = np.array([[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]])
    return local @ rotation(theta).T + np.array([x, y])


def signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_area(poly: np.ndarray) -> float:
    return abs(signed_area(poly))


def polygon_centroid(poly: np.ndarray) -> np.ndarray:
    """Area-weighted centroid (shoelace form)."""
    poly = np.asarray(poly, dtype=float)
    a = signed_area(poly)
    if abs(a) < DEGENERATE_AREA:
        raise DegeneratePolygon(f"polygon area {abs(a):.3g} below {DEGENERATE_AREA}")
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    cx = float(np.sum((x + xn) * cross)) / (6.0 * a)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * a)
    return np.array([cx, cy])


def shrink_polygon(poly: np.ndarray, ratio: float) -> np.ndarray:
    """Scale ``poly`` about its area-weighted centroid by ``ratio`` in [0, 1]."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"shrink ratio must lie in [0, 1], got {ratio}")
    poly = np.asarray(poly, dtype=float)
    c = polygon_centroid(poly)
    return c + ratio * (poly - c)


def ccw(poly: np.ndarray) -> np.ndarray:
    poly = np.asarray(poly, dtype=float)
    return poly[::-1].copy() if signed_area(poly) < 0 else poly


def to_shapely(poly: np.ndarray) -> Polygon:
    return Polygon(np.asarray(poly, dtype=float))


def from_shapely(geom) -> np.ndarray | None:
    if geom.is_empty or geom.geom_type != "Polygon" or geom.area < DEGENERATE_AREA:
        return None
    coords = np.asarray(orient(geom, 1.0).exterior.coords)[:-1]
    return coords


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Closed point-in-convex-polygon test for an ``(n, 2)`` batch."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    poly = ccw(poly)
    edges = np.roll(poly, -1, axis=0) - poly
    normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
    side = np.einsum("ke,nke->nk", normals, points[:, None, :] - poly[None, :, :])
    return np.all(side <= 1e-12, axis=1)


class ConvexSet:
    """A batch of convex polygons prepared for half-plane clipping queries.

    Degenerate polygons (zero area) are dropped: they occupy no space.
    """

    def __init__(self, polygons, labels=None):
        polys, keep = [], []
        for i, p in enumerate(polygons):
            p = np.asarray(p, dtype=float)
            if len(p) >= 3 and polygon_area(p) >= DEGENERATE_AREA:
                polys.append(ccw(p))
                keep.append(i)
        labels = list(labels) if labels is not None else list(range(len(polygons)))
        self.labels = [labels[i] for i in keep]
        self.polygons = polys
        n = len(polys)
        m = max((len(p) for p in polys), default=3)
        self.normals = np.zeros((n, m, 2))
        # padded rows (zero normal, offset 1) are satisfied by every point
        self.offsets = np.full((n, m), 1.0)
        for i, p in enumerate(polys):
            e = np.roll(p, -1, axis=0) - p
            nrm = np.stack([e[:, 1], -e[:, 0]], axis=1)
            nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
            self.normals[i, : len(p)] = nrm
            self.offsets[i, : len(p)] = np.einsum("ij,ij->i", nrm, p)
        if n:
            self.lo = np.array([p.min(axis=0) for p in polys])
            self.hi = np.array([p.max(axis=0) for p in polys])
        else:
            self.lo = np.zeros((0, 2))
            self.hi = np.zeros((0, 2))

    def __len__(self) -> int:
        return len(self.polygons)

    def contains_points(self, points: np.ndarray) -> np.ndarray:
        """``(n, k)`` closed containment matrix."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if not len(self):
            return np.zeros((len(points), 0), dtype=bool)
        side = np.einsum("kmd,nd->nkm", self.normals, points) - self.offsets[None]
        return np.all(side <= 1e-12, axis=2)

    def segment_hits(self, p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
        """``(n, k)`` matrix: segment i passes through the interior of polygon j."""
        p0 = np.atleast_2d(np.asarray(p0, dtype=float))
        p1 = np.atleast_2d(np.asarray(p1, dtype=float))
        n = len(p0)
        if not len(self) or not n:
            return np.zeros((n, len(self)), dtype=bool)
        seg_lo = np.minimum(p0, p1)
        seg_hi = np.maximum(p0, p1)
        overlap = np.all(
            (seg_lo[:, None, :] <= self.hi[None]) & (seg_hi[:, None, :] >= self.lo[None]), axis=2
        )
        out = np.zeros((n, len(self)), dtype=bool)
        rows, cols = np.nonzero(overlap)
        if not len(rows):
            return out
        nrm = self.normals[cols]  # (q, m, 2)
        off = self.offsets[cols]
        a = p0[rows]
        d = p1[rows] - a
        num = np.einsum("qmd,qd->qm", nrm, a) - off  # inside iff num + t*den < 0
        den = np.einsum("qmd,qd->qm", nrm, d)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = -num / den
        upper = np.where(den > 1e-15, t, np.inf).min(axis=1)
        lower = np.where(den < -1e-15, t, -np.inf).max(axis=1)
        parallel_out = np.any((np.abs(den) <= 1e-15) & (num >= -1e-12), axis=1)
        t_lo = np.maximum(lower, 0.0)
        t_hi = np.minimum(upper, 1.0)
        hit = (t_lo < t_hi - 1e-12) & ~parallel_out
        out[rows, cols] = hit
        return out

    def polygon_hits(self, poly: np.ndarray) -> np.ndarray:
        """Per-polygon flag: convex ``poly`` overlaps the polygon's interior."""
        poly = np.asarray(poly, dtype=float)
        edges0 = poly
        edges1 = np.roll(poly, -1, axis=0)
        hits = self.segment_hits(edges0, edges1).any(axis=0)
        if len(self):
            # containment either way with no boundary crossing
            inside = self.contains_points(poly).all(axis=0)
            other = ConvexSet([poly])
            for j, p in enumerate(self.polygons):
                if not hits[j] and not inside[j] and other.contains_points(p).all():
                    inside[j] = True
            hits |= inside
        return hits


def segments_cross(a0: np.ndarray, a1: np.ndarray, b0: np.ndarray, b1: np.ndarray) -> np.ndarray:
    """Proper crossing test for paired segment batches ``(n, 2)``."""

    def orient2(p, q, r):
        return (q[:, 0] - p[:, 0]) * (r[:, 1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (r[:, 0] - p[:, 0])

    d1 = orient2(b0, b1, a0)
    d2 = orient2(b0, b1, a1)
    d3 = orient2(a0, a1, b0)
    d4 = orient2(a0, a1, b1)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def polygons_overlap(p: np.ndarray, q: np.ndarray, tol: float = 1e-9) -> bool:
    """Interior overlap of two simple polygons."""
    inter = to_shapely(p).intersection(to_shapely(q))
    return (not inter.is_empty) and inter.area > tol


def shadow_polygon(camera, occluder: np.ndarray, bounds) -> np.ndarray | None:
    """Region hidden behind a convex ``occluder`` as seen from ``camera``.

    The silhouette chord joining the two angularly extreme corners is
    projected away from the camera and the resulting cone is clipped to the
    rectangle ``bounds = (xmin, ymin, xmax, ymax)``. The result is convex.
    Returns ``None`` when the camera sits inside the occluder or nothing of
    the cone remains inside ``bounds``.
    """
    c = np.asarray(camera, dtype=float)
    occ = np.asarray(occluder, dtype=float)
    if points_in_polygon(c[None], occ)[0]:
        return None
    rel = occ - c
    ref = np.arctan2(*(occ.mean(axis=0) - c)[::-1])
    ang = np.arctan2(rel[:, 1], rel[:, 0]) - ref
    ang = (ang + np.pi) % (2 * np.pi) - np.pi
    right = occ[int(np.argmin(ang))]
    left = occ[int(np.argmax(ang))]
    reach = 4.0 * max(bounds[2] - bounds[0], bounds[3] - bounds[1]) + np.linalg.norm(rel, axis=1).max()
    far_r = c + reach * (right - c) / np.linalg.norm(right - c)
    far_l = c + reach * (left - c) / np.linalg.norm(left - c)
    cone = Polygon([right, far_r, far_l, left])
    if not cone.is_valid or cone.area < DEGENERATE_AREA:
        return None
    return from_shapely(cone.intersection(box(*bounds)))


def ray_blocked(camera, target, polygons: ConvexSet) -> np.ndarray:
    """Which polygons the open segment camera->target passes through."""
    c = np.asarray(camera, dtype=float)[None]
    t = np.asarray(target, dtype=float)[None]
    return polygons.segment_hits(c, t)[0]


def grasp_poses(pose, half, standoff: float):
    """The four axis-aligned grasps: ``(face, tip_pose, across)``.

    Face ``k`` approaches along the object heading turned by ``k`` quarter
    turns; ``across`` is the half width the fingers must span.
    """
    x, y, th = pose
    out = []
    for k in range(4):
        phi = th + k * np.pi / 2
        along = half[0] if k % 2 == 0 else half[1]
        across = half[1] if k % 2 == 0 else half[0]
        u = np.array([np.cos(phi), np.sin(phi)])
        tip = np.array([x, y]) - u * (along + standoff)
        out.append((k, np.array([tip[0], tip[1], float(wrap_angle(phi))]), across))
    return out


def wrap_angle(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi
