"""Planner-side knowledge: sensed poses, unknown objects and occlusion regions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .geometry import ConvexSet, DegeneratePolygon, points_in_polygon, polygon_area, rect_corners, shrink_polygon
from .workspace import Workspace

DEFAULT_EPSILON = 0.6

Pose = tuple[float, float, float]
Poly = tuple[tuple[float, float], ...]


def _poly(p) -> Poly:
    return tuple((float(x), float(y)) for x, y in np.asarray(p, dtype=float))


@dataclass(frozen=True)
class Observation:
    detected: Mapping[str, Pose] = field(default_factory=dict)
    shadows: tuple[tuple[str, Poly], ...] = ()
    identities: Mapping[str, str] = field(default_factory=dict)
    drawer_fraction: float | None = None

    def to_dict(self) -> dict:
        return {
            "detected": {k: list(v) for k, v in sorted(self.detected.items())},
            "shadows": [[o, [list(v) for v in p]] for o, p in self.shadows],
            "identities": dict(sorted(self.identities.items())),
            "drawer_fraction": self.drawer_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Observation":
        return cls(
            {k: tuple(v) for k, v in d.get("detected", {}).items()},
            tuple((o, _poly(p)) for o, p in d.get("shadows", [])),
            dict(d.get("identities", {})),
            d.get("drawer_fraction"),
        )


def shrink_region(poly, epsilon: float) -> np.ndarray:
    """Scale a shadow polygon about its area-weighted centroid.

    Raises ``DegeneratePolygon`` for inputs with (near) zero area.
    """
    return shrink_polygon(np.asarray(poly, dtype=float), epsilon)


@dataclass(frozen=True)
class BeliefState:
    workspace: Workspace = field(repr=False, compare=False)
    known: Mapping[str, Pose] = field(default_factory=dict)
    unknown: frozenset = frozenset()
    shadows: tuple[tuple[str, Poly], ...] = ()
    identities: Mapping[str, str] = field(default_factory=dict)
    properties: Mapping[str, float] = field(default_factory=dict)
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if set(self.known) & set(self.unknown):
            raise ValueError("an object cannot be both known and unknown")

    @classmethod
    def empty(cls, workspace: Workspace, objects, epsilon: float = DEFAULT_EPSILON,
              drawer_fraction: float = 0.0) -> "BeliefState":
        props = {"drawer_fraction": float(drawer_fraction)} if workspace.drawer is not None else {}
        return cls(workspace, {}, frozenset(objects), (), {}, props, epsilon)

    @property
    def objects(self) -> frozenset:
        return frozenset(self.known) | self.unknown

    @property
    def drawer_fraction(self) -> float:
        return float(self.properties.get("drawer_fraction", 0.0))

    def shape(self, obj: str) -> tuple[float, float]:
        return self.workspace.shapes[obj]

    def footprint(self, obj: str, margin: float = 0.0) -> np.ndarray:
        hx, hy = self.shape(obj)
        return rect_corners(*self.known[obj], hx + margin, hy + margin)

    def occlusion_regions(self) -> list[tuple[str, np.ndarray]]:
        """Shadow polygons shrunk by epsilon; zero-area results are dropped."""
        out = []
        for occ, poly in self.shadows:
            try:
                shrunk = shrink_region(poly, self.epsilon)
            except DegeneratePolygon:
                continue
            if polygon_area(shrunk) > 0:
                out.append((occ, shrunk))
        return out

    def region_set(self) -> ConvexSet:
        regs = self.occlusion_regions()
        return ConvexSet([p for _, p in regs], [f"shadow:{o}" for o, _ in regs])

    def footprint_set(self, margin: float = 0.0, exclude=()) -> ConvexSet:
        ids = [o for o in sorted(self.known) if o not in exclude]
        return ConvexSet([self.footprint(o, margin) for o in ids], ids)

    def resolve(self, label: str) -> str | None:
        """Physical id carrying ``label``, if it has been revealed."""
        for oid, lab in sorted(self.identities.items()):
            if lab == label:
                return oid
        return None

    def with_pose(self, obj: str, pose) -> "BeliefState":
        known = dict(self.known)
        known[obj] = tuple(float(v) for v in pose)
        return replace(self, known=known, unknown=self.unknown - {obj})

    def without(self, obj: str) -> "BeliefState":
        known = dict(self.known)
        known.pop(obj, None)
        return replace(self, known=known, unknown=self.unknown | {obj})

    def to_dict(self) -> dict:
        return {
            "known": {k: list(v) for k, v in sorted(self.known.items())},
            "unknown": sorted(self.unknown),
            "shadows": [[o, [list(v) for v in p]] for o, p in self.shadows],
            "identities": dict(sorted(self.identities.items())),
            "properties": dict(sorted(self.properties.items())),
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_dict(cls, workspace: Workspace, d: dict) -> "BeliefState":
        return cls(
            workspace,
            {k: tuple(v) for k, v in d["known"].items()},
            frozenset(d["unknown"]),
            tuple((o, _poly(p)) for o, p in d["shadows"]),
            dict(d["identities"]),
            dict(d["properties"]),
            float(d["epsilon"]),
        )


def position_visible(b: BeliefState, point, blockers: ConvexSet) -> bool:
    ws = b.workspace
    if not ws.camera.in_fov(point):
        return False
    if ws.in_closed_drawer(point, b.drawer_fraction):
        return False
    if len(blockers):
        seg = blockers.segment_hits(np.asarray(ws.camera.position)[None], np.asarray(point, dtype=float)[None, :2])
        if seg.any():
            return False
    return True


def fuse(b: BeliefState, obs: Observation, held: str | None = None) -> BeliefState:
    """Merge a new observation into the belief.

    Detected objects become known at the observed pose. A known object whose
    believed position is now in plain view but which was not detected is
    demoted to unknown. Occlusion regions are replaced by the new shadows.
    ``held`` names an object in the gripper, which is never demoted.
    """
    props = dict(b.properties)
    if obs.drawer_fraction is not None:
        props["drawer_fraction"] = float(obs.drawer_fraction)
    b = replace(b, properties=props)
    known = dict(b.known)
    unknown = set(b.unknown)
    for oid, pose in obs.detected.items():
        known[oid] = tuple(float(v) for v in pose)
        unknown.discard(oid)
    det_ids = sorted(obs.detected)
    hx = [b.workspace.shapes[o] for o in det_ids]
    blockers_all = [rect_corners(*obs.detected[o], *h) for o, h in zip(det_ids, hx)]
    for oid in sorted(set(known) - set(obs.detected)):
        if oid == held:
            continue
        keep = [p for o, p in zip(det_ids, blockers_all) if o != oid]
        if position_visible(b, known[oid][:2], ConvexSet(keep)):
            del known[oid]
            unknown.add(oid)
    identities = dict(b.identities)
    identities.update(obs.identities)
    return replace(
        b,
        known=known,
        unknown=frozenset(unknown),
        shadows=tuple(obs.shadows),
        identities=identities,
    )


def occupied(b: BeliefState, query) -> bool:
    """Whether a point ``(2,)`` or segment ``(2, 2)`` meets a known footprint
    or an epsilon-shrunk occlusion region."""
    q = np.asarray(query, dtype=float)
    sets = [b.footprint_set(), b.region_set()]
    if q.shape == (2,):
        return any(len(s) and s.contains_points(q[None]).any() for s in sets)
    if q.shape == (2, 2):
        for s in sets:
            if not len(s):
                continue
            if s.contains_points(q).any() or s.segment_hits(q[0][None], q[1][None]).any():
                return True
        return False
    raise ValueError("query must be a point (2,) or a segment (2, 2)")


def in_region(point, poly) -> bool:
    return bool(points_in_polygon(np.asarray(point, dtype=float)[None, :2], poly)[0])
