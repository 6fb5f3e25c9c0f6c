"""Static scene description shared by the simulator and the planner.

Everything here is either fixed geometry (walls, cabinet, regions, camera)
or a priori knowledge (object shapes). Object poses and the drawer opening
live in the simulator and in the belief, never here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ConvexSet, points_in_polygon, rect_corners
from .kinematics import ArmSpec

DRAWER_OPEN_THRESHOLD = 0.9
PLAN_MARGIN = 0.005


def _pose(v) -> tuple[float, float, float]:
    v = [float(x) for x in v]
    if len(v) == 2:
        v.append(0.0)
    return (v[0], v[1], v[2])


@dataclass(frozen=True)
class Box:
    """Oriented rectangle: center pose plus half extents."""

    name: str
    pose: tuple[float, float, float]
    half: tuple[float, float]

    def polygon(self, margin: float = 0.0) -> np.ndarray:
        return rect_corners(*self.pose, self.half[0] + margin, self.half[1] + margin)

    @classmethod
    def from_dict(cls, d: dict) -> "Box":
        return cls(d["name"], _pose(d["pose"]), (float(d["half"][0]), float(d["half"][1])))

    def to_dict(self) -> dict:
        return {"name": self.name, "pose": list(self.pose), "half": list(self.half)}


@dataclass(frozen=True)
class CameraSpec:
    position: tuple[float, float]
    fov: tuple[float, float] = (0.0, np.pi)

    def in_fov(self, point) -> bool:
        d = np.asarray(point, dtype=float) - np.asarray(self.position)
        ang = float(np.arctan2(d[1], d[0]))
        lo, hi = self.fov
        return lo <= ang <= hi

    @classmethod
    def from_dict(cls, d: dict) -> "CameraSpec":
        return cls(tuple(float(v) for v in d["position"]), tuple(float(v) for v in d.get("fov", (0.0, np.pi))))

    def to_dict(self) -> dict:
        return {"position": list(self.position), "fov": list(self.fov)}


@dataclass(frozen=True)
class DrawerSpec:
    """A sliding tray inside a static cabinet.

    ``pose`` is the tray center when closed; the tray slides along ``axis``
    (a unit vector in the world frame) by ``fraction * travel``. A thin front
    panel sits on the ``axis`` side of the tray and carries the handle.
    """

    name: str
    pose: tuple[float, float, float]
    half: tuple[float, float]
    axis: tuple[float, float]
    travel: float
    panel_thickness: float = 0.02

    def _frame(self):
        ax = np.asarray(self.axis, dtype=float)
        ax = ax / np.linalg.norm(ax)
        # half extent of the tray measured along the axis
        th = self.pose[2]
        local = np.array([np.cos(th) * ax[0] + np.sin(th) * ax[1], -np.sin(th) * ax[0] + np.cos(th) * ax[1]])
        along = abs(local[0]) * self.half[0] + abs(local[1]) * self.half[1]
        across = abs(local[1]) * self.half[0] + abs(local[0]) * self.half[1]
        return ax, along, across

    def offset(self, fraction: float) -> np.ndarray:
        ax, _, _ = self._frame()
        return ax * self.travel * float(fraction)

    def tray_polygon(self, fraction: float) -> np.ndarray:
        off = self.offset(fraction)
        return rect_corners(self.pose[0] + off[0], self.pose[1] + off[1], self.pose[2], *self.half)

    def panel_polygon(self, fraction: float, margin: float = 0.0) -> np.ndarray:
        ax, along, across = self._frame()
        c = np.asarray(self.pose[:2]) + self.offset(fraction) + ax * (along + self.panel_thickness / 2)
        heading = float(np.arctan2(ax[1], ax[0]))
        return rect_corners(c[0], c[1], heading, self.panel_thickness / 2 + margin, across + margin)

    def handle_point(self, fraction: float) -> np.ndarray:
        ax, along, _ = self._frame()
        return np.asarray(self.pose[:2]) + self.offset(fraction) + ax * (along + self.panel_thickness)

    def handle_tip_pose(self, fraction: float, standoff: float) -> np.ndarray:
        """Tip pose for holding the handle: facing the panel from outside."""
        ax, _, _ = self._frame()
        p = self.handle_point(fraction) + ax * standoff
        return np.array([p[0], p[1], float(np.arctan2(-ax[1], -ax[0]))])

    @classmethod
    def from_dict(cls, d: dict) -> "DrawerSpec":
        return cls(
            d.get("name", "drawer"),
            _pose(d["pose"]),
            (float(d["half"][0]), float(d["half"][1])),
            (float(d["axis"][0]), float(d["axis"][1])),
            float(d["travel"]),
            float(d.get("panel_thickness", 0.02)),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pose": list(self.pose),
            "half": list(self.half),
            "axis": list(self.axis),
            "travel": self.travel,
            "panel_thickness": self.panel_thickness,
        }


@dataclass(frozen=True)
class RegionSpec:
    """A named placement/support area.

    ``approach`` optionally fixes the tip heading for placements (radians),
    ``corridor`` is the length of the clearance rectangle checked behind the
    tip, and ``headings`` lists the object headings the placement sampler
    may choose. A region of kind ``drawer`` follows the drawer tray.
    """

    name: str
    box: Box | None
    kind: str = "surface"
    approach: float | None = None
    corridor: float = 0.12
    headings: tuple[float, ...] = (0.0,)

    def polygon(self, drawer: DrawerSpec | None = None, fraction: float = 0.0) -> np.ndarray:
        if self.kind == "drawer":
            return drawer.tray_polygon(fraction)
        return self.box.polygon()

    @classmethod
    def from_dict(cls, d: dict) -> "RegionSpec":
        box = None
        if d.get("kind", "surface") != "drawer":
            box = Box(d["name"], _pose(d["pose"]), (float(d["half"][0]), float(d["half"][1])))
        return cls(
            d["name"],
            box,
            d.get("kind", "surface"),
            None if d.get("approach") is None else float(d["approach"]),
            float(d.get("corridor", 0.12)),
            tuple(float(h) for h in d.get("headings", [0.0])),
        )

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "corridor": self.corridor, "headings": list(self.headings)}
        if self.box is not None:
            d["pose"] = list(self.box.pose)
            d["half"] = list(self.box.half)
        if self.approach is not None:
            d["approach"] = self.approach
        return d


@dataclass(frozen=True)
class Workspace:
    arm: ArmSpec
    camera: CameraSpec
    bounds: tuple[float, float, float, float]
    obstacles: tuple[Box, ...] = ()
    regions: tuple[RegionSpec, ...] = ()
    drawer: DrawerSpec | None = None
    shapes: dict = field(default_factory=dict)
    scan_region: Box | None = None
    scan_config: tuple[float, float, float] | None = None
    push_distance: float = 0.2
    pick_corridor: float = 0.12

    def region(self, name: str) -> RegionSpec:
        for r in self.regions:
            if r.name == name:
                return r
        raise KeyError(name)

    def static_polygons(self, drawer_fraction: float = 0.0, margin: float = 0.0):
        polys = [(b.name, b.polygon(margin)) for b in self.obstacles]
        if self.drawer is not None:
            polys.append((self.drawer.name + ".panel", self.drawer.panel_polygon(drawer_fraction, margin)))
        return polys

    def static_set(self, drawer_fraction: float = 0.0, margin: float = 0.0) -> ConvexSet:
        polys = self.static_polygons(drawer_fraction, margin)
        return ConvexSet([p for _, p in polys], [n for n, _ in polys])

    def drawer_open(self, fraction: float) -> bool:
        return fraction > DRAWER_OPEN_THRESHOLD

    def in_closed_drawer(self, point, fraction: float) -> bool:
        """True when ``point`` lies inside the tray of a drawer that is not open."""
        if self.drawer is None or self.drawer_open(fraction):
            return False
        return bool(points_in_polygon(np.asarray(point)[None, :2], self.drawer.tray_polygon(fraction))[0])

    def region_of(self, point, drawer_fraction: float = 0.0) -> str | None:
        p = np.asarray(point, dtype=float)[None, :2]
        for r in self.regions:
            if r.kind == "drawer" and self.drawer is None:
                continue
            if points_in_polygon(p, r.polygon(self.drawer, drawer_fraction))[0]:
                return r.name
        return None

    def to_dict(self) -> dict:
        d = {
            "arm": self.arm.to_dict(),
            "camera": self.camera.to_dict(),
            "bounds": list(self.bounds),
            "obstacles": [b.to_dict() for b in self.obstacles],
            "regions": [r.to_dict() for r in self.regions],
            "shapes": {k: list(v) for k, v in self.shapes.items()},
            "push_distance": self.push_distance,
            "pick_corridor": self.pick_corridor,
        }
        if self.drawer is not None:
            d["drawer"] = self.drawer.to_dict()
        if self.scan_region is not None:
            d["scan_region"] = self.scan_region.to_dict()
        if self.scan_config is not None:
            d["scan_config"] = list(self.scan_config)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Workspace":
        arm_d = d.get("arm", {})
        arm = ArmSpec(
            links=tuple(float(v) for v in arm_d.get("links", (0.5, 0.4, 0.2))),
            lower=tuple(float(v) for v in arm_d.get("lower", (-np.pi, -2.5, -2.5))),
            upper=tuple(float(v) for v in arm_d.get("upper", (np.pi, 2.5, 2.5))),
            home=tuple(float(v) for v in arm_d.get("home", (-np.pi / 2, 2.4, -0.8))),
            gripper_opening=float(arm_d.get("gripper_opening", 0.10)),
            gripper_width=float(arm_d.get("gripper_width", 0.10)),
            standoff=float(arm_d.get("standoff", 0.01)),
            joint_speed=float(arm_d.get("joint_speed", 0.5)),
        )
        return cls(
            arm=arm,
            camera=CameraSpec.from_dict(d["camera"]),
            bounds=tuple(float(v) for v in d["bounds"]),
            obstacles=tuple(Box.from_dict(b) for b in d.get("obstacles", [])),
            regions=tuple(RegionSpec.from_dict(r) for r in d.get("regions", [])),
            drawer=DrawerSpec.from_dict(d["drawer"]) if d.get("drawer") else None,
            shapes={k: (float(v[0]), float(v[1])) for k, v in d.get("shapes", {}).items()},
            scan_region=Box.from_dict(d["scan_region"]) if d.get("scan_region") else None,
            scan_config=tuple(float(v) for v in d["scan_config"]) if d.get("scan_config") else None,
            push_distance=float(d.get("push_distance", 0.2)),
            pick_corridor=float(d.get("pick_corridor", 0.12)),
        )
