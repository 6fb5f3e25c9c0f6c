"""Ground-truth tabletop simulator.

The simulator owns the true object poses, the drawer opening and the arm
state. Other modules interact with it only through sensing and the action
primitives below; proprioception (joint angles, whether the gripper holds
something) is exposed read-only.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import MultiPoint

from .belief import Observation
from .geometry import (
    ConvexSet,
    ccw,
    from_shapely,
    grasp_poses,
    points_in_polygon,
    polygon_area,
    rect_corners,
    shadow_polygon,
    wrap_angle,
)
from .kinematics import cartesian_line, ee_poses
from .motion import DENSE_RESOLUTION, CollisionModel, HeldGeometry, Trajectory, densify
from .workspace import Workspace

START_TOL = 1e-6
GRASP_POS_TOL = 0.004
GRASP_ANG_TOL = 0.05
PUSH_PATH_STEP = 0.002

STREAM_PUSH = 1


class SimError(Exception):
    pass


class CollisionFault(SimError):
    """Execution stopped at the last collision-free configuration."""

    def __init__(self, msg: str, config, contacts=()):
        super().__init__(msg)
        self.config = np.asarray(config, dtype=float)
        self.contacts = tuple(sorted(contacts))


class StartMismatch(SimError):
    pass


class PushBlocked(SimError):
    pass


class HandleUnreached(SimError):
    pass


class GripperError(SimError):
    pass


@dataclass(frozen=True)
class ObjectSpec:
    id: str
    label: str
    half: tuple[float, float]
    pose: tuple[float, float, float]
    identity_visible: bool = True

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "half": list(self.half),
            "pose": list(self.pose),
            "identity_visible": self.identity_visible,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectSpec":
        pose = [float(v) for v in d["pose"]] + [0.0] * (3 - len(d["pose"]))
        return cls(
            d["id"],
            d.get("label", d["id"]),
            (float(d["half"][0]), float(d["half"][1])),
            tuple(pose),
            bool(d.get("identity_visible", True)),
        )


@dataclass(frozen=True)
class PushOutcomeModel:
    nominal_distance: float = 0.2
    d_max: float = 0.0
    theta_max: float = 0.0

    def sample(self, rng: np.random.Generator) -> tuple[float, float]:
        dd = float(rng.uniform(-self.d_max, self.d_max)) if self.d_max > 0 else 0.0
        dth = float(rng.uniform(-self.theta_max, self.theta_max)) if self.theta_max > 0 else 0.0
        return dd, dth

    def to_dict(self) -> dict:
        return {"nominal_distance": self.nominal_distance, "d_max": self.d_max, "theta_max": self.theta_max}

    @classmethod
    def from_dict(cls, d: dict) -> "PushOutcomeModel":
        return cls(float(d.get("nominal_distance", 0.2)), float(d.get("d_max", 0.0)), float(d.get("theta_max", 0.0)))


@dataclass(frozen=True)
class WorldSpec:
    workspace: Workspace
    objects: tuple[ObjectSpec, ...]
    drawer_fraction: float = 0.0
    drawer_contents: tuple[str, ...] = ()
    push: PushOutcomeModel = field(default_factory=PushOutcomeModel)

    def object(self, oid: str) -> ObjectSpec:
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(oid)


class Simulator:
    def __init__(self, spec: WorldSpec, seed: int):
        self._spec = spec
        self._ws = spec.workspace
        self._arm = spec.workspace.arm
        self._shapes = {o.id: o.half for o in spec.objects}
        self._labels = {o.id: o.label for o in spec.objects}
        self._ident_visible = {o.id: o.identity_visible for o in spec.objects}
        self._poses = {o.id: np.array(o.pose, dtype=float) for o in spec.objects}
        self._fraction = float(spec.drawer_fraction)
        self._contents = set(spec.drawer_contents)
        self._config = np.array(self._arm.home, dtype=float)
        self._held: tuple[str, HeldGeometry] | None = None
        self._push_rng = np.random.default_rng([int(seed), STREAM_PUSH])
        self.exec_time = 0.0
        self.grasp_attempts = 0
        self.push_log: list[dict] = []

    @property
    def workspace(self) -> Workspace:
        return self._ws

    # proprioception
    @property
    def robot_config(self) -> np.ndarray:
        return self._config.copy()

    @property
    def held_object(self) -> str | None:
        return None if self._held is None else self._held[0]

    @property
    def held_geometry(self) -> HeldGeometry | None:
        return None if self._held is None else self._held[1]

    def _tip(self) -> np.ndarray:
        return ee_poses(self._arm, self._config)[0]

    def _footprint(self, oid: str, margin: float = 0.0) -> np.ndarray:
        hx, hy = self._shapes[oid]
        return rect_corners(*self._poses[oid], hx + margin, hy + margin)

    def _hidden_in_drawer(self, oid: str) -> bool:
        return oid in self._contents and not self._ws.drawer_open(self._fraction)

    def _truth_model(self, exclude_panel: bool = False) -> CollisionModel:
        polys, labels = [], []
        for name, p in self._ws.static_polygons(self._fraction):
            if exclude_panel and name.endswith(".panel"):
                continue
            polys.append(p)
            labels.append(name)
        for oid in sorted(self._poses):
            if self._held is not None and oid == self._held[0]:
                continue
            polys.append(self._footprint(oid))
            labels.append(oid)
        held = None if self._held is None else self._held[1]
        return CollisionModel(self._arm, ConvexSet(polys, labels), held)

    # sensing
    def sense(self) -> Observation:
        cam = np.asarray(self._ws.camera.position, dtype=float)
        held = self.held_object
        if held is not None:
            self._poses[held] = self._held[1].object_pose(self._tip())
        occluders = [o for o in sorted(self._poses) if o != held and not self._hidden_in_drawer(o)]
        foot = {o: self._footprint(o) for o in occluders}
        detected, identities, shadows = {}, {}, []
        for oid in sorted(self._poses):
            if self._hidden_in_drawer(oid):
                continue
            center = self._poses[oid][:2]
            if oid != held:
                if not self._ws.camera.in_fov(center):
                    continue
                others = [foot[o] for o in occluders if o != oid]
                if others and ConvexSet(others).segment_hits(cam[None], center[None]).any():
                    continue
            detected[oid] = tuple(float(v) for v in self._poses[oid])
            if self._ident_visible[oid]:
                identities[oid] = self._labels[oid]
        for oid in sorted(detected):
            if oid == held:
                continue
            poly = shadow_polygon(cam, foot[oid], self._ws.bounds)
            if poly is not None and polygon_area(poly) > 1e-9:
                shadows.append((oid, tuple((float(a), float(b)) for a, b in poly)))
        frac = self._fraction if self._ws.drawer is not None else None
        return Observation(detected, tuple(shadows), identities, frac)

    # motion
    def execute_trajectory(self, traj: Trajectory) -> float:
        if np.max(np.abs(traj.start - self._config)) > START_TOL:
            raise StartMismatch(f"trajectory starts {traj.start.tolist()} but arm is at {self._config.tolist()}")
        if len(traj.waypoints) < 2:
            return 0.0
        model = self._truth_model()
        dense = densify(traj.waypoints, DENSE_RESOLUTION)
        bad = model.first_collision(dense)
        if bad is not None:
            stop = dense[max(bad - 1, 0)]
            contacts = model.blocking_labels(dense[bad])
            moved = Trajectory(np.vstack([dense[:bad], stop[None]]) if bad > 0 else stop[None], traj.speed)
            self.exec_time += moved.length / traj.speed
            self._config = stop.copy()
            self._carry()
            raise CollisionFault(f"collision with {sorted(contacts)}", stop, contacts)
        self._config = traj.end.copy()
        self._carry()
        self.exec_time += traj.duration
        return traj.duration

    def _carry(self):
        if self._held is not None:
            self._poses[self._held[0]] = self._held[1].object_pose(self._tip())

    # gripper
    def grasp(self, oid: str) -> bool:
        """Close the gripper on ``oid``; returns False on a miss."""
        if self._held is not None:
            raise GripperError("gripper already holds an object")
        self.grasp_attempts += 1
        if oid not in self._poses or self._hidden_in_drawer(oid):
            return False
        tip = self._tip()
        pose = self._poses[oid]
        for face, target, across in grasp_poses(pose, self._shapes[oid], self._arm.standoff):
            if 2 * across > self._arm.gripper_opening + 1e-12:
                continue
            if np.hypot(*(tip[:2] - target[:2])) <= GRASP_POS_TOL and abs(wrap_angle(tip[2] - target[2])) <= GRASP_ANG_TOL:
                c, s = np.cos(tip[2]), np.sin(tip[2])
                d = pose[:2] - tip[:2]
                rel = (float(c * d[0] + s * d[1]), float(-s * d[0] + c * d[1]), float(wrap_angle(pose[2] - tip[2])))
                self._held = (oid, HeldGeometry(rel, self._shapes[oid]))
                self._contents.discard(oid)
                return True
        return False

    def release(self) -> str:
        if self._held is None:
            raise GripperError("gripper is empty")
        oid = self._held[0]
        self._carry()
        self._held = None
        return oid

    # world-changing primitives
    def _push_obstacles(self, oid: str) -> ConvexSet:
        polys = [p for _, p in self._ws.static_polygons(self._fraction)]
        polys += [self._footprint(o) for o in sorted(self._poses) if o != oid and o != self.held_object]
        return ConvexSet(polys)

    def apply_push(self, oid: str, axis, model: PushOutcomeModel | None = None) -> np.ndarray:
        """Push ``oid`` along ``axis``; the tip must sit at the contact pose."""
        model = model or self._spec.push
        if self._held is not None:
            raise GripperError("cannot push while holding an object")
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        pose = self._poses[oid].copy()
        half = self._shapes[oid]
        tip = self._tip()
        face = None
        for k, target, _ in grasp_poses(pose, half, self._arm.standoff):
            u = np.array([np.cos(target[2]), np.sin(target[2])])
            if np.dot(u, axis) > 1 - 1e-6:
                face = (k, target)
        if face is None:
            raise PushBlocked("push axis is not an object axis")
        target = face[1]
        if np.hypot(*(tip[:2] - target[:2])) > GRASP_POS_TOL or abs(wrap_angle(tip[2] - target[2])) > GRASP_ANG_TOL:
            raise PushBlocked("end effector is not at the contact pose")
        obstacles = self._push_obstacles(oid)
        end = pose.copy()
        end[:2] += axis * model.nominal_distance
        corridor = np.vstack([rect_corners(*pose, *half), rect_corners(*end, *half)])
        hull = from_shapely(MultiPoint([tuple(p) for p in corridor]).convex_hull)
        if hull is not None and obstacles.polygon_hits(ccw(hull)).any():
            raise PushBlocked("push corridor is blocked")
        dd, dth = model.sample(self._push_rng)
        c, s = np.cos(dth), np.sin(dth)
        direction = np.array([c * axis[0] - s * axis[1], s * axis[0] + c * axis[1]])
        disp = direction * (model.nominal_distance + dd)
        n = max(1, int(np.ceil(np.linalg.norm(disp) / PUSH_PATH_STEP)))
        lo = np.asarray(self._ws.bounds[:2])
        hi = np.asarray(self._ws.bounds[2:])
        final = pose.copy()
        for i in range(1, n + 1):
            lam = i / n
            cand = np.array([pose[0] + lam * disp[0], pose[1] + lam * disp[1], pose[2] + lam * dth])
            poly = rect_corners(*cand, *half)
            if np.any(poly < lo) or np.any(poly > hi) or obstacles.polygon_hits(poly).any():
                break
            final = cand
        final[2] = float(wrap_angle(final[2]))
        self._poses[oid] = final
        self.push_log.append({"object": oid, "dd": dd, "dtheta": dth, "pose": final.tolist()})
        return final.copy()

    def set_drawer(self, fraction: float) -> float:
        """Pull (or push) the drawer to ``fraction`` with the tip on the handle."""
        d = self._ws.drawer
        if d is None:
            raise HandleUnreached("scene has no drawer")
        fraction = float(np.clip(fraction, 0.0, 1.0))
        tip = self._tip()
        target = d.handle_tip_pose(self._fraction, self._arm.standoff)
        if np.hypot(*(tip[:2] - target[:2])) > GRASP_POS_TOL or abs(wrap_angle(tip[2] - target[2])) > GRASP_ANG_TOL:
            raise HandleUnreached("end effector is not at the drawer handle")
        goal = d.handle_tip_pose(fraction, self._arm.standoff)
        path = cartesian_line(self._arm, self._config, goal[:2])
        if path is None:
            raise HandleUnreached("pull path leaves the arm workspace")
        model = self._truth_model(exclude_panel=True)
        # objects riding in the tray move with it and are not obstacles here
        riding = [o for o in self._contents]
        if riding:
            polys, labels = [], []
            for p, lab in zip(model.obstacles.polygons, model.obstacles.labels):
                if lab not in riding:
                    polys.append(p)
                    labels.append(lab)
            model = CollisionModel(self._arm, ConvexSet(polys, labels), model.held)
        dense = densify(path, DENSE_RESOLUTION)
        bad = model.first_collision(dense)
        if bad is not None:
            raise CollisionFault("collision while pulling the drawer", dense[max(bad - 1, 0)],
                                 model.blocking_labels(dense[bad]))
        shift = d.offset(fraction) - d.offset(self._fraction)
        for oid in self._contents:
            self._poses[oid][:2] += shift
        self._fraction = fraction
        self._config = path[-1].copy()
        dur = Trajectory(path, self._arm.joint_speed).duration
        self.exec_time += dur
        return dur

    def query_identity(self) -> str | None:
        """Label of the held object when it is inside the scan region."""
        if self._held is None or self._ws.scan_region is None:
            return None
        oid = self._held[0]
        center = self._held[1].object_pose(self._tip())[:2]
        if points_in_polygon(center[None], self._ws.scan_region.polygon())[0]:
            return self._labels[oid]
        return None

    # logging only
    def snapshot(self) -> dict:
        return {
            "config": self._config.tolist(),
            "held": self.held_object,
            "objects": {k: v.tolist() for k, v in sorted(self._poses.items())},
            "drawer_fraction": self._fraction,
        }

    def truth_for_audit(self) -> dict:
        """Deep copy of the ground truth, for tests and final scoring only."""
        return copy.deepcopy(self.snapshot())
