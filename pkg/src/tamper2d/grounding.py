"""From symbolic actions to motion queries.

A ``ProjectedWorld`` is the planner's forward model while a partial plan is
built: the belief, the assumed arm configuration and the assumed grasp. Each
grounded step produces a list of ``Segment``s; ``realize`` turns segments
into executable primitives by solving the motion queries and advances the
projected world.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np
from shapely.geometry import MultiPoint, Polygon

from .belief import BeliefState
from .geometry import (
    ConvexSet,
    DegeneratePolygon,
    ccw,
    from_shapely,
    grasp_poses,
    points_in_polygon,
    polygon_area,
    polygons_overlap,
    rect_corners,
    shadow_polygon,
    shrink_polygon,
    wrap_angle,
)
from .kinematics import cartesian_line, ee_poses, inverse_kinematics
from .motion import (
    DEFAULT_BUDGET_S,
    DENSE_RESOLUTION,
    CollisionModel,
    HeldGeometry,
    MotionFailure,
    MotionQuery,
    Trajectory,
    densify,
    solve,
)
from .task.domain import Action, GroundingConfidence
from .workspace import PLAN_MARGIN, Workspace

PLACE_SAMPLES = 50
PLACE_ACCEPT = 3
CORRIDOR_CLEARANCE = 0.01
IK_SAMPLES = 2


class GroundingError(Exception):
    pass


@dataclass(frozen=True)
class Segment:
    """One piece of a grounded action, before motion planning."""

    kind: str  # move | retreat | grasp | release | pull | push
    goals: tuple = ()
    obj: str | None = None
    axis: tuple | None = None
    fraction: float | None = None
    approach: float = 0.0


@dataclass(frozen=True)
class Primitive:
    """An executable step: a trajectory or a gripper/world primitive."""

    kind: str  # move | grasp | release | pull | push
    traj: Trajectory | None = None
    obj: str | None = None
    axis: tuple | None = None
    fraction: float | None = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.traj is not None:
            d["waypoints"] = len(self.traj.waypoints)
            d["start"] = [round(float(v), 9) for v in self.traj.start]
            d["end"] = [round(float(v), 9) for v in self.traj.end]
            d["duration"] = round(self.traj.duration, 9)
            d["digest"] = hashlib.sha1(np.round(self.traj.waypoints, 12).tobytes()).hexdigest()[:16]
        if self.obj is not None:
            d["obj"] = self.obj
        if self.axis is not None:
            d["axis"] = [round(float(v), 9) for v in self.axis]
        if self.fraction is not None:
            d["fraction"] = self.fraction
        return d


@dataclass(frozen=True)
class GroundingResult:
    outcome: str  # Query | Gap | Failure
    segments: tuple[Segment, ...] = ()
    reason: str = ""
    blockers: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.outcome == "Query"

    def query(self, world: "ProjectedWorld", budget_s: float = DEFAULT_BUDGET_S, seed=0) -> MotionQuery:
        """Motion query for the first move segment from the projected start."""
        if not self.ok:
            raise GroundingError(f"no query for a {self.outcome} result")
        seg = next(s for s in self.segments if s.kind == "move")
        return MotionQuery(world.config, list(seg.goals), world.model(), budget_s, seed)


def _failure(reason: str, blockers=()) -> GroundingResult:
    return GroundingResult("Failure", (), reason, tuple(sorted(set(blockers))))


def relative_pose(tip, pose) -> tuple[float, float, float]:
    """``pose`` expressed in the frame of ``tip``."""
    c, s = np.cos(tip[2]), np.sin(tip[2])
    dx, dy = pose[0] - tip[0], pose[1] - tip[1]
    return (float(c * dx + s * dy), float(-s * dx + c * dy), float(wrap_angle(pose[2] - tip[2])))


def assumed_grasp(arm, half) -> HeldGeometry:
    """Grasp assumed for an object picked by a behavior: the first face that fits."""
    for k in range(4):
        along = half[0] if k % 2 == 0 else half[1]
        across = half[1] if k % 2 == 0 else half[0]
        if 2 * across <= arm.gripper_opening + 1e-12:
            return HeldGeometry((along + arm.standoff, 0.0, -k * np.pi / 2), tuple(half))
    return HeldGeometry((half[0] + arm.standoff, 0.0, 0.0), tuple(half))


def corridor_polygon(tip_pose, length: float, width: float) -> np.ndarray:
    """Rectangle swept by the gripper behind ``tip_pose`` along its heading."""
    x, y, phi = tip_pose
    u = np.array([np.cos(phi), np.sin(phi)])
    c = np.array([x, y]) - u * (length / 2)
    return rect_corners(c[0], c[1], phi, length / 2, width / 2)


@dataclass(frozen=True)
class ProjectedWorld:
    belief: BeliefState
    config: np.ndarray
    held: tuple[str, HeldGeometry] | None = None

    @property
    def ws(self) -> Workspace:
        return self.belief.workspace

    @property
    def held_id(self) -> str | None:
        return None if self.held is None else self.held[0]

    def model(self, exclude=(), skip_panel: bool = False, start=None) -> CollisionModel:
        """Planning validity model against the belief.

        Statics and known footprints are inflated by the planning margin;
        occlusion regions are used as they are. Occlusion regions touched by
        the arm at ``start`` are dropped: the arm occupying them shows they
        are at least partly free, and keeping them would make every query
        from there start in collision.
        """
        b = self.belief
        polys, labels = [], []
        for name, p in self.ws.static_polygons(b.drawer_fraction, PLAN_MARGIN):
            if skip_panel and name.endswith(".panel"):
                continue
            polys.append(p)
            labels.append(name)
        skip = set(exclude)
        if self.held is not None:
            skip.add(self.held[0])
        for oid in sorted(b.known):
            if oid in skip:
                continue
            polys.append(b.footprint(oid, PLAN_MARGIN))
            labels.append(oid)
        held = None if self.held is None else self.held[1]
        regions = b.occlusion_regions()
        start = self.config if start is None else start
        if regions:
            probe = CollisionModel(self.ws.arm, ConvexSet([p for _, p in regions], list(range(len(regions)))), held)
            touched = probe.blocking_labels(start)
            for j, (occ, p) in enumerate(regions):
                if j not in touched:
                    polys.append(p)
                    labels.append(f"shadow:{occ}")
        return CollisionModel(self.ws.arm, ConvexSet(polys, labels), held)

    def tip(self) -> np.ndarray:
        return ee_poses(self.ws.arm, self.config)[0]


def resolve(b: BeliefState, symbol: str) -> str | None:
    """Physical id for a domain object symbol, if the belief can name it."""
    oid = b.resolve(symbol)
    if oid is None and symbol in b.known and symbol not in b.identities:
        return symbol
    return oid


def can_ground(a: Action, b: BeliefState) -> bool:
    conf = GroundingConfidence(a.confidence)
    if conf is GroundingConfidence.GAP_DYNAMICS:
        return False
    if conf in (GroundingConfidence.GAP_PERCEPTION, GroundingConfidence.GAP_IDENTITY):
        oid = b.resolve(a.params[0])
        return oid is not None and oid in b.known
    return True


def _ik_goals(world: ProjectedWorld, tip_pose, model: CollisionModel) -> list[np.ndarray]:
    sols = inverse_kinematics(world.ws.arm, tip_pose, IK_SAMPLES)
    if not sols:
        return []
    ok = model.valid(np.array(sols))
    return [q for q, v in zip(sols, ok) if v]


def _static_set(ws: Workspace, fraction: float) -> ConvexSet:
    return ws.static_set(fraction)


def approach_distance(ws: Workspace, pose, fraction: float = 0.0) -> float:
    """Straight approach length for a grasp at ``pose``: the pick corridor,
    or the placement corridor of the region it sits in when that is longer."""
    name = ws.region_of(pose[:2], fraction)
    d = ws.pick_corridor
    if name is not None:
        d = max(d, ws.region(name).corridor)
    return float(d)


def approach_path(arm, q, distance: float, model: CollisionModel):
    """Joint path that backs the tip off ``q`` along its heading, reversed so
    it ends at ``q``; ``None`` if the line is unreachable or in collision."""
    tip = ee_poses(arm, q)[0]
    back = tip[:2] - distance * np.array([np.cos(tip[2]), np.sin(tip[2])])
    path = cartesian_line(arm, q, back)
    if path is None:
        return None
    path = path[::-1].copy()
    if not model.valid(densify(path, DENSE_RESOLUTION)).all():
        return None
    return path


def ground_pick(world: ProjectedWorld, oid: str) -> GroundingResult:
    """Axis-aligned grasps of a known object, filtered by approach corridors.

    A corridor is blocked by statics and by known objects with a larger
    footprint than the target; those objects are reported as blockers.
    """
    b, ws, arm = world.belief, world.ws, world.ws.arm
    if oid not in b.known:
        return _failure("Unknown")
    if world.held is not None:
        return _failure("HandFull")
    if ws.in_closed_drawer(b.known[oid][:2], b.drawer_fraction):
        return _failure("InClosedDrawer")
    half = b.shape(oid)
    area = half[0] * half[1]
    others = [o for o in sorted(b.known) if o != oid and b.shape(o)[0] * b.shape(o)[1] > area]
    big = ConvexSet([b.footprint(o) for o in others], others)
    statics = _static_set(ws, b.drawer_fraction)
    width = arm.gripper_width + CORRIDOR_CLEARANCE
    model = world.model()
    goals, blockers, any_fit = [], set(), False
    for k, tip, across in grasp_poses(b.known[oid], half, arm.standoff):
        if 2 * across > arm.gripper_opening + 1e-12:
            continue
        any_fit = True
        cor = corridor_polygon(tip, ws.pick_corridor, width)
        hit_big = big.polygon_hits(cor) if len(big) else np.zeros(0, bool)
        hit_static = statics.polygon_hits(cor).any() if len(statics) else False
        if hit_big.any() or hit_static:
            blockers.update(big.labels[j] for j in np.flatnonzero(hit_big))
            continue
        goals.extend(_ik_goals(world, tip, model))
    if not any_fit:
        return _failure("NoGrasp")
    if not goals:
        return _failure("NoGrasp", blockers)
    d = approach_distance(ws, b.known[oid], b.drawer_fraction)
    return GroundingResult("Query", (Segment("move", tuple(goals), approach=d), Segment("grasp", obj=oid),
                                     Segment("retreat", approach=d)))


def _place_tip_headings(region, held: HeldGeometry, rng) -> list[float]:
    dth = held.rel[2]
    if region.approach is not None:
        return [float(region.approach)]
    h = float(region.headings[int(rng.integers(len(region.headings)))])
    return [float(wrap_angle(h - dth)), float(wrap_angle(h - dth + np.pi))]


def ground_place(world: ProjectedWorld, region_name: str, rng: np.random.Generator) -> GroundingResult:
    """Sample placements of the held object inside a region.

    A sample is kept when its footprint is clear of statics and known
    objects, the gripper corridor behind the tip is clear, its would-be
    occlusion region does not meet an existing one, and the tip pose has a
    valid IK solution.
    """
    if world.held is None:
        return _failure("NotHolding")
    oid, held = world.held
    b, ws, arm = world.belief, world.ws, world.ws.arm
    region = ws.region(region_name)
    poly = region.polygon(ws.drawer, b.drawer_fraction)
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    others = [o for o in sorted(b.known) if o != oid]
    feet = ConvexSet([b.footprint(o) for o in others], others)
    statics = _static_set(ws, b.drawer_fraction)
    regions = [(o, p) for o, p in b.occlusion_regions() if o != oid]
    width = arm.gripper_width + CORRIDOR_CLEARANCE
    cam = np.asarray(ws.camera.position, dtype=float)
    model = world.model()
    goals, blockers, accepted = [], set(), 0
    for _ in range(PLACE_SAMPLES):
        c = rng.uniform(lo, hi)
        if not points_in_polygon(c[None], poly)[0]:
            continue
        for phi in _place_tip_headings(region, held, rng):
            off = np.array([np.cos(phi) * held.rel[0] - np.sin(phi) * held.rel[1],
                            np.sin(phi) * held.rel[0] + np.cos(phi) * held.rel[1]])
            tip = np.array([c[0] - off[0], c[1] - off[1], phi])
            pose = held.object_pose(tip)
            foot = rect_corners(*pose, *held.half_extents)
            if len(statics) and statics.polygon_hits(foot).any():
                continue
            if len(feet):
                hit = feet.polygon_hits(foot)
                if hit.any():
                    blockers.update(feet.labels[j] for j in np.flatnonzero(hit))
                    continue
            cor = corridor_polygon(tip, region.corridor, width)
            if len(statics) and statics.polygon_hits(cor).any():
                continue
            if len(feet):
                hit = feet.polygon_hits(cor)
                if hit.any():
                    blockers.update(feet.labels[j] for j in np.flatnonzero(hit))
                    continue
            if regions and _shadow_conflict(cam, foot, ws.bounds, b.epsilon, regions):
                continue
            qs = _ik_goals(world, tip, model)
            if not qs:
                continue
            goals.extend(qs)
            accepted += 1
            break
        if accepted >= PLACE_ACCEPT:
            break
    if not goals:
        return _failure("NoPlacement", blockers)
    d = region.corridor
    return GroundingResult("Query", (Segment("move", tuple(goals), approach=d), Segment("release", obj=oid),
                                     Segment("retreat", approach=d)))


def _shadow_conflict(cam, foot, bounds, eps, regions) -> bool:
    sh = shadow_polygon(cam, foot, bounds)
    if sh is None:
        return False
    try:
        sh = shrink_polygon(sh, eps)
    except DegeneratePolygon:
        return False
    if polygon_area(sh) <= 0:
        return False
    return any(polygons_overlap(sh, p) for _, p in regions)


def place_shadow_conflicts(world: ProjectedWorld, pose) -> bool:
    """Whether a placement at ``pose`` of the held object fails the occlusion filter."""
    oid, held = world.held
    b, ws = world.belief, world.ws
    foot = rect_corners(*pose, *held.half_extents)
    regions = [(o, p) for o, p in b.occlusion_regions() if o != oid]
    return bool(regions) and _shadow_conflict(np.asarray(ws.camera.position), foot, ws.bounds, b.epsilon, regions)


def drawer_contents(b: BeliefState) -> list[str]:
    ws = b.workspace
    if ws.drawer is None:
        return []
    tray = ws.drawer.tray_polygon(b.drawer_fraction)
    return [o for o in sorted(b.known) if points_in_polygon(np.asarray(b.known[o][:2])[None], tray)[0]]


def ground_open_drawer(world: ProjectedWorld, fraction: float = 1.0) -> GroundingResult:
    """Approach the handle, then a straight pull along the drawer axis."""
    b, ws, arm = world.belief, world.ws, world.ws.arm
    d = ws.drawer
    if d is None:
        return _failure("NoDrawer")
    if world.held is not None:
        return _failure("HandFull")
    model = world.model()
    target = d.handle_tip_pose(b.drawer_fraction, arm.standoff)
    end = d.handle_tip_pose(fraction, arm.standoff)
    contents = drawer_contents(b)
    pull_model = world.model(exclude=contents, skip_panel=True)
    blockers = set()
    for q in inverse_kinematics(arm, target, IK_SAMPLES):
        if not model.valid(q)[0]:
            blockers.update(l for l in model.blocking_labels(q) if l in b.known)
            continue
        path = cartesian_line(arm, q, end[:2])
        if path is None:
            continue
        bad = pull_model.first_collision(path)
        if bad is not None:
            blockers.update(l for l in pull_model.blocking_labels(path[bad]) if l in b.known)
            continue
        return GroundingResult("Query", (Segment("move", (q,), approach=ws.pick_corridor), Segment("pull", fraction=fraction)))
    return _failure("HandleUnreachable", blockers)


def push_candidates(world: ProjectedWorld, oid: str, distance: float):
    """Feasible push directions for a known object, best clearance first.

    A direction is feasible when the swept footprint is clear of statics and
    known objects, the contact pose has a valid IK solution, and the object
    can be grasped at the nominal end pose. Clearance is the distance from
    the nominal end footprint to the nearest static, known object or
    occlusion region.
    """
    b, ws, arm = world.belief, world.ws, world.ws.arm
    pose = np.asarray(b.known[oid], dtype=float)
    half = b.shape(oid)
    others = [o for o in sorted(b.known) if o != oid]
    polys = [p for _, p in ws.static_polygons(b.drawer_fraction)] + [b.footprint(o) for o in others]
    obstacles = ConvexSet(polys)
    shadows = [p for o, p in b.occlusion_regions() if o != oid]
    model = world.model()
    out = []
    for k, tip, _ in grasp_poses(pose, half, arm.standoff):
        u = np.array([np.cos(tip[2]), np.sin(tip[2])])
        end = pose.copy()
        end[:2] += u * distance
        start_foot = rect_corners(*pose, *half)
        end_foot = rect_corners(*end, *half)
        hull = from_shapely(MultiPoint([tuple(p) for p in np.vstack([start_foot, end_foot])]).convex_hull)
        if hull is not None and len(obstacles) and obstacles.polygon_hits(ccw(hull)).any():
            continue
        lo, hi = np.asarray(ws.bounds[:2]), np.asarray(ws.bounds[2:])
        if np.any(end_foot < lo) or np.any(end_foot > hi):
            continue
        contact = _ik_goals(world, tip, model)
        if not contact:
            continue
        after = replace(world, belief=b.with_pose(oid, end))
        if not ground_pick(after, oid).ok:
            continue
        ef = Polygon(end_foot)
        gaps = [ef.distance(Polygon(p)) for p in polys + shadows]
        clearance = min(gaps) if gaps else float("inf")
        out.append((clearance, k, u, contact, end))
    out.sort(key=lambda t: (-t[0], t[1]))
    return out


def ground_push_pick(world: ProjectedWorld, oid: str) -> GroundingResult:
    """Open-loop push followed by a grasp at the predicted end pose."""
    if world.held is not None:
        return _failure("HandFull")
    if oid not in world.belief.known:
        return _failure("Unknown")
    distance = world.ws.push_distance
    cands = push_candidates(world, oid, distance)
    if not cands:
        return _failure("PushBlocked")
    _, _, u, contact, end = cands[0]
    after = replace(world, belief=world.belief.with_pose(oid, end))
    pick = ground_pick(after, oid)
    push = Segment("push", obj=oid, axis=(float(u[0]), float(u[1])))
    segs = (Segment("move", tuple(contact), approach=world.ws.pick_corridor), push) + pick.segments
    return GroundingResult("Query", segs)


def ground_action(world: ProjectedWorld, a: Action, rng: np.random.Generator) -> GroundingResult:
    """Dispatch on the action name; object symbols are resolved via the belief."""
    b = world.belief
    if a.name in ("Pick", "PickId"):
        oid = resolve(b, a.params[0])
        if oid is None:
            return _failure("Unknown")
        return ground_pick(world, oid)
    if a.name == "Place":
        return ground_place(world, a.params[1], rng)
    if a.name == "Open":
        return ground_open_drawer(world)
    if a.name == "PushPick":
        oid = resolve(b, a.params[0])
        if oid is None:
            return _failure("Unknown")
        return ground_push_pick(world, oid)
    raise GroundingError(f"no grounding for action {a.name}")


def realize(world: ProjectedWorld, result: GroundingResult, budget_s: float, seed) -> tuple[list[Primitive], ProjectedWorld]:
    """Solve the motion segments of a grounded action in order.

    Raises ``MotionFailure`` (or another ``MotionError``) when a segment
    cannot be planned.
    """
    prims: list[Primitive] = []
    arm = world.ws.arm
    for i, seg in enumerate(result.segments):
        if seg.kind == "move":
            model = world.model()
            goals, tails = list(seg.goals), {}
            if seg.approach > 0:
                for g in seg.goals:
                    path = approach_path(arm, g, seg.approach, model)
                    if path is not None:
                        tails[len(tails)] = path
                if tails:
                    goals = [p[0] for p in tails.values()]
            traj = solve(MotionQuery(world.config, goals, model, budget_s, _seed(seed, i)))
            for path in tails.values():
                if np.max(np.abs(path[0] - traj.end)) <= 1e-9:
                    traj = traj.then(Trajectory(path, arm.joint_speed))
                    break
            prims.append(Primitive("move", traj))
            world = replace(world, config=traj.end.copy())
        elif seg.kind == "retreat":
            path = approach_path(arm, world.config, seg.approach, world.model())
            if path is not None:
                traj = Trajectory(path[::-1].copy(), arm.joint_speed)
                prims.append(Primitive("move", traj))
                world = replace(world, config=traj.end.copy())
        elif seg.kind == "grasp":
            tip = world.tip()
            pose = world.belief.known[seg.obj]
            hg = HeldGeometry(relative_pose(tip, pose), world.belief.shape(seg.obj))
            prims.append(Primitive("grasp", obj=seg.obj))
            world = replace(world, held=(seg.obj, hg))
        elif seg.kind == "release":
            oid, hg = world.held
            pose = hg.object_pose(world.tip())
            pose[2] = float(wrap_angle(pose[2]))
            prims.append(Primitive("release", obj=oid))
            world = replace(world, belief=world.belief.with_pose(oid, pose), held=None)
        elif seg.kind == "pull":
            d = world.ws.drawer
            end = d.handle_tip_pose(seg.fraction, arm.standoff)
            path = cartesian_line(arm, world.config, end[:2])
            if path is None:
                raise MotionFailure("pull_unreachable")
            prims.append(Primitive("pull", Trajectory(path, arm.joint_speed), fraction=seg.fraction))
            world = advance_drawer(replace(world, config=path[-1].copy()), seg.fraction)
        elif seg.kind == "push":
            b = world.belief
            pose = np.asarray(b.known[seg.obj], dtype=float).copy()
            pose[:2] += np.asarray(seg.axis) * world.ws.push_distance
            prims.append(Primitive("push", obj=seg.obj, axis=seg.axis))
            world = replace(world, belief=b.with_pose(seg.obj, pose))
        else:
            raise GroundingError(f"unknown segment {seg.kind}")
    return prims, world


def advance_drawer(world: ProjectedWorld, fraction: float) -> ProjectedWorld:
    b = world.belief
    d = world.ws.drawer
    shift = d.offset(fraction) - d.offset(b.drawer_fraction)
    for oid in drawer_contents(b):
        p = np.asarray(b.known[oid], dtype=float).copy()
        p[:2] += shift
        b = b.with_pose(oid, p)
    props = dict(b.properties)
    props["drawer_fraction"] = float(fraction)
    return replace(world, belief=replace(b, properties=props))


def _seed(seed, i: int):
    base = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return base + [i]


def optimistic_restart_state(world: ProjectedWorld, a: Action) -> ProjectedWorld:
    """Assumed world after a behavior for ``a``: arm at home, effects applied.

    Pick-like actions leave the target held with the first grasp that fits;
    drawer opening leaves the drawer fully open.
    """
    ws = world.ws
    home = np.asarray(ws.arm.home, dtype=float)
    if a.name in ("Pick", "PickId", "PushPick"):
        sym = a.params[0]
        oid = resolve(world.belief, sym) or sym
        half = ws.shapes[oid] if oid in ws.shapes else ws.shapes[sym]
        return replace(world, config=home, held=(oid, assumed_grasp(ws.arm, half)))
    if a.name == "Open":
        return advance_drawer(replace(world, config=home), 1.0)
    return replace(world, config=home)
