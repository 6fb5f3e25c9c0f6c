"""Joint-space motion planning for the planar arm.

Collision checking treats the links as zero-thickness segments and a held
object as its rectangle outline (plus diagonals), tested against a batch of
convex obstacles. Planning is bidirectional RRT with a greedy connect step
and a multi-root goal tree, followed by random shortcutting.

Time budgets are expressed in nominal seconds and converted to a fixed
number of tree-growing iterations so that every run is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ConvexSet, rect_corners, segments_cross
from .kinematics import ArmSpec, joint_points

PLAN_RESOLUTION = 0.02
DENSE_RESOLUTION = 1e-3
ITERATIONS_PER_SECOND = 500
EXTEND_STEP = 0.3
SHORTCUT_ATTEMPTS = 100
DEFAULT_BUDGET_S = 2.0
# iterations charged when a connected path fails the dense check; shortcutting
# and densifying cost about as much as this many extensions
REJECT_COST = 50


class MotionError(Exception):
    pass


class InvalidStart(MotionError):
    pass


class GoalSetEmpty(MotionError):
    pass


class MotionFailure(MotionError):
    def __init__(self, reason: str = "budget_exhausted"):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class HeldGeometry:
    """Rectangle rigidly attached to the tip: center/heading in the tip frame."""

    rel: tuple[float, float, float]
    half_extents: tuple[float, float]

    def outline_local(self) -> np.ndarray:
        return rect_corners(*self.rel, *self.half_extents)

    def world_corners(self, tip_pose) -> np.ndarray:
        x, y, phi = tip_pose
        c, s = np.cos(phi), np.sin(phi)
        loc = self.outline_local()
        return np.column_stack([x + c * loc[:, 0] - s * loc[:, 1], y + s * loc[:, 0] + c * loc[:, 1]])

    def object_pose(self, tip_pose) -> np.ndarray:
        x, y, phi = tip_pose
        dx, dy, dth = self.rel
        c, s = np.cos(phi), np.sin(phi)
        return np.array([x + c * dx - s * dy, y + s * dx + c * dy, phi + dth])


class CollisionModel:
    """Validity predicate: joint limits, self-clearance and obstacle clearance."""

    def __init__(self, arm: ArmSpec, obstacles: ConvexSet, held: HeldGeometry | None = None):
        self.arm = arm
        self.obstacles = obstacles
        self.held = held
        if held is not None:
            loc = held.outline_local()
            idx = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)]
            self._held_a = loc[[i for i, _ in idx]]
            self._held_b = loc[[j for _, j in idx]]

    def segments(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Endpoints ``(n, k, 2)`` of every robot segment for each config."""
        pts = joint_points(self.arm, q)
        a, b = pts[:, :3], pts[:, 1:]
        if self.held is None:
            return a, b
        phi = np.sum(q, axis=1)
        c, s = np.cos(phi), np.sin(phi)
        rot = np.stack([np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2)
        tip = pts[:, 3][:, None]
        ha = tip + np.einsum("nij,kj->nki", rot, self._held_a)
        hb = tip + np.einsum("nij,kj->nki", rot, self._held_b)
        return np.concatenate([a, ha], axis=1), np.concatenate([b, hb], axis=1)

    def valid(self, q) -> np.ndarray:
        q = np.atleast_2d(np.asarray(q, dtype=float))
        ok = self.arm.within_limits(q)
        if not ok.any():
            return ok
        a, b = self.segments(q)
        n, k = a.shape[:2]
        # link 1 against link 3 and against the held outline
        others = [2] + list(range(3, k))
        m = len(others)
        a0 = np.repeat(a[:, 0], m, axis=0)
        b0 = np.repeat(b[:, 0], m, axis=0)
        cross = segments_cross(a0, b0, a[:, others].reshape(-1, 2), b[:, others].reshape(-1, 2))
        ok &= ~cross.reshape(n, m).any(axis=1)
        if len(self.obstacles):
            hits = self.obstacles.segment_hits(a.reshape(-1, 2), b.reshape(-1, 2))
            ok &= ~hits.reshape(n, k, -1).any(axis=(1, 2))
        return ok

    def first_collision(self, q) -> int | None:
        v = self.valid(q)
        bad = np.flatnonzero(~v)
        return int(bad[0]) if len(bad) else None

    def blocking_labels(self, q) -> set:
        """Labels of obstacles touched by any config in ``q``."""
        q = np.atleast_2d(np.asarray(q, dtype=float))
        if not len(self.obstacles):
            return set()
        a, b = self.segments(q)
        hits = self.obstacles.segment_hits(a.reshape(-1, 2), b.reshape(-1, 2)).any(axis=0)
        return {self.obstacles.labels[j] for j in np.flatnonzero(hits)}

    def edge_valid(self, qa, qb, resolution: float = PLAN_RESOLUTION) -> bool:
        return bool(self.valid(interpolate(qa, qb, resolution)).all())


def interpolate(qa, qb, resolution: float) -> np.ndarray:
    qa = np.asarray(qa, dtype=float)
    qb = np.asarray(qb, dtype=float)
    n = max(1, int(np.ceil(np.max(np.abs(qb - qa)) / resolution)))
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return qa + t * (qb - qa)


def densify(path: np.ndarray, resolution: float = PLAN_RESOLUTION) -> np.ndarray:
    path = np.atleast_2d(np.asarray(path, dtype=float))
    if len(path) < 2:
        return path.copy()
    parts = [path[:1]]
    for qa, qb in zip(path[:-1], path[1:]):
        parts.append(interpolate(qa, qb, resolution)[1:])
    return np.vstack(parts)


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear joint path, sampled at the planning resolution."""

    waypoints: np.ndarray
    speed: float = 0.5

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.waypoints, dtype=float))
        object.__setattr__(self, "waypoints", w)

    @property
    def start(self) -> np.ndarray:
        return self.waypoints[0]

    @property
    def end(self) -> np.ndarray:
        return self.waypoints[-1]

    @property
    def length(self) -> float:
        if len(self.waypoints) < 2:
            return 0.0
        return float(np.sum(np.max(np.abs(np.diff(self.waypoints, axis=0)), axis=1)))

    @property
    def duration(self) -> float:
        return self.length / self.speed

    def __call__(self, tau: float) -> np.ndarray:
        """Configuration at normalized path position ``tau`` in [0, 1]."""
        w = self.waypoints
        if len(w) == 1:
            return w[0].copy()
        seg = np.max(np.abs(np.diff(w, axis=0)), axis=1)
        total = seg.sum()
        if total == 0:
            return w[0].copy()
        s = min(max(tau, 0.0), 1.0) * total
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        i = min(int(np.searchsorted(cum, s, side="right")) - 1, len(seg) - 1)
        f = 0.0 if seg[i] == 0 else (s - cum[i]) / seg[i]
        return w[i] + f * (w[i + 1] - w[i])

    def dense(self, resolution: float = DENSE_RESOLUTION) -> np.ndarray:
        return densify(self.waypoints, resolution)

    def then(self, other: "Trajectory") -> "Trajectory":
        if len(self.waypoints) and np.max(np.abs(self.end - other.start)) > 1e-6:
            raise ValueError("trajectories do not chain")
        return Trajectory(np.vstack([self.waypoints, other.waypoints[1:]]), self.speed)

    def max_step(self) -> float:
        if len(self.waypoints) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.waypoints, axis=0))))

    def to_list(self, digits: int | None = None) -> list:
        w = self.waypoints if digits is None else np.round(self.waypoints, digits)
        return w.tolist()


@dataclass
class MotionQuery:
    start: np.ndarray
    goals: list
    model: CollisionModel
    budget_s: float = DEFAULT_BUDGET_S
    rng_seed: int | tuple = 0

    def __post_init__(self):
        if self.budget_s <= 0:
            raise ValueError("budget_s must be positive")
        self.start = np.asarray(self.start, dtype=float)
        self.goals = [np.asarray(g, dtype=float) for g in self.goals]

    @property
    def iterations(self) -> int:
        return max(1, int(round(self.budget_s * ITERATIONS_PER_SECOND)))


class _Tree:
    def __init__(self, roots):
        roots = np.atleast_2d(roots)
        cap = max(64, 4 * len(roots))
        self.nodes = np.zeros((cap, 3))
        self.parent = np.full(cap, -1, dtype=int)
        self.n = len(roots)
        self.nodes[: self.n] = roots

    def add(self, q, parent: int) -> int:
        if self.n == len(self.nodes):
            self.nodes = np.vstack([self.nodes, np.zeros_like(self.nodes)])
            self.parent = np.concatenate([self.parent, np.full(len(self.parent), -1, dtype=int)])
        self.nodes[self.n] = q
        self.parent[self.n] = parent
        self.n += 1
        return self.n - 1

    def nearest(self, q) -> int:
        d = np.sum((self.nodes[: self.n] - q) ** 2, axis=1)
        return int(np.argmin(d))

    def path_to_root(self, i: int) -> list:
        out = []
        while i >= 0:
            out.append(self.nodes[i].copy())
            i = self.parent[i]
        return out


def _steer(q_from, q_to, step):
    d = q_to - q_from
    n = float(np.linalg.norm(d))
    if n <= step:
        return q_to.copy(), True
    return q_from + d * (step / n), False


def _extend(tree: _Tree, q, model: CollisionModel):
    i = tree.nearest(q)
    q_new, reached = _steer(tree.nodes[i], q, EXTEND_STEP)
    if not model.edge_valid(tree.nodes[i], q_new):
        return None, False
    return tree.add(q_new, i), reached


def _connect(tree: _Tree, q, model: CollisionModel):
    """Greedy extension towards ``q`` in EXTEND_STEP hops.

    The whole straight line is checked in one batch; hops up to the first
    invalid sample are added. Returns the node at ``q`` or None when blocked.
    """
    i = tree.nearest(q)
    start = tree.nodes[i].copy()
    dist = float(np.linalg.norm(q - start))
    if dist == 0.0:
        return i
    line = interpolate(start, q, PLAN_RESOLUTION)
    bad = model.first_collision(line)
    reach = 1.0 if bad is None else (bad - 1) / (len(line) - 1)
    hops = np.minimum(np.arange(1, int(np.ceil(dist / EXTEND_STEP)) + 1) * EXTEND_STEP, dist) / dist
    for f in hops:
        if f > reach:
            return None
        i = tree.add(start + f * (q - start), i)
    return i


def shortcut(path: list, model: CollisionModel, rng: np.random.Generator, attempts: int = SHORTCUT_ATTEMPTS):
    path = [np.asarray(p, dtype=float) for p in path]
    for _ in range(attempts):
        if len(path) < 3:
            break
        i, j = sorted(rng.choice(len(path), size=2, replace=False))
        if j - i < 2:
            continue
        if model.edge_valid(path[i], path[j]):
            path = path[: i + 1] + path[j:]
    return path


def solve(query: MotionQuery) -> Trajectory:
    model = query.model
    speed = model.arm.joint_speed
    if not model.valid(query.start)[0]:
        raise InvalidStart("start configuration is in collision under the query model")
    if not query.goals:
        raise GoalSetEmpty("no goal configurations")
    goals = np.array(query.goals)
    ok = model.valid(goals)
    if not ok.any():
        raise GoalSetEmpty("every goal configuration is invalid")
    goals = goals[ok]
    rng = np.random.default_rng(query.rng_seed)
    for g in goals:
        if np.max(np.abs(g - query.start)) < 1e-12:
            return Trajectory(query.start[None], speed)
    for g in goals:
        if model.edge_valid(query.start, g):
            traj = Trajectory(densify(np.array([query.start, g])), speed)
            if dense_valid(traj, model):
                return traj

    ta, tb = _Tree(query.start), _Tree(goals)
    a_is_start = True
    lo, hi = model.arm.lo, model.arm.hi
    left = query.iterations
    while left > 0:
        left -= 1
        q_rand = rng.uniform(lo, hi)
        j, _ = _extend(ta, q_rand, model)
        if j is not None:
            k = _connect(tb, ta.nodes[j], model)
            if k is not None:
                pa, pb = ta.path_to_root(j), tb.path_to_root(k)
                if a_is_start:
                    path = pa[::-1] + pb[1:]
                else:
                    path = pb[::-1] + pa[1:]
                # edges are checked at the planning resolution; the final
                # path must also survive the dense check
                for cand in (shortcut(path, model, rng), path):
                    traj = Trajectory(densify(np.array(cand)), speed)
                    if dense_valid(traj, model):
                        return traj
                left -= REJECT_COST
        ta, tb = tb, ta
        a_is_start = not a_is_start
    raise MotionFailure("budget_exhausted")


def dense_valid(traj: Trajectory, model: CollisionModel, resolution: float = DENSE_RESOLUTION) -> bool:
    return bool(model.valid(traj.dense(resolution)).all())
