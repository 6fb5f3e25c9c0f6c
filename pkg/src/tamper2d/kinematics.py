"""Three-link planar arm with a fixed base at the origin."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import wrap_angle

IK_POS_TOL = 1e-4
IK_ANG_TOL = 1e-4


class JointLimit(ValueError):
    pass


@dataclass(frozen=True)
class ArmSpec:
    links: tuple[float, float, float] = (0.5, 0.4, 0.2)
    lower: tuple[float, float, float] = (-np.pi, -2.5, -2.5)
    upper: tuple[float, float, float] = (np.pi, 2.5, 2.5)
    home: tuple[float, float, float] = (-np.pi / 2, 2.4, -0.8)
    gripper_opening: float = 0.10
    gripper_width: float = 0.10
    standoff: float = 0.01
    joint_speed: float = 0.5

    lo: np.ndarray = field(init=False, repr=False, compare=False)
    hi: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.upper, dtype=float))

    @property
    def reach(self) -> float:
        return float(sum(self.links))

    def within_limits(self, q) -> np.ndarray:
        q = np.atleast_2d(q)
        return np.all((q >= self.lo - 1e-12) & (q <= self.hi + 1e-12), axis=1)

    def to_dict(self) -> dict:
        return {
            "links": list(self.links),
            "lower": list(self.lower),
            "upper": list(self.upper),
            "home": list(self.home),
            "gripper_opening": self.gripper_opening,
            "gripper_width": self.gripper_width,
            "standoff": self.standoff,
            "joint_speed": self.joint_speed,
        }


def joint_points(arm: ArmSpec, q) -> np.ndarray:
    """Joint positions for a batch of configs: ``(n, 4, 2)`` base, elbow, wrist, tip."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    a = np.cumsum(q, axis=1)
    steps = np.stack([np.cos(a), np.sin(a)], axis=2) * np.asarray(arm.links)[None, :, None]
    pts = np.zeros((len(q), 4, 2))
    pts[:, 1:] = np.cumsum(steps, axis=1)
    return pts


def ee_poses(arm: ArmSpec, q) -> np.ndarray:
    """``(n, 3)`` tip poses (x, y, heading) without limit checking."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    tip = joint_points(arm, q)[:, 3]
    return np.column_stack([tip, wrap_angle(q.sum(axis=1))])


def forward_kinematics(arm: ArmSpec, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if not arm.within_limits(q)[0]:
        raise JointLimit(f"configuration {q.tolist()} outside joint limits")
    return ee_poses(arm, q)[0]


def inverse_kinematics(arm: ArmSpec, target, n_samples: int = 2) -> list[np.ndarray]:
    """Analytic solutions (elbow-up / elbow-down) inside the joint limits."""
    x, y, phi = (float(v) for v in target)
    l1, l2, l3 = arm.links
    wx, wy = x - l3 * np.cos(phi), y - l3 * np.sin(phi)
    r2 = wx * wx + wy * wy
    c2 = (r2 - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    if c2 > 1.0 + 1e-9 or c2 < -1.0 - 1e-9:
        return []
    c2 = min(1.0, max(-1.0, c2))
    out: list[np.ndarray] = []
    for sign in (1.0, -1.0):
        t2 = sign * np.arccos(c2)
        t1 = np.arctan2(wy, wx) - np.arctan2(l2 * np.sin(t2), l1 + l2 * np.cos(t2))
        t1 = float(wrap_angle(t1))
        t3 = float(wrap_angle(phi - t1 - t2))
        q = np.array([t1, t2, t3])
        if not arm.within_limits(q)[0]:
            continue
        if any(np.max(np.abs(q - p)) < 1e-9 for p in out):
            continue
        pose = ee_poses(arm, q)[0]
        if np.hypot(pose[0] - x, pose[1] - y) > IK_POS_TOL:
            continue
        if abs(wrap_angle(pose[2] - phi)) > IK_ANG_TOL:
            continue
        out.append(q)
        if len(out) >= n_samples:
            break
    return out


def ik_branches(arm: ArmSpec, targets) -> tuple[np.ndarray, np.ndarray]:
    """Batched analytic IK: ``(n, 2, 3)`` elbow-up / elbow-down configs and an
    ``(n, 2)`` mask of those that exist, respect the limits and reproduce the
    target pose."""
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    l1, l2, l3 = arm.links
    phi = t[:, 2]
    wx, wy = t[:, 0] - l3 * np.cos(phi), t[:, 1] - l3 * np.sin(phi)
    c2 = (wx * wx + wy * wy - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    reach = (c2 <= 1.0 + 1e-9) & (c2 >= -1.0 - 1e-9)
    base = np.arccos(np.clip(c2, -1.0, 1.0))
    q = np.zeros((len(t), 2, 3))
    for k, sign in enumerate((1.0, -1.0)):
        t2 = sign * base
        t1 = wrap_angle(np.arctan2(wy, wx) - np.arctan2(l2 * np.sin(t2), l1 + l2 * np.cos(t2)))
        q[:, k] = np.column_stack([t1, t2, wrap_angle(phi - t1 - t2)])
    flat = q.reshape(-1, 3)
    pose = ee_poses(arm, flat).reshape(len(t), 2, 3)
    ok = reach[:, None] & arm.within_limits(flat).reshape(len(t), 2)
    ok &= np.hypot(pose[..., 0] - t[:, None, 0], pose[..., 1] - t[:, None, 1]) <= IK_POS_TOL
    ok &= np.abs(wrap_angle(pose[..., 2] - phi[:, None])) <= IK_ANG_TOL
    return q, ok


def cartesian_line(arm: ArmSpec, q0, target_xy, step: float = 0.004, max_jump: float = 0.15):
    """Joint path moving the tip in a straight line at constant heading.

    Returns ``None`` when the line leaves the workspace or the IK branch
    cannot be followed continuously.
    """
    q0 = np.asarray(q0, dtype=float)
    start = ee_poses(arm, q0)[0]
    target_xy = np.asarray(target_xy, dtype=float)
    dist = float(np.linalg.norm(target_xy - start[:2]))
    n = max(1, int(np.ceil(dist / step)))
    f = np.arange(1, n + 1)[:, None] / n
    pts = start[:2] + (target_xy - start[:2]) * f
    sols, ok = ik_branches(arm, np.column_stack([pts, np.full(n, start[2])]))
    if not ok.any(axis=1).all():
        return None
    path = np.empty((n + 1, 3))
    path[0] = q0
    for i in range(n):
        jump = np.where(ok[i], np.max(np.abs(sols[i] - path[i]), axis=1), np.inf)
        k = int(np.argmin(jump))
        if jump[k] > max_jump:
            return None
        path[i + 1] = sols[i, k]
    return path
