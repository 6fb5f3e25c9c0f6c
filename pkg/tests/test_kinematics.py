import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tamper2d.geometry import wrap_angle
from tamper2d.kinematics import (
    ArmSpec,
    JointLimit,
    cartesian_line,
    ee_poses,
    forward_kinematics,
    ik_branches,
    inverse_kinematics,
    joint_points,
)

ARM = ArmSpec()


def homogeneous(theta, length):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, length * c], [s, c, length * s], [0.0, 0.0, 1.0]])


def fk_oracle(arm, q):
    """Tip pose from a product of homogeneous link transforms."""
    T = np.eye(3)
    for theta, length in zip(q, arm.links):
        T = T @ homogeneous(theta, length)
    return np.array([T[0, 2], T[1, 2], np.arctan2(T[1, 0], T[0, 0])])


configs = st.tuples(*[st.floats(lo, hi) for lo, hi in zip(ARM.lower, ARM.upper)])


@settings(max_examples=300, deadline=None)
@given(configs)
def test_fk_matches_matrix_product(q):
    got = forward_kinematics(ARM, q)
    want = fk_oracle(ARM, q)
    assert np.allclose(got[:2], want[:2], atol=1e-12)
    assert abs(wrap_angle(got[2] - want[2])) < 1e-9


@settings(max_examples=300, deadline=None)
@given(configs)
def test_ik_round_trip(q):
    pose = forward_kinematics(ARM, q)
    sols = inverse_kinematics(ARM, pose)
    assert sols, "a reachable pose must have at least one solution"
    for s in sols:
        assert ARM.within_limits(s)[0]
        back = forward_kinematics(ARM, s)
        assert np.hypot(*(back[:2] - pose[:2])) < 1e-6
        assert abs(wrap_angle(back[2] - pose[2])) < 1e-6
    qb, ok = ik_branches(ARM, pose[None])
    assert ok[0].any()
    for k in np.flatnonzero(ok[0]):
        assert any(np.allclose(qb[0, k], s, atol=1e-9) for s in sols)


def test_joint_points_lengths():
    q = np.random.default_rng(0).uniform(ARM.lo, ARM.hi, size=(50, 3))
    pts = joint_points(ARM, q)
    seg = np.linalg.norm(np.diff(pts, axis=1), axis=2)
    assert np.allclose(seg, ARM.links)
    assert np.allclose(pts[:, 0], 0.0)


def test_unreachable_and_limits():
    assert inverse_kinematics(ARM, (2.0, 0.0, 0.0)) == []
    with pytest.raises(JointLimit):
        forward_kinematics(ARM, (0.0, 3.0, 0.0))


def test_cartesian_line_keeps_heading_and_straightness():
    q0 = np.array([0.3, 1.2, -1.0])
    start = ee_poses(ARM, q0)[0]
    target = start[:2] + np.array([0.08, -0.05])
    path = cartesian_line(ARM, q0, target)
    assert path is not None
    poses = ee_poses(ARM, path)
    assert np.allclose(poses[-1, :2], target, atol=1e-6)
    assert np.all(np.abs(wrap_angle(poses[:, 2] - start[2])) < 1e-6)
    d = target - start[:2]
    rel = poses[:, :2] - start[:2]
    off = np.abs(d[0] * rel[:, 1] - d[1] * rel[:, 0]) / np.linalg.norm(d)
    assert off.max() < 1e-6
    assert np.max(np.abs(np.diff(path, axis=0))) <= 0.15


def test_cartesian_line_out_of_reach():
    q0 = np.array([0.0, 0.3, 0.0])
    assert cartesian_line(ARM, q0, (3.0, 0.0)) is None
