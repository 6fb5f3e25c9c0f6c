import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tamper2d.geometry import ConvexSet, rect_corners
from tamper2d.kinematics import ArmSpec
from tamper2d.motion import (
    CollisionModel,
    GoalSetEmpty,
    InvalidStart,
    MotionFailure,
    MotionQuery,
    Trajectory,
    dense_valid,
    densify,
    solve,
)

ARM = ArmSpec()
HOME = np.array(ARM.home)


def clutter(seed, n=4):
    rng = np.random.default_rng(seed)
    polys = []
    while len(polys) < n:
        c = rng.uniform([-0.8, 0.1], [0.8, 0.9])
        if np.linalg.norm(c) < 0.3:
            continue
        polys.append(rect_corners(*c, rng.uniform(0, np.pi), 0.06, 0.04))
    return CollisionModel(ARM, ConvexSet(polys))


def sample_valid(model, rng):
    while True:
        q = rng.uniform(ARM.lo, ARM.hi)
        if model.valid(q)[0]:
            return q


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_solutions_are_densely_valid(seed):
    model = clutter(seed)
    rng = np.random.default_rng(seed)
    if not model.valid(HOME)[0]:
        return
    goal = sample_valid(model, rng)
    try:
        traj = solve(MotionQuery(HOME, [goal], model, 2.0, seed))
    except MotionFailure:
        return
    assert np.allclose(traj.start, HOME)
    assert np.allclose(traj.end, goal)
    assert dense_valid(traj, model)
    # independent check at a resolution finer than the planner's own
    assert model.valid(densify(traj.waypoints, 2.5e-4)).all()


def test_deterministic_under_seed():
    model = clutter(4, 6)
    goal = sample_valid(model, np.random.default_rng(1))
    a = solve(MotionQuery(HOME, [goal], model, 2.0, (12, 3)))
    b = solve(MotionQuery(HOME, [goal], model, 2.0, (12, 3)))
    assert np.array_equal(a.waypoints, b.waypoints)


def test_errors():
    model = CollisionModel(ARM, ConvexSet([rect_corners(0.0, 0.0, 0.0, 0.05, 0.05)]))
    with pytest.raises(InvalidStart):
        solve(MotionQuery(HOME, [HOME], model))
    free = CollisionModel(ARM, ConvexSet([]))
    with pytest.raises(GoalSetEmpty):
        solve(MotionQuery(HOME, [], free))
    with pytest.raises(GoalSetEmpty):
        solve(MotionQuery(HOME, [np.array([0.0, 3.0, 0.0])], free))
    with pytest.raises(ValueError):
        MotionQuery(HOME, [HOME], free, budget_s=0.0)


def test_separated_goal_exhausts_budget():
    # link 1 must sweep through heading 0 to get from -pi/2 to pi/2, and a
    # post next to the base blocks that heading
    model = CollisionModel(ARM, ConvexSet([rect_corners(0.15, 0.0, 0.0, 0.02, 0.02)]))
    goal = np.array([np.pi / 2, 0.5, 0.5])
    assert model.valid(HOME)[0] and model.valid(goal)[0]
    with pytest.raises(MotionFailure):
        solve(MotionQuery(HOME, [goal], model, 0.5, 0))


def test_trajectory_chain_and_sampling():
    a = Trajectory(np.array([[0.0, 0.0, 0.0], [0.2, 0.0, 0.0]]))
    b = Trajectory(np.array([[0.2, 0.0, 0.0], [0.2, 0.4, 0.0]]))
    c = a.then(b)
    assert c.length == pytest.approx(0.6)
    assert c.duration == pytest.approx(0.6 / 0.5)
    assert np.allclose(c(0.0), [0, 0, 0]) and np.allclose(c(1.0), [0.2, 0.4, 0])
    assert np.allclose(c(0.5), [0.2, 0.1, 0.0])
    with pytest.raises(ValueError):
        b.then(a)
    assert densify(c.waypoints, 0.01).shape[0] == 61
