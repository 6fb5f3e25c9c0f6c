import numpy as np
import pytest

from tamper2d.geometry import ConvexSet, grasp_poses, points_in_polygon, rect_corners
from tamper2d.kinematics import ArmSpec, ee_poses, inverse_kinematics
from tamper2d.motion import CollisionModel, MotionQuery, Trajectory, densify, solve
from tamper2d.world import (
    GRASP_POS_TOL,
    CollisionFault,
    GripperError,
    ObjectSpec,
    PushBlocked,
    PushOutcomeModel,
    Simulator,
    StartMismatch,
    WorldSpec,
)
from tamper2d.workspace import CameraSpec, Workspace

WS = Workspace(ArmSpec(), CameraSpec((0.0, -0.35)), (-1.0, -0.3, 1.0, 0.8))


def make(objects, push=PushOutcomeModel(), seed=0):
    ws = Workspace(WS.arm, WS.camera, WS.bounds, shapes={o.id: o.half for o in objects})
    return Simulator(WorldSpec(ws, tuple(objects), push=push), seed)


def move_to(sim, q):
    obs = sim.sense()
    polys = [rect_corners(*p, *sim.workspace.shapes[o]) for o, p in obs.detected.items() if o != sim.held_object]
    model = CollisionModel(sim.workspace.arm, ConvexSet(polys), sim.held_geometry)
    traj = solve(MotionQuery(sim.robot_config, [q], model, 4.0, 0))
    sim.execute_trajectory(traj)


def grasp_config(sim, oid, face=0, offset=(0.0, 0.0)):
    obs = sim.sense()
    _, tip, _ = grasp_poses(obs.detected[oid], sim.workspace.shapes[oid], sim.workspace.arm.standoff)[face]
    tip = tip + np.array([offset[0], offset[1], 0.0])
    return inverse_kinematics(sim.workspace.arm, tip)[0]


BOX = ObjectSpec("A", "A", (0.03, 0.03), (0.6, 0.3, 0.0))


def test_grasp_at_pose_and_carry():
    sim = make([BOX])
    move_to(sim, grasp_config(sim, "A"))
    assert sim.grasp("A")
    assert sim.held_object == "A" and sim.grasp_attempts == 1
    with pytest.raises(GripperError):
        sim.grasp("A")
    move_to(sim, np.array(sim.workspace.arm.home))
    assert sim.release() == "A"
    pose = np.array(sim.snapshot()["objects"]["A"])
    tip = ee_poses(sim.workspace.arm, sim.robot_config)[0]
    assert np.hypot(*(pose[:2] - tip[:2])) == pytest.approx(0.03 + sim.workspace.arm.standoff, abs=1e-9)


def test_grasp_misses_outside_tolerance():
    sim = make([BOX])
    move_to(sim, grasp_config(sim, "A", offset=(0.0, 2 * GRASP_POS_TOL)))
    assert not sim.grasp("A")
    assert sim.held_object is None and sim.grasp_attempts == 1


def test_collision_stops_before_contact():
    sim = make([ObjectSpec("W", "W", (0.3, 0.02), (0.0, 0.55, 0.0))])
    home = np.array(sim.workspace.arm.home)
    goal = np.array([np.pi / 2, 0.0, 0.0])
    with pytest.raises(CollisionFault) as ei:
        sim.execute_trajectory(Trajectory(densify(np.array([home, goal]))))
    assert "W" in ei.value.contacts
    wall = CollisionModel(sim.workspace.arm, ConvexSet([rect_corners(0.0, 0.55, 0.0, 0.3, 0.02)]))
    assert wall.valid(sim.robot_config)[0]
    assert sim.exec_time > 0


def test_start_mismatch():
    sim = make([BOX])
    with pytest.raises(StartMismatch):
        sim.execute_trajectory(Trajectory(np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0]])))


def push_once(push, seed):
    sim = make([BOX], push, seed)
    move_to(sim, grasp_config(sim, "A", face=0))
    return sim.apply_push("A", (1.0, 0.0))


def test_push_noise_free_and_bounded():
    exact = push_once(PushOutcomeModel(0.1), 0)
    assert np.allclose(exact, [0.7, 0.3, 0.0], atol=1e-9)
    model = PushOutcomeModel(0.1, 0.03, 0.2)
    for seed in range(5):
        p = push_once(model, seed)
        d = np.hypot(p[0] - 0.6, p[1] - 0.3)
        assert 0.07 - 1e-9 <= d <= 0.13 + 1e-9
        assert abs(np.arctan2(p[1] - 0.3, p[0] - 0.6)) <= 0.2 + 1e-9
        assert abs(p[2]) <= 0.2 + 1e-9
    assert np.array_equal(push_once(model, 3), push_once(model, 3))


def test_push_requires_contact():
    sim = make([BOX])
    with pytest.raises(PushBlocked):
        sim.apply_push("A", (1.0, 0.0))


def test_occluded_object_is_not_detected():
    front = ObjectSpec("F", "F", (0.08, 0.04), (0.0, 0.2, 0.0))
    back = ObjectSpec("B", "B", (0.02, 0.02), (0.0, 0.45, 0.0))
    obs = make([front, back]).sense()
    assert set(obs.detected) == {"F"}
    shadow = dict(obs.shadows)["F"]
    assert points_in_polygon(np.array([[0.0, 0.45]]), np.array(shadow))[0]


def test_drawer_hides_contents(kitchen):
    sim = Simulator(kitchen.world(0), 0)
    obs = sim.sense()
    hidden = set(kitchen.world(0).drawer_contents)
    assert hidden and not hidden & set(obs.detected)
    assert obs.drawer_fraction == 0.0
