"""Purpose-built scenes shared by the executor and acceptance tests."""

import numpy as np
import yaml

from tamper2d.behaviors import Behavior
from tamper2d.bench.scenario import parse, shipped_dir
from tamper2d.executor import ExecConfig, PartialPlan, PlanStep, _Episode
from tamper2d.grounding import Primitive, ProjectedWorld
from tamper2d.kinematics import ArmSpec
from tamper2d.motion import Trajectory, densify
from tamper2d.task import TaskSpec, build_domain
from tamper2d.world import ObjectSpec, Simulator, WorldSpec
from tamper2d.workspace import Box, CameraSpec, RegionSpec, Workspace

Q_DISP = np.array([-1.2, 2.0, -0.8])
Q_A = np.array([1.2, 1.0, 0.5])
Q_B = np.array([1.5, 0.8, 0.5])


class Scripted(Behavior):
    """Reports success after optionally moving the arm somewhere else."""

    action_name = "Pick"

    def __init__(self, to=None):
        super().__init__()
        self.to = to

    def execute(self, action, r):
        if self.to is not None:
            q = r.sim.robot_config
            r.sim.execute_trajectory(Trajectory(densify(np.array([q, self.to]))))
        r.sense()
        return r.done()


def scene(post: bool, behavior: Behavior | None = None):
    """Two boxes on the right, and optionally a post beside the base that
    link 1 cannot sweep past."""
    regions = (RegionSpec("r1", Box("r1", (0.55, 0.45, 0.0), (0.25, 0.2))),
               RegionSpec("r2", Box("r2", (-0.55, 0.45, 0.0), (0.25, 0.2))))
    objs = [ObjectSpec("A", "A", (0.03, 0.03), (0.5, 0.6, 0.0)),
            ObjectSpec("B", "B", (0.03, 0.03), (0.75, 0.3, 0.0))]
    if post:
        objs.append(ObjectSpec("P", "P", (0.02, 0.02), (0.15, 0.0, 0.0)))
    ws = Workspace(ArmSpec(), CameraSpec((0.0, -0.35)), (-1, -0.3, 1, 0.8), regions=regions,
                   shapes={o.id: o.half for o in objs})
    sim = Simulator(WorldSpec(ws, tuple(objs)), 0)
    task = TaskSpec(("A", "B"), ("r1", "r2"), {"A": "r1", "B": "r1"}, {"A": "r2"})
    reg = {} if behavior is None else {"Pick": behavior}
    ep = _Episode("tamper", task, build_domain(task), sim, [o.id for o in objs], 0, reg,
                  ExecConfig(budget_s=0.5), 0.6, {})
    ep.sense("initial")
    return ep


def partial(ep):
    """Gap Pick(A,r1), then a grounded Place(A,r2) whose motion starts at Q_A."""
    dom = ep.domain
    pick, place = dom.action("Pick(A,r1)"), dom.action("Place(A,r2)")
    s0 = dom.state(ep.task.init_vars())
    s1 = s0.with_values(dict(pick.eff))
    s2 = s1.with_values(dict(place.eff))
    move = Trajectory(densify(np.array([Q_A, Q_B])))
    return PartialPlan([PlanStep(pick, None, "Pick"), PlanStep(place, [Primitive("move", move)])], (s0, s1, s2)), s0


def observable_scenario():
    d = yaml.safe_load((shipped_dir() / "horizontal" / "horizontal-01.yaml").read_text())
    d["objects"][0]["pose"] = [0.75, 0.62, 0.0]
    sc, diags = parse(d)
    assert not diags
    return sc


def certify_doubly_unreachable(ep) -> bool:
    """Sweep certificate: link 1 must pass heading 0 to get from the arm's
    side (heading < 0) to Q_A and Q_B (heading > 0), since joint 1 cannot
    wrap; every config with heading 0 is invalid under the belief model."""
    model = ProjectedWorld(ep.belief, ep.sim.robot_config).model()
    q = ep.sim.robot_config
    if not (q[0] < 0 < Q_A[0] and Q_B[0] > 0):
        return False
    arm = ep.sim.workspace.arm
    lo, hi = arm.lo, arm.hi
    g2, g3 = np.meshgrid(np.linspace(lo[1], hi[1], 61), np.linspace(lo[2], hi[2], 61))
    grid = np.column_stack([np.zeros(g2.size), g2.ravel(), g3.ravel()])
    return not model.valid(grid).any()
