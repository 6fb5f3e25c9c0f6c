"""Closed-loop behaviors bound to action schemas.

Each behavior senses, plans online against the freshly fused belief and
executes step by step; the first failing step stops it. Behaviors never
read ground truth: they see the simulator only through ``sense`` and the
primitives it exposes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .belief import BeliefState, Observation, fuse
from .grounding import (
    GroundingResult,
    Primitive,
    ProjectedWorld,
    Segment,
    approach_distance,
    ground_open_drawer,
    ground_pick,
    push_candidates,
    realize,
    resolve,
)
from .motion import MotionError
from .task.domain import Action
from .world import PushBlocked, Simulator

BEHAVIOR_BUDGET_S = 10.0


class GraspMissed(Exception):
    pass


@dataclass
class BehaviorReport:
    outcome: str  # Success | Failure
    step: int | None = None
    reason: str = ""
    observations: list[Observation] = field(default_factory=list)
    actions_executed: list[Primitive] = field(default_factory=list)
    grasp_count: int = 0
    belief: BeliefState | None = None

    @property
    def success(self) -> bool:
        return self.outcome == "Success"

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "step": self.step,
            "reason": self.reason,
            "grasp_count": self.grasp_count,
            "primitives": [p.to_dict() for p in self.actions_executed],
        }


def execute_primitive(sim: Simulator, p: Primitive) -> None:
    """Run one primitive; ``GraspMissed`` when the gripper closes on nothing."""
    if p.kind == "move":
        sim.execute_trajectory(p.traj)
    elif p.kind == "grasp":
        if not sim.grasp(p.obj):
            raise GraspMissed(p.obj)
    elif p.kind == "release":
        sim.release()
    elif p.kind == "pull":
        sim.set_drawer(p.fraction)
    elif p.kind == "push":
        sim.apply_push(p.obj, p.axis)
    else:
        raise ValueError(f"unknown primitive {p.kind}")


class _Run:
    """Book-keeping shared by the behavior implementations."""

    def __init__(self, sim: Simulator, belief: BeliefState, seed, budget_s: float):
        self.sim = sim
        self.belief = belief
        self.seed = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
        self.budget_s = budget_s
        self.report = BehaviorReport("Success")
        self.grasp_config = None
        self._n = 0

    def sense(self) -> Observation:
        obs = self.sim.sense()
        self.report.observations.append(obs)
        self.belief = fuse(self.belief, obs, self.sim.held_object)
        return obs

    def world(self) -> ProjectedWorld:
        held = None
        if self.sim.held_object is not None:
            held = (self.sim.held_object, self.sim.held_geometry)
        return ProjectedWorld(self.belief, self.sim.robot_config, held)

    def run(self, result: GroundingResult) -> None:
        self._n += 1
        prims, _ = realize(self.world(), result, self.budget_s, self.seed + [self._n])
        for p in prims:
            if p.kind == "grasp":
                self.report.grasp_count += 1
                self.grasp_config = self.sim.robot_config
            execute_primitive(self.sim, p)
            self.report.actions_executed.append(p)

    def fail(self, step: int, reason: str) -> BehaviorReport:
        self.report.outcome = "Failure"
        self.report.step = step
        self.report.reason = reason
        return self.done()

    def done(self) -> BehaviorReport:
        self.report.belief = self.belief
        return self.report


class Behavior:
    """A closed-loop routine for one action schema."""

    action_name = ""

    def __init__(self, budget_s: float = BEHAVIOR_BUDGET_S):
        self.budget_s = budget_s

    def __call__(self, action: Action, sim: Simulator, belief: BeliefState, seed=0) -> BehaviorReport:
        return self.execute(action, _Run(sim, belief, seed, self.budget_s))

    def execute(self, action: Action, r: _Run) -> BehaviorReport:
        raise NotImplementedError


class PickBehavior(Behavior):
    action_name = "Pick"

    def execute(self, action, r):
        obs = r.sense()
        oid = resolve(r.belief, action.params[0])
        if oid is None or oid not in obs.detected:
            return r.fail(1, "NotDetected")
        res = ground_pick(r.world(), oid)
        if not res.ok:
            return r.fail(2, res.reason)
        try:
            r.run(res)
        except MotionError:
            return r.fail(3, "MotionFail")
        except GraspMissed:
            return r.fail(3, "GraspMissed")
        r.sense()
        return r.done()


class PushPickBehavior(Behavior):
    """Push the object a fixed distance along one of its axes, look again, grasp.

    The push direction is the feasible axis whose nominal end pose keeps the
    largest clearance from statics, other objects and occlusion regions.
    """

    action_name = "PushPick"

    def execute(self, action, r):
        obs = r.sense()
        oid = resolve(r.belief, action.params[0])
        if oid is None or oid not in obs.detected:
            return r.fail(1, "NotDetected")
        cands = push_candidates(r.world(), oid, r.belief.workspace.push_distance)
        if not cands:
            return r.fail(1, "PushBlocked")
        _, _, u, contact, _ = cands[0]
        approach = GroundingResult("Query", (Segment("move", tuple(contact), approach=r.belief.workspace.pick_corridor),))
        try:
            r.run(approach)
            r.sim.apply_push(oid, (float(u[0]), float(u[1])))
        except MotionError:
            return r.fail(1, "MotionFail")
        except PushBlocked:
            return r.fail(1, "PushBlocked")
        r.report.actions_executed.append(Primitive("push", obj=oid, axis=(float(u[0]), float(u[1]))))
        obs = r.sense()
        if oid not in obs.detected:
            return r.fail(2, "NotDetectedAfterPush")
        res = ground_pick(r.world(), oid)
        if not res.ok:
            return r.fail(3, res.reason)
        try:
            r.run(res)
        except MotionError:
            return r.fail(4, "MotionFail")
        except GraspMissed:
            return r.fail(4, "GraspMissed")
        r.sense()
        return r.done()


class OpenDrawerBehavior(Behavior):
    action_name = "Open"

    def execute(self, action, r):
        r.sense()
        res = ground_open_drawer(r.world())
        if not res.ok:
            return r.fail(1, res.reason)
        try:
            r.run(res)
        except MotionError:
            return r.fail(2, "MotionFail")
        r.sense()
        if not r.belief.workspace.drawer_open(r.belief.drawer_fraction):
            return r.fail(3, "NotOpen")
        return r.done()


class PickIdentityBehavior(Behavior):
    """Try look-alike candidates until one reveals the wanted identity.

    Each candidate is grasped, carried to the scan configuration and
    queried; a mismatch is put back exactly where it was picked.
    """

    action_name = "PickId"

    def execute(self, action, r):
        label = action.params[0]
        r.sense()
        ws = r.belief.workspace
        want = ws.shapes.get(label)
        ids = r.belief.identities
        match = [o for o in sorted(r.belief.known) if ids.get(o) == label]
        if match:
            # identity already revealed: a plain grasp will do
            res = ground_pick(r.world(), match[0])
            if not res.ok:
                return r.fail(1, res.reason)
            try:
                r.run(res)
            except MotionError:
                return r.fail(2, "MotionFail")
            except GraspMissed:
                return r.fail(2, "GraspMissed")
            r.sense()
            return r.done()
        cands = [
            o for o in sorted(r.belief.known)
            if o not in ids and (want is None or tuple(ws.shapes.get(o, ())) == tuple(want))
        ]
        if not cands:
            return r.fail(1, "NoCandidates")
        if ws.scan_config is None:
            return r.fail(1, "NoScanConfig")
        scan = np.asarray(ws.scan_config, dtype=float)
        for oid in cands:
            back = approach_distance(ws, r.belief.known[oid], r.belief.drawer_fraction)
            res = ground_pick(r.world(), oid)
            if not res.ok:
                continue
            try:
                r.run(res)
            except MotionError:
                continue
            except GraspMissed:
                continue
            grasp_q = r.grasp_config
            try:
                r.run(GroundingResult("Query", (Segment("move", (scan,)),)))
            except MotionError:
                return r.fail(3, "MotionFail")
            seen = r.sim.query_identity()
            if seen is not None:
                ids = dict(r.belief.identities)
                ids[oid] = seen
                r.belief = replace(r.belief, identities=ids)
            if seen == label:
                r.sense()
                return r.done()
            try:
                r.run(GroundingResult("Query", (Segment("move", (grasp_q,), approach=back), Segment("release", obj=oid),
                                                Segment("retreat", approach=back))))
            except MotionError:
                return r.fail(4, "MotionFail")
            r.sense()
        return r.fail(5, "AllCandidatesExhausted")


def default_registry() -> dict[str, Behavior]:
    return {b.action_name: b for b in (PickBehavior(), PushPickBehavior(), OpenDrawerBehavior(), PickIdentityBehavior())}
