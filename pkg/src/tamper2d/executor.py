"""Planning and execution loops.

``run_tamp`` plans every action down to a trajectory, learning constraints
from grounding and motion failures, then executes open loop. ``run_tamper``
lets ungroundable actions become gaps filled at execution time by behaviors,
repairs the plan after each behavior and turns execution failures into
constraints. ``run_baseline`` repeatedly plans for the part of the goal that
involves objects seen so far and executes each sub-plan open loop.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .behaviors import Behavior, GraspMissed, execute_primitive
from .belief import BeliefState, fuse
from .geometry import polygons_overlap
from .grounding import (
    Primitive,
    ProjectedWorld,
    can_ground,
    ground_action,
    optimistic_restart_state,
    realize,
    resolve,
)
from .motion import DEFAULT_BUDGET_S, MotionError, MotionQuery, dense_valid, solve
from .task.domain import Action, Constraint, Domain, GroundingConfidence, SymbolicState, apply, literals, satisfies
from .task.encoding import DRAWER_OPEN, HANDEMPTY, TaskSpec, at, held, location_literals
from .task.planner import DEFAULT_HORIZON, ConstraintStack, NoPlanExists, PlanQuery, plan
from .trace import Trace
from .workspace import Workspace
from .world import CollisionFault, HandleUnreached, PushBlocked, Simulator, StartMismatch

STREAM_GROUND = 11
STREAM_MOTION = 12
STREAM_BEHAVIOR = 13
STREAM_REPAIR = 14

SUCCESS = "Success"
NO_SOLUTION = "NoSolution"
ABORTED = "Aborted"
FAILURE = "Failure"


@dataclass(frozen=True)
class ExecConfig:
    budget_s: float = DEFAULT_BUDGET_S
    horizon: int = DEFAULT_HORIZON
    step_cap: int = 200
    iteration_cap: int = 100
    max_clears: int = 4


@dataclass
class PlanStep:
    action: Action
    prims: list[Primitive] | None = None
    behavior: str | None = None

    @property
    def is_gap(self) -> bool:
        return self.prims is None

    def to_dict(self) -> dict:
        d = {"action": self.action.ident, "gap": self.is_gap}
        if self.is_gap:
            d["behavior"] = self.behavior
        else:
            d["primitives"] = [p.to_dict() for p in self.prims]
        return d


@dataclass
class PartialPlan:
    steps: list[PlanStep]
    states: tuple[SymbolicState, ...]

    def covered(self, registry) -> bool:
        """Every gap has a behavior to run."""
        return all(not s.is_gap or s.behavior in registry for s in self.steps)

    def chained(self, tol: float = 1e-6) -> bool:
        """Trajectories join end to start, except across gaps."""
        prev = None
        for s in self.steps:
            if s.is_gap:
                prev = None
                continue
            for p in s.prims:
                if p.traj is None:
                    continue
                if prev is not None and np.max(np.abs(prev - p.traj.start)) > tol:
                    return False
                prev = p.traj.end
        return True

    def to_dict(self) -> dict:
        return {
            "actions": [s.action.ident for s in self.steps],
            "states": [st.true_vars() for st in self.states],
            "steps": [s.to_dict() for s in self.steps],
        }


@dataclass
class EpisodeMetrics:
    actions: int = 0
    behaviors: int = 0
    grasps: int = 0
    exec_s: float = 0.0
    plan_be_s: float = 0.0
    plan_ae_s: float = 0.0
    sense_ae_s: float = 0.0

    def counts(self) -> dict:
        return {"actions": self.actions, "behaviors": self.behaviors, "grasps": self.grasps,
                "exec_s": round(self.exec_s, 9)}


@dataclass
class ExecutionOutcome:
    status: str
    trace: Trace
    metrics: EpisodeMetrics
    final_state: SymbolicState
    plans: list[dict] = field(default_factory=list)
    world: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.status == SUCCESS


class _Done(Exception):
    def __init__(self, status: str, reason: str = ""):
        super().__init__(status)
        self.status = status
        self.reason = reason


class _Episode:
    def __init__(self, method, task: TaskSpec, domain: Domain, sim: Simulator, objects, seed: int,
                 registry, cfg: ExecConfig, epsilon: float, meta: dict):
        self.method = method
        self.task = task
        self.domain = domain
        self.sim = sim
        self.ws: Workspace = sim.workspace
        self.seed = int(seed)
        self.registry = registry or {}
        self.cfg = cfg
        self.stack = ConstraintStack()
        self.metrics = EpisodeMetrics()
        self.trace = Trace.new(method=method, seed=self.seed, epsilon=epsilon, **meta)
        if isinstance(objects, BeliefState):
            self.belief = replace(objects, epsilon=float(epsilon))
        else:
            self.belief = BeliefState.empty(self.ws, objects, epsilon)
        self.round = 0
        self.n_behavior = 0
        self.n_repair = 0
        self.executed = 0
        self.iterations = 0
        self.started = False
        self.plans: list[dict] = []

    # timing and bookkeeping
    def _bucket(self, kind: str, dt: float):
        m = self.metrics
        if kind == "plan":
            if self.started:
                m.plan_ae_s += dt
            else:
                m.plan_be_s += dt
        elif kind == "sense" and self.started:
            m.sense_ae_s += dt

    def sense(self, note: str = ""):
        t0 = time.perf_counter()
        obs = self.sim.sense()
        self.belief = fuse(self.belief, obs, self.sim.held_object)
        self._bucket("sense", time.perf_counter() - t0)
        self.trace.emit("sense", note=note, detected=sorted(obs.detected), belief=self.belief.to_dict(),
                        world=self.sim.snapshot())

    def symbol_of(self, oid: str | None) -> str | None:
        if oid is None:
            return None
        lab = self.belief.identities.get(oid)
        if lab in self.task.objects:
            return lab
        return oid if oid in self.task.objects else None

    def derive(self, prev: SymbolicState) -> SymbolicState:
        """Symbolic state from the belief; objects never located keep their literals."""
        b, ws = self.belief, self.ws
        vals = {}
        held_sym = self.symbol_of(self.sim.held_object)
        for o in self.task.objects:
            oid = resolve(b, o)
            if o == held_sym:
                vals.update({at(o, r): False for r in self.task.regions})
                vals[held(o)] = True
            elif oid is not None and oid in b.known:
                r0 = ws.region_of(b.known[oid][:2], b.drawer_fraction)
                vals.update({at(o, r): r == r0 for r in self.task.regions})
                vals[held(o)] = False
            else:
                vals[held(o)] = False
        vals[HANDEMPTY] = self.sim.held_object is None
        if DRAWER_OPEN in self.domain.index:
            vals[DRAWER_OPEN] = ws.drawer_open(b.drawer_fraction)
        return prev.with_values(vals)

    def constrain(self, s: SymbolicState, a: Action, source: str, reason: str, blockers=(), belief=None):
        """Forbid ``a`` under the blocking condition, else under the full location state."""
        pred = None
        if blockers and belief is not None:
            vals = {}
            for oid in blockers:
                sym = self.symbol_of(oid) or oid
                r = self.ws.region_of(belief.known[oid][:2], belief.drawer_fraction) \
                    if oid in belief.known else None
                if sym not in self.task.objects or r is None:
                    vals = None
                    break
                vals[at(sym, r)] = True
            if vals:
                pred = literals(vals)
                if not satisfies(s, pred):
                    pred = None
        if pred is None:
            pred = location_literals(s.true_vars(), s[HANDEMPTY])
        c = Constraint(pred, a.ident)
        new = c not in self.stack
        self.stack.assert_constraint(c)
        self.trace.emit("constraint", epoch=self.stack.epoch, source=source, reason=reason, new=new, **c.to_dict())

    def budget(self) -> float:
        return self.cfg.budget_s * self.stack.budget_multiplier

    def held_pair(self):
        oid = self.sim.held_object
        return None if oid is None else (oid, self.sim.held_geometry)

    def tick(self):
        self.iterations += 1
        if self.iterations > self.cfg.iteration_cap:
            raise _Done(ABORTED, "iteration cap")

    # planning
    def task_plan(self, s: SymbolicState, goal) -> object | None:
        """TP call; ``None`` after a clear, raises ``_Done`` when out of options."""
        self.round += 1
        t0 = time.perf_counter()
        try:
            return plan(PlanQuery(s, goal, self.cfg.horizon, self.stack), self.domain)
        except NoPlanExists as e:
            if self.stack.is_empty() or self.stack.clears >= self.cfg.max_clears:
                self.trace.emit("no_plan", epoch=self.stack.epoch, reason=str(e))
                raise _Done(NO_SOLUTION, str(e)) from None
            self.stack.clear()
            self.trace.emit("clear", epoch=self.stack.epoch, budget_multiplier=self.stack.budget_multiplier)
            return None
        finally:
            self._bucket("plan", time.perf_counter() - t0)

    def build(self, tp, mode: str) -> PartialPlan | None:
        """Ground each step in order against the projected world."""
        t0 = time.perf_counter()
        try:
            return self._build(tp, mode)
        finally:
            self._bucket("plan", time.perf_counter() - t0)

    def _build(self, tp, mode: str) -> PartialPlan | None:
        world = ProjectedWorld(self.belief, self.sim.robot_config, self.held_pair())
        steps: list[PlanStep] = []
        for i, a in enumerate(tp.steps):
            si = tp.states[i]
            groundable = can_ground(a, world.belief)
            if mode == "baseline" and a.confidence == GroundingConfidence.GAP_DYNAMICS:
                oid = resolve(world.belief, a.params[0])
                groundable = oid is not None and oid in world.belief.known
            if groundable:
                rng = np.random.default_rng([self.seed, STREAM_GROUND, self.round, i])
                res = ground_action(world, a, rng)
                if not res.ok:
                    self.constrain(si, a, "grounding", res.reason, res.blockers, world.belief)
                    return None
                try:
                    prims, world = realize(world, res, self.budget(), [self.seed, STREAM_MOTION, self.round, i])
                except MotionError as e:
                    self.constrain(si, a, "motion", type(e).__name__ + ":" + str(e))
                    return None
                steps.append(PlanStep(a, prims))
            elif mode == "tamper" and a.name in self.registry:
                steps.append(PlanStep(a, None, a.name))
                world = optimistic_restart_state(world, a)
            else:
                self.constrain(si, a, "grounding", "CannotGround")
                return None
        pp = PartialPlan(steps, tp.states)
        if mode == "tamper" and not pp.covered(self.registry):
            raise AssertionError("partial plan has a gap without a behavior")
        return pp

    def emit_plan(self, pp: PartialPlan):
        d = pp.to_dict()
        self.plans.append(d)
        self.trace.emit("plan", epoch=self.stack.epoch, round=self.round, **d)

    # execution
    def run_prims(self, a: Action, prims: list[Primitive]):
        self.started = True
        pushed = False
        try:
            for p in prims:
                execute_primitive(self.sim, p)
                pushed = pushed or p.kind == "push"
        except CollisionFault as e:
            self.trace.emit("fault", kind="CollisionFault", action=a.ident, contacts=list(e.contacts),
                            config=e.config, post_push=pushed, world=self.sim.snapshot())
            raise _Done(FAILURE, "CollisionFault") from None
        except GraspMissed:
            return "GraspMissed", pushed
        except (HandleUnreached, PushBlocked, StartMismatch) as e:
            return type(e).__name__, pushed
        return None, pushed

    def repair(self, step: PlanStep) -> list[Primitive] | None:
        """Rejoin the next precomputed step after a behavior.

        First try a bridge to the start of its first motion, kept only if the
        bridge and that motion are valid together under the current belief;
        otherwise bridge straight to the end of that motion.
        """
        prims = step.prims
        first = prims[0]
        q = self.sim.robot_config
        if first.traj is None or first.kind != "move":
            self.trace.emit("repair", action=step.action.ident, mode="unchanged")
            return prims
        if np.max(np.abs(q - first.traj.start)) <= 1e-6:
            self.trace.emit("repair", action=step.action.ident, mode="unchanged")
            return prims
        self.n_repair += 1
        t0 = time.perf_counter()
        try:
            world = ProjectedWorld(self.belief, q, self.held_pair())
            model = world.model()
            seed = [self.seed, STREAM_REPAIR, self.n_repair]
            try:
                bridge = solve(MotionQuery(q, [first.traj.start], model, self.budget(), seed + [0]))
                chained = bridge.then(first.traj)
                if dense_valid(chained, model):
                    self.trace.emit("repair", action=step.action.ident, mode="start")
                    return [Primitive("move", chained)] + prims[1:]
            except MotionError:
                pass
            try:
                bridge = solve(MotionQuery(q, [first.traj.end], model, self.budget(), seed + [1]))
                self.trace.emit("repair", action=step.action.ident, mode="end")
                return [Primitive("move", bridge)] + prims[1:]
            except MotionError:
                pass
            self.trace.emit("repair", action=step.action.ident, mode="failed")
            return None
        finally:
            self._bucket("plan", time.perf_counter() - t0)

    def count_step(self):
        self.executed += 1
        if self.executed > self.cfg.step_cap:
            raise _Done(ABORTED, "step cap")

    def finish(self, status: str, s: SymbolicState, reason: str = "") -> ExecutionOutcome:
        self.metrics.grasps = self.sim.grasp_attempts
        self.metrics.exec_s = self.sim.exec_time
        self.trace.emit("result", status=status, reason=reason, state=s.true_vars(),
                        constraints_epoch=self.stack.epoch, **self.metrics.counts())
        return ExecutionOutcome(status, self.trace, self.metrics, s, self.plans, self.sim.snapshot())


def occluders(b: BeliefState, sym: str, s: SymbolicState) -> tuple[str, ...]:
    """Known objects whose occlusion region meets the region ``sym`` is believed in."""
    ws = b.workspace
    where = [v for v in s.true_vars() if v.startswith(f"at({sym},")]
    if not where:
        return ()
    poly = ws.region(where[0][len(sym) + 4:-1]).polygon(ws.drawer, b.drawer_fraction)
    return tuple(sorted({o for o, p in b.shadows if o in b.known and polygons_overlap(p, poly)}))


def _init_state(domain: Domain, task: TaskSpec) -> SymbolicState:
    return domain.state(task.init_vars())


def run_tamp(domain: Domain, sim: Simulator, task: TaskSpec, objects, seed: int = 0,
             cfg: ExecConfig = ExecConfig(), epsilon: float = 0.6, meta: dict | None = None) -> ExecutionOutcome:
    """Plan everything, then execute open loop without sensing."""
    ep = _Episode("tamp", task, domain, sim, objects, seed, {}, cfg, epsilon, meta or {})
    goal = task.goal_literals()
    ep.sense("initial")
    s = ep.derive(_init_state(domain, task))
    try:
        pp = None
        while pp is None:
            ep.tick()
            tp = ep.task_plan(s, goal)
            if tp is None:
                continue
            pp = ep.build(tp, "tamp")
        ep.emit_plan(pp)
        for st in pp.steps:
            ep.count_step()
            err, _ = ep.run_prims(st.action, st.prims)
            ep.trace.emit("execute", action=st.action.ident, ok=err is None, error=err, world=sim.snapshot())
            if err is not None:
                ep.trace.emit("fault", kind=err, action=st.action.ident, post_push=False, world=sim.snapshot())
                raise _Done(FAILURE, err)
            ep.metrics.actions += 1
            s = apply(s, st.action)
        ep.sense("final")
        s = ep.derive(s)
        status = SUCCESS if satisfies(s, goal) else FAILURE
        return ep.finish(status, s)
    except _Done as d:
        return ep.finish(d.status, s, d.reason)


def run_tamper(domain: Domain, sim: Simulator, task: TaskSpec, objects, behaviors: dict[str, Behavior],
               seed: int = 0, cfg: ExecConfig = ExecConfig(), epsilon: float = 0.6,
               meta: dict | None = None) -> ExecutionOutcome:
    """Partially grounded planning with behaviors, repair and failure feedback."""
    ep = _Episode("tamper", task, domain, sim, objects, seed, behaviors, cfg, epsilon, meta or {})
    goal = task.goal_literals()
    ep.sense("initial")
    s = ep.derive(_init_state(domain, task))
    try:
        while not satisfies(s, goal):
            ep.tick()
            tp = ep.task_plan(s, goal)
            if tp is None:
                continue
            pp = ep.build(tp, "tamper")
            if pp is None:
                continue
            ep.emit_plan(pp)
            s = _execute_partial(ep, pp, s)
        return ep.finish(SUCCESS, s)
    except _Done as d:
        return ep.finish(d.status, s, d.reason)


def _execute_partial(ep: _Episode, pp: PartialPlan, s: SymbolicState) -> SymbolicState:
    steps = pp.steps
    for i, st in enumerate(steps):
        ep.count_step()
        a = st.action
        if st.is_gap:
            ep.started = True
            ep.n_behavior += 1
            t0 = time.perf_counter()
            rep = _run_behavior(ep, a)
            ep._bucket("plan", time.perf_counter() - t0)
            ep.belief = rep.belief
            ep.trace.emit("behavior", action=a.ident, world=ep.sim.snapshot(), **rep.to_dict())
            if not rep.success:
                blockers = occluders(ep.belief, a.params[0], s) if rep.reason == "NotDetected" else ()
                ep.constrain(s, a, "behavior", rep.reason, blockers, ep.belief)
                ep.sense("after behavior failure")
                return ep.derive(s)
            ep.metrics.behaviors += 1
            ep.metrics.actions += 1
            s = apply(s, a)
            if i + 1 < len(steps) and not steps[i + 1].is_gap:
                new = ep.repair(steps[i + 1])
                if new is None:
                    ep.constrain(s, steps[i + 1].action, "repair", "RepairFailure")
                    ep.sense("after repair failure")
                    return ep.derive(s)
                steps[i + 1] = PlanStep(steps[i + 1].action, new)
            continue
        err, _ = ep.run_prims(a, st.prims)
        ep.trace.emit("execute", action=a.ident, ok=err is None, error=err, world=ep.sim.snapshot())
        if err is not None:
            ep.constrain(s, a, "execution", err)
            ep.sense("after execution failure")
            return ep.derive(s)
        ep.metrics.actions += 1
        s = apply(s, a)
    ep.sense("plan complete")
    return ep.derive(s)


def _run_behavior(ep: _Episode, a: Action):
    beh = ep.registry[a.name]
    try:
        return beh(a, ep.sim, ep.belief, seed=[ep.seed, STREAM_BEHAVIOR, ep.n_behavior])
    except CollisionFault as e:
        ep.trace.emit("fault", kind="CollisionFault", action=a.ident, contacts=list(e.contacts),
                      config=e.config, post_push=False, world=ep.sim.snapshot())
        raise _Done(FAILURE, "CollisionFault") from None


def run_baseline(domain: Domain, sim: Simulator, task: TaskSpec, objects, seed: int = 0,
                 cfg: ExecConfig = ExecConfig(), epsilon: float = 0.6, meta: dict | None = None) -> ExecutionOutcome:
    """Greedy replanning for the observed objects, executed open loop."""
    ep = _Episode("baseline", task, domain, sim, objects, seed, {}, cfg, epsilon, meta or {})
    goal = task.goal_literals()
    ep.sense("initial")
    s = ep.derive(_init_state(domain, task))
    try:
        while not satisfies(s, goal):
            ep.tick()
            seen = [o for o, r in task.goal.items()
                    if resolve(ep.belief, o) in ep.belief.known or ep.symbol_of(sim.held_object) == o]
            sub = literals({at(o, task.goal[o]): True for o in seen})
            if satisfies(s, sub):
                raise _Done(NO_SOLUTION, "no progress possible on the observed objects")
            ep.stack = ConstraintStack()
            ep.trace.emit("subgoal", objects=seen)
            pp = None
            while pp is None:
                ep.tick()
                tp = ep.task_plan(s, sub)
                if tp is None:
                    continue
                pp = ep.build(tp, "baseline")
            ep.emit_plan(pp)
            for st in pp.steps:
                ep.count_step()
                err, pushed = ep.run_prims(st.action, st.prims)
                ep.trace.emit("execute", action=st.action.ident, ok=err is None, error=err, world=sim.snapshot())
                if err is not None:
                    ep.trace.emit("fault", kind=err, action=st.action.ident, post_push=pushed, world=sim.snapshot())
                    raise _Done(FAILURE, err)
                ep.metrics.actions += 1
                s = apply(s, st.action)
            ep.sense("sub-plan complete")
            s = ep.derive(s)
        return ep.finish(SUCCESS, s)
    except _Done as d:
        return ep.finish(d.status, s, d.reason)
