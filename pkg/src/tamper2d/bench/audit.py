"""Checks over recorded traces: constraint audit, rule audit, failure attribution."""

from __future__ import annotations

from dataclasses import dataclass

from ..task.domain import Constraint, Domain, SymbolicState, apply, violates
from ..trace import Trace

POST_PUSH_FAULTS = ("CollisionFault", "GraspMissed")


@dataclass(frozen=True)
class Violation:
    event: int
    step: int
    action: str
    constraint: dict

    def __str__(self) -> str:
        return f"event {self.event} step {self.step}: {self.action} violates {self.constraint}"


def constraint_audit(trace: Trace, domain: Domain) -> list[Violation]:
    """Plan steps that break a constraint asserted earlier in the same epoch.

    Epochs restart at every clear and, for the greedy baseline, at every new
    sub-goal (it starts each sub-goal with an empty stack). Domain rules
    apply in every epoch.
    """
    active: list[Constraint] = []
    epoch = 0
    out = []
    for e in trace.events:
        ev = e["event"]
        if ev == "subgoal":
            active, epoch = [], 0
        elif ev == "clear":
            active, epoch = [], e["epoch"]
        elif ev == "constraint":
            if e["epoch"] != epoch:
                active, epoch = [], e["epoch"]
            active.append(Constraint.from_dict(e))
        elif ev == "plan":
            if e["epoch"] != epoch:
                active, epoch = [], e["epoch"]
            for k, (a, st) in enumerate(zip(e["actions"], e["states"])):
                s = domain.state(st)
                for c in list(domain.constraints) + active:
                    if violates(s, a, c):
                        out.append(Violation(e["i"], k, a, c.to_dict()))
    return out


def executed_actions(trace: Trace) -> list[str]:
    """Actions that completed in the world, in order."""
    out = []
    for e in trace.events:
        if e["event"] == "execute" and e["ok"]:
            out.append(e["action"])
        elif e["event"] == "behavior" and e["outcome"] == "Success":
            out.append(e["action"])
    return out


def rule_audit(trace: Trace, domain: Domain, init: SymbolicState) -> list[tuple[int, str]]:
    """Executed actions taken while a domain rule forbade them."""
    s, out = init, []
    for k, ident in enumerate(executed_actions(trace)):
        a = domain.action(ident)
        if any(violates(s, a, c) for c in domain.constraints):
            out.append((k, ident))
        s = apply(s, a)
    return out


def failure_cause(trace: Trace) -> str | None:
    """``post-push`` when the run failed through a fault right after a push,
    another fault kind, or None for runs without a fault."""
    faults = trace.of("fault")
    if not faults:
        return None
    f = faults[-1]
    if f.get("post_push") and f["kind"] in POST_PUSH_FAULTS:
        return "post-push"
    return f["kind"]


def behavior_grasps(trace: Trace, action_name: str | None = None) -> list[int]:
    return [e["grasp_count"] for e in trace.of("behavior")
            if action_name is None or e["action"].startswith(action_name + "(")]
