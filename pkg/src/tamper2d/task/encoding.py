"""Pick-and-place encoding: object locations, grasp state and the drawer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .domain import Action, Constraint, Domain, GroundingConfidence, Literals, literals

HANDEMPTY = "handempty"
DRAWER_OPEN = "drawer_open"


def at(obj: str, region: str) -> str:
    return f"at({obj},{region})"


def held(obj: str) -> str:
    return f"held({obj})"


def parse_var(name: str) -> tuple[str, tuple[str, ...]]:
    if "(" not in name:
        return name, ()
    head, rest = name.split("(", 1)
    return head, tuple(rest[:-1].split(","))


@dataclass(frozen=True)
class TaskSpec:
    """Objects, regions and the ground actions available for them.

    ``place_regions`` limits where each object may be placed (all regions
    by default); ``push_pick`` lists (object, region) pairs that get
    a push-then-grasp action; ``identity_objects`` are picked with the
    identity-revealing action instead of a plain pick.
    """

    objects: tuple[str, ...]
    regions: tuple[str, ...]
    init: Mapping[str, str]
    goal: Mapping[str, str]
    drawer_region: str | None = None
    push_pick: tuple[tuple[str, str], ...] = ()
    identity_objects: tuple[str, ...] = ()
    place_regions: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    rules: tuple[Constraint, ...] = ()

    def goal_literals(self) -> Literals:
        return literals({at(o, r): True for o, r in self.goal.items()})

    def init_vars(self) -> list[str]:
        out = [at(o, r) for o, r in self.init.items()]
        return out + [HANDEMPTY]

    def to_dict(self) -> dict:
        return {
            "objects": list(self.objects),
            "regions": list(self.regions),
            "init": dict(self.init),
            "goal": dict(self.goal),
            "drawer_region": self.drawer_region,
            "push_pick": [list(p) for p in self.push_pick],
            "identity_objects": list(self.identity_objects),
            "place_regions": {k: list(v) for k, v in self.place_regions.items()},
            "rules": [c.to_dict() for c in self.rules],
        }


def _grab_eff(o: str, r: str) -> dict:
    return {at(o, r): False, held(o): True, HANDEMPTY: False}


def build_domain(task: TaskSpec) -> Domain:
    """Ground actions in a fixed order: picks, push-picks, places, open."""
    objs, regs = task.objects, task.regions
    variables = [at(o, r) for o in objs for r in regs] + [held(o) for o in objs] + [HANDEMPTY]
    if task.drawer_region is not None:
        variables.append(DRAWER_OPEN)
    actions: list[Action] = []

    def pick_pre(o, r):
        pre = {at(o, r): True, HANDEMPTY: True}
        if r == task.drawer_region:
            pre[DRAWER_OPEN] = True
        return pre

    for o in objs:
        name, conf = ("PickId", GroundingConfidence.GAP_IDENTITY) if o in task.identity_objects else (
            "Pick", GroundingConfidence.GAP_PERCEPTION)
        for r in regs:
            actions.append(Action(name, (o, r), literals(pick_pre(o, r)), literals(_grab_eff(o, r)), conf))
    for o, r in task.push_pick:
        actions.append(Action("PushPick", (o, r), literals(pick_pre(o, r)), literals(_grab_eff(o, r)),
                              GroundingConfidence.GAP_DYNAMICS))
    for o in objs:
        for r in task.place_regions.get(o, regs):
            pre = {held(o): True}
            if r == task.drawer_region:
                pre[DRAWER_OPEN] = True
            eff = {held(o): False, HANDEMPTY: True, at(o, r): True}
            actions.append(Action("Place", (o, r), literals(pre), literals(eff), GroundingConfidence.RELIABLE))
    if task.drawer_region is not None:
        actions.append(Action("Open", (), literals({DRAWER_OPEN: False, HANDEMPTY: True}),
                              literals({DRAWER_OPEN: True}), GroundingConfidence.RELIABLE))
    return Domain(tuple(variables), tuple(actions), tuple(task.rules))


def location_literals(state_true: Iterable[str], handempty: bool) -> Literals:
    """Where everything is, as a conjunction: true at/held literals plus the hand."""
    vals = {v: True for v in state_true if v.startswith(("at(", "held("))}
    vals[HANDEMPTY] = bool(handempty)
    return literals(vals)
