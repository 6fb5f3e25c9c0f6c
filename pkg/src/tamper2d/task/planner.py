"""Shortest constraint-respecting task plans.

The search is breadth-first over the reachable symbolic states, which is
the explicit-state equivalent of solving a bounded-horizon encoding at
horizon 0, 1, 2, ... . Actions are expanded in the domain's canonical order,
so the first goal state generated is reached by the lexicographically
smallest plan among those of minimum length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .domain import Constraint, Domain, Literals, SymbolicState, TaskPlan, TaskDomainError

DEFAULT_HORIZON = 30
BUDGET_ESCALATION = 2.0


class NoPlanExists(TaskDomainError):
    pass


class HorizonExceeded(NoPlanExists):
    """A plan exists but every plan is longer than the horizon limit."""

    def __init__(self, msg: str, length: int):
        super().__init__(msg)
        self.length = length


@dataclass
class ConstraintStack:
    """Constraints learned from grounding and execution failures.

    Frames group constraints by where they were learned; ``clear`` drops all
    frames and starts a new epoch with a doubled motion-planning budget.
    """

    frames: list[list[Constraint]] = field(default_factory=lambda: [[]])
    clears: int = 0

    @property
    def cleared_flag(self) -> bool:
        return self.clears > 0

    @property
    def budget_multiplier(self) -> float:
        return BUDGET_ESCALATION**self.clears

    @property
    def epoch(self) -> int:
        return self.clears

    def push_frame(self) -> "ConstraintStack":
        self.frames.append([])
        return self

    def assert_constraint(self, c: Constraint) -> "ConstraintStack":
        if c not in self:
            self.frames[-1].append(c)
        return self

    def clear(self) -> "ConstraintStack":
        self.frames = [[]]
        self.clears += 1
        return self

    def __iter__(self):
        for frame in self.frames:
            yield from frame

    def __len__(self) -> int:
        return sum(len(f) for f in self.frames)

    def __contains__(self, c: object) -> bool:
        return any(c in f for f in self.frames)

    def is_empty(self) -> bool:
        return len(self) == 0


def assert_constraint(stack: ConstraintStack, c: Constraint) -> ConstraintStack:
    return stack.assert_constraint(c)


def clear_constraints(stack: ConstraintStack) -> ConstraintStack:
    return stack.clear()


@dataclass
class PlanQuery:
    init: SymbolicState
    goal: Literals
    horizon_limit: int = DEFAULT_HORIZON
    constraints: ConstraintStack = field(default_factory=ConstraintStack)

    def __post_init__(self):
        if self.horizon_limit < 1:
            raise ValueError("horizon_limit must be >= 1")


class _Compiled:
    def __init__(self, domain: Domain, constraints: Iterable[Constraint]):
        self.acts = []
        pos = {a.ident: i for i, a in enumerate(domain.actions)}
        self.forbid: list[list[tuple[int, int]]] = [[] for _ in domain.actions]
        for a in domain.actions:
            pm, pv = domain.masks(a.pre)
            em, ev = domain.masks(a.eff)
            self.acts.append((pm, pv, ~em, ev))
        for c in list(domain.constraints) + list(constraints):
            domain.check_constraint(c)
            self.forbid[pos[c.forbidden_action]].append(domain.masks(c.state_pred))


def plan(query: PlanQuery, domain: Domain) -> TaskPlan:
    if query.init.variables != domain.variables:
        raise TaskDomainError("initial state belongs to a different domain")
    gm, gv = domain.masks(query.goal)
    comp = _Compiled(domain, query.constraints)
    init = query.init.bits
    if init & gm == gv:
        return TaskPlan((), (query.init,))
    parent: dict[int, tuple[int, int] | None] = {init: None}
    frontier = [init]
    depth = 0
    acts, forbid = comp.acts, comp.forbid
    while frontier:
        depth += 1
        nxt = []
        for s in frontier:
            for ai, (pm, pv, keep, ev) in enumerate(acts):
                if s & pm != pv:
                    continue
                if forbid[ai] and any(s & cm == cv for cm, cv in forbid[ai]):
                    continue
                t = (s & keep) | ev
                if t in parent:
                    continue
                parent[t] = (s, ai)
                if t & gm == gv:
                    if depth > query.horizon_limit:
                        raise HorizonExceeded(
                            f"shortest plan has {depth} steps, limit {query.horizon_limit}", depth
                        )
                    return _reconstruct(domain, parent, t)
                nxt.append(t)
        frontier = nxt
    raise NoPlanExists("goal unreachable under the current constraints")


def _reconstruct(domain: Domain, parent, t: int) -> TaskPlan:
    steps, states = [], [t]
    while parent[t] is not None:
        s, ai = parent[t]
        steps.append(domain.actions[ai])
        states.append(s)
        t = s
    steps.reverse()
    states.reverse()
    return TaskPlan(tuple(steps), tuple(SymbolicState(domain.variables, b) for b in states))


def goal_reachable(domain: Domain, init: SymbolicState, goal: Literals) -> bool:
    """Symbolic reachability ignoring geometry and learned constraints."""
    try:
        plan(PlanQuery(init, goal, horizon_limit=10**6), domain)
    except NoPlanExists:
        return False
    return True
