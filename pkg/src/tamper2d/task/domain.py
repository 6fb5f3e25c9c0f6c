"""Symbolic task domain: boolean state variables, ground actions, exclusion constraints."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class TaskDomainError(Exception):
    pass


class UnknownVariable(TaskDomainError, KeyError):
    pass


class PreconditionUnsatisfied(TaskDomainError):
    pass


class GroundingConfidence(str, enum.Enum):
    RELIABLE = "Reliable"
    GAP_PERCEPTION = "GapPerception"
    GAP_DYNAMICS = "GapDynamics"
    GAP_IDENTITY = "GapIdentity"


Literals = tuple[tuple[str, bool], ...]


def literals(mapping: Mapping[str, bool] | Iterable[tuple[str, bool]]) -> Literals:
    """Canonical (sorted, deduplicated) conjunction of literals."""
    items = mapping.items() if isinstance(mapping, Mapping) else mapping
    out: dict[str, bool] = {}
    for name, value in items:
        value = bool(value)
        if out.get(name, value) != value:
            raise TaskDomainError(f"contradictory literals for {name!r}")
        out[name] = value
    return tuple(sorted(out.items()))


@dataclass(frozen=True)
class Action:
    name: str
    params: tuple[str, ...]
    pre: Literals
    eff: Literals
    confidence: GroundingConfidence = GroundingConfidence.RELIABLE

    @property
    def ident(self) -> str:
        return f"{self.name}({','.join(self.params)})"

    def __str__(self) -> str:
        return self.ident


@dataclass(frozen=True)
class Constraint:
    """Forbid ``forbidden_action`` from every state satisfying ``state_pred``."""

    state_pred: Literals
    forbidden_action: str

    def to_dict(self) -> dict:
        return {"when": dict(self.state_pred), "forbid": self.forbidden_action}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Constraint":
        return cls(literals(d.get("when", {})), d["forbid"])


@dataclass(frozen=True)
class Domain:
    """A ground STRIPS-style domain with a fixed variable order.

    ``constraints`` are permanent domain rules that survive constraint-stack
    clears (e.g. a stacking order encoded by the scenario author).
    """

    variables: tuple[str, ...]
    actions: tuple[Action, ...]
    constraints: tuple[Constraint, ...] = ()
    index: Mapping[str, int] = field(init=False, repr=False, compare=False)
    by_ident: Mapping[str, Action] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.variables)) != len(self.variables):
            raise TaskDomainError("duplicate state variable")
        object.__setattr__(self, "index", {v: i for i, v in enumerate(self.variables)})
        by_ident = {}
        for a in self.actions:
            for name, _ in a.pre + a.eff:
                self.bit(name)
            if a.ident in by_ident:
                raise TaskDomainError(f"duplicate ground action {a.ident}")
            by_ident[a.ident] = a
        object.__setattr__(self, "by_ident", by_ident)
        for c in self.constraints:
            self.check_constraint(c)

    def bit(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise UnknownVariable(name) from None

    def check_constraint(self, c: Constraint) -> None:
        for name, _ in c.state_pred:
            self.bit(name)
        if c.forbidden_action not in self.by_ident:
            raise TaskDomainError(f"constraint names unknown action {c.forbidden_action}")

    def masks(self, pred: Literals) -> tuple[int, int]:
        mask = val = 0
        for name, value in pred:
            b = 1 << self.bit(name)
            mask |= b
            if value:
                val |= b
        return mask, val

    def state(self, true_vars: Iterable[str] = ()) -> "SymbolicState":
        bits = 0
        for name in true_vars:
            bits |= 1 << self.bit(name)
        return SymbolicState(self.variables, bits)

    def action(self, ident: str) -> Action:
        try:
            return self.by_ident[ident]
        except KeyError:
            raise TaskDomainError(f"unknown action {ident}") from None


@dataclass(frozen=True)
class SymbolicState:
    variables: tuple[str, ...]
    bits: int

    def __getitem__(self, name: str) -> bool:
        try:
            i = self.variables.index(name)
        except ValueError:
            raise UnknownVariable(name) from None
        return bool(self.bits >> i & 1)

    def true_vars(self) -> list[str]:
        return [v for i, v in enumerate(self.variables) if self.bits >> i & 1]

    def with_values(self, values: Mapping[str, bool]) -> "SymbolicState":
        bits = self.bits
        for name, value in values.items():
            try:
                i = self.variables.index(name)
            except ValueError:
                raise UnknownVariable(name) from None
            bits = bits | (1 << i) if value else bits & ~(1 << i)
        return SymbolicState(self.variables, bits)

    def __str__(self) -> str:
        return "{" + ", ".join(self.true_vars()) + "}"


def _pred_masks(s: SymbolicState, pred: Literals) -> tuple[int, int]:
    mask = val = 0
    for name, value in pred:
        try:
            i = s.variables.index(name)
        except ValueError:
            raise UnknownVariable(name) from None
        mask |= 1 << i
        if value:
            val |= 1 << i
    return mask, val


def satisfies(s: SymbolicState, pred: Literals | Mapping[str, bool]) -> bool:
    if isinstance(pred, Mapping):
        pred = literals(pred)
    mask, val = _pred_masks(s, pred)
    return s.bits & mask == val


def apply(s: SymbolicState, a: Action) -> SymbolicState:
    if not satisfies(s, a.pre):
        raise PreconditionUnsatisfied(f"{a.ident} not applicable in {s}")
    mask, val = _pred_masks(s, a.eff)
    return SymbolicState(s.variables, (s.bits & ~mask) | val)


def violates(s: SymbolicState, a: Action | str, c: Constraint) -> bool:
    ident = a if isinstance(a, str) else a.ident
    return ident == c.forbidden_action and satisfies(s, c.state_pred)


@dataclass(frozen=True)
class TaskPlan:
    steps: tuple[Action, ...]
    states: tuple[SymbolicState, ...]

    def __len__(self) -> int:
        return len(self.steps)

    def idents(self) -> list[str]:
        return [a.ident for a in self.steps]


def replay(init: SymbolicState, steps: Sequence[Action]) -> TaskPlan:
    states = [init]
    for a in steps:
        states.append(apply(states[-1], a))
    return TaskPlan(tuple(steps), tuple(states))


def validate_plan(
    plan: TaskPlan,
    init: SymbolicState,
    goal: Literals,
    constraints: Iterable[Constraint] = (),
) -> list[str]:
    """Problems with ``plan`` as a list of messages; empty when valid."""
    problems = []
    if not plan.states or plan.states[0] != init:
        problems.append("first induced state is not the initial state")
    s = init
    constraints = list(constraints)
    for i, a in enumerate(plan.steps):
        if not satisfies(s, a.pre):
            problems.append(f"step {i} {a.ident}: precondition unsatisfied")
            return problems
        for c in constraints:
            if violates(s, a, c):
                problems.append(f"step {i} {a.ident}: violates {c.to_dict()}")
        s = apply(s, a)
        if i + 1 < len(plan.states) and plan.states[i + 1] != s:
            problems.append(f"step {i}: induced state mismatch")
    if not satisfies(s, goal):
        problems.append("final state does not satisfy the goal")
    return problems
