"""Single episodes: build the simulator and dispatch to a method."""

from __future__ import annotations

from ..executor import ExecConfig, ExecutionOutcome, run_baseline, run_tamp, run_tamper
from ..world import Simulator
from .scenario import Scenario

METHODS = ("tamper", "tamp", "baseline")


def run_episode(sc: Scenario, method: str, seed: int, epsilon: float | None = None,
                cfg: ExecConfig = ExecConfig(), behaviors: dict | None = None) -> ExecutionOutcome:
    """Run one (scenario, seed, method) episode from a fresh simulator.

    ``behaviors`` overrides the scenario registry (an empty dict gives the
    behavior-free variant of the gapped planner).
    """
    eps = sc.epsilon if epsilon is None else float(epsilon)
    sim = Simulator(sc.world(seed), seed)
    belief = sc.belief(eps)
    dom = sc.domain()
    meta = {"scenario": sc.name, "workspace": sc.workspace.to_dict()}
    if method == "tamper":
        reg = sc.registry() if behaviors is None else behaviors
        return run_tamper(dom, sim, sc.task, belief, reg, seed, cfg, eps, meta)
    if method == "tamp":
        return run_tamp(dom, sim, sc.task, belief, seed, cfg, eps, meta)
    if method == "baseline":
        return run_baseline(dom, sim, sc.task, belief, seed, cfg, eps, meta)
    raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
