"""
Two bags that look alike
========================

The apples and the eggs come in identical bags. Labels can only be read
while a bag is held up to the camera. The apples must go into the cart
before the eggs, so the pick-by-identity behavior may need to put the wrong
bag back.
"""

from tamper2d.bench.audit import rule_audit
from tamper2d.bench.runner import run_episode
from tamper2d.bench.scenario import load, shipped_dir

sc = load(shipped_dir() / "grocery" / "grocery.yaml")
dom = sc.domain()
init = dom.state(sc.task.init_vars())

for seed in sc.seeds:
    out = run_episode(sc, "tamper", seed)
    picks = [e for e in out.trace.events if e["event"] == "behavior"]
    grasps = [e["grasp_count"] for e in picks]
    print(f"seed {seed}: {out.status}, behavior grasps {grasps}, "
          f"rule violations {len(rule_audit(out.trace, dom, init))}")
