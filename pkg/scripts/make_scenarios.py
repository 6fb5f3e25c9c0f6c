"""Write the shipped benchmark scenarios and suites.

Each family has a base layout; the ten problems of a family vary start
poses with small seeded offsets. Run from the repository root:

    python3 scripts/make_scenarios.py
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
import yaml

OUT = Path(__file__).resolve().parent.parent / "src" / "tamper2d" / "scenarios"
PI = float(np.pi)


def _f(*v):
    return [round(float(x), 4) for x in v]


def box(name, x, y, hx, hy, th=0.0):
    return {"name": name, "pose": _f(x, y, th), "half": _f(hx, hy)}


def region(name, x, y, hx, hy, approach=None, corridor=0.12, headings=(0.0,)):
    d = {"name": name, "pose": _f(x, y, 0.0), "half": _f(hx, hy), "corridor": corridor, "headings": list(headings)}
    if approach is not None:
        d["approach"] = approach
    return d


def obj(oid, x, y, hx, hy, th=0.0, label=None, visible=True):
    return {"id": oid, "label": label or oid, "half": _f(hx, hy), "pose": _f(x, y, th),
            "identity_visible": visible}


def channel(x0, x1, yc, half_w, t=0.02):
    """Three walls forming a slot open towards +x."""
    return [
        box("channel.low", (x0 + x1) / 2, yc - half_w - t / 2, (x1 - x0) / 2, t / 2),
        box("channel.high", (x0 + x1) / 2, yc + half_w + t / 2, (x1 - x0) / 2, t / 2),
        box("channel.end", x0 - t / 2, yc, t / 2, half_w + t),
    ]


def header(name, seeds):
    return {"schema": "tamper2d-scenario", "version": 1, "name": name, "seeds": list(seeds), "epsilon": 0.6}


def horizontal(i: int) -> dict:
    rng = np.random.default_rng([2024, i])
    j = rng.uniform(-1, 1, size=6) * 0.02
    lx, ly = 0.55 + j[0], 0.5 + j[1]
    # S sits right behind L on the camera ray through L
    ray = np.array([lx, ly + 0.35])
    ray /= np.linalg.norm(ray)
    sx, sy = np.array([lx, ly]) + ray * (0.18 + abs(j[2]))
    mx, my = 0.8 + j[3], 0.4 + j[4]
    ws = {
        "camera": {"position": [0.0, -0.35], "fov": [0.0, PI]},
        "bounds": [-1.0, -0.3, 1.0, 0.8],
        "obstacles": channel(-0.85, -0.3, 0.5, 0.1),
        "regions": [
            region("goal_S", -0.76, 0.5, 0.015, 0.01, approach=PI, corridor=0.55),
            region("goal_M", -0.60, 0.5, 0.015, 0.01, approach=PI, corridor=0.37),
            region("goal_L", -0.42, 0.5, 0.015, 0.01, approach=PI, corridor=0.20),
            region("buffer", -0.11, 0.64, 0.17, 0.06, approach=PI / 2),
            region("start", 0.6, 0.54, 0.25, 0.24),
        ],
        "pick_corridor": 0.12,
    }
    d = header(f"horizontal-{i + 1:02d}", [i])
    d.update({
        "workspace": ws,
        "objects": [
            obj("S", sx, sy, 0.03, 0.03),
            obj("M", mx, my, 0.04, 0.04),
            obj("L", lx, ly, 0.045, 0.05),
        ],
        "task": {
            "objects": ["S", "M", "L"],
            "regions": ["goal_S", "goal_M", "goal_L", "buffer", "start"],
            "init": {"S": "start", "M": "start", "L": "start"},
            "goal": {"S": "goal_S", "M": "goal_M", "L": "goal_L"},
            "place_regions": {
                "S": ["goal_S", "buffer", "start"],
                "M": ["goal_M", "buffer", "start"],
                "L": ["goal_L", "buffer", "start"],
            },
        },
        "behaviors": ["Pick"],
    })
    return d


def kitchen(i: int) -> dict:
    rng = np.random.default_rng([2025, i])
    j = rng.uniform(-1, 1, size=6) * 0.02
    lx, ly = 0.5 + j[0], 0.45 + j[1]
    # S hides behind L, off the push path
    ray = np.array([lx, ly + 0.35])
    ray /= np.linalg.norm(ray)
    sx, sy = np.array([lx, ly]) + ray * (0.25 + abs(j[2]))
    dy = 0.35
    gap = 0.07 + 0.012 + 0.01
    ws = {
        "camera": {"position": [0.0, -0.35], "fov": [0.0, PI]},
        "bounds": [-0.9, -0.3, 0.9, 1.0],
        "obstacles": [
            box("slot.left", lx - gap, ly, 0.01, 0.06),
            box("slot.right", lx + gap, ly, 0.01, 0.06),
            box("cabinet.top", -0.62, dy + 0.09, 0.09, 0.01),
            box("cabinet.bottom", -0.62, dy - 0.09, 0.09, 0.01),
            box("cabinet.back", -0.72, dy, 0.01, 0.1),
        ],
        "drawer": {"name": "drawer", "pose": [-0.62, dy, 0.0], "half": [0.08, 0.08], "axis": [1.0, 0.0],
                   "travel": 0.16},
        "regions": [
            region("slot", lx, ly, 0.07, 0.05),
            {"name": "drawer", "kind": "drawer", "corridor": 0.12, "headings": [0.0]},
            region("shelf", -0.1, 0.85, 0.25, 0.06, approach=PI / 2),
            region("table", 0.45, 0.5, 0.3, 0.3),
        ],
        "pick_corridor": 0.12,
        "push_distance": 0.2,
    }
    d = header(f"kitchen-{i + 1:02d}", [i])
    d.update({
        "workspace": ws,
        "objects": [
            obj("S", sx, sy, 0.03, 0.03),
            obj("L", lx, ly, 0.07, 0.04),
            obj("D", -0.62 + j[3], dy + j[4], 0.03, 0.03),
        ],
        "drawer": {"fraction": 0.0, "contents": ["D"]},
        "push": {"nominal_distance": 0.2, "d_max": 0.04, "theta_max": 0.15},
        "task": {
            "objects": ["S", "L", "D"],
            "regions": ["slot", "drawer", "shelf", "table"],
            "init": {"S": "table", "L": "slot", "D": "drawer"},
            "goal": {"S": "shelf", "L": "shelf", "D": "shelf"},
            "drawer_region": "drawer",
            "push_pick": [["L", "slot"]],
            "place_regions": {"S": ["shelf", "table"], "L": ["shelf", "table"], "D": ["shelf", "table"]},
        },
        "behaviors": ["Pick", "PushPick"],
    })
    return d


def grocery() -> dict:
    """Two look-alike bags; apples must be in the cart before the eggs."""
    ws = {
        "camera": {"position": [0.0, -0.35], "fov": [0.0, PI]},
        "bounds": [-0.9, -0.3, 0.9, 0.9],
        "regions": [
            region("counter", 0.45, 0.5, 0.2, 0.12),
            region("cart", -0.45, 0.45, 0.15, 0.12, approach=PI),
        ],
        "scan_region": box("scan", 0.66, 0.0, 0.08, 0.08),
        "scan_config": _f(0.8957, -2.2459, 1.3503),
        "pick_corridor": 0.12,
    }
    d = header("grocery", range(5))
    d.update({
        "workspace": ws,
        "objects": [
            obj("bag1", 0.35, 0.5, 0.04, 0.05, label="apples", visible=False),
            obj("bag2", 0.55, 0.5, 0.04, 0.05, label="eggs", visible=False),
        ],
        "shuffle_identities": ["bag1", "bag2"],
        "task": {
            "objects": ["apples", "eggs"],
            "regions": ["counter", "cart"],
            "init": {"apples": "counter", "eggs": "counter"},
            "goal": {"apples": "cart", "eggs": "cart"},
            "identity_objects": ["apples", "eggs"],
            # apples never go on top of the eggs
            "rules": [{"when": {"at(eggs,cart)": True}, "forbid": "Place(apples,cart)"}],
        },
        "behaviors": ["PickId"],
    })
    return d


FAMILIES = {"horizontal": horizontal, "kitchen": kitchen}


def suite(name: str, files: list[str], methods, gates) -> dict:
    return {"schema": "tamper2d-suite", "version": 1, "name": name, "methods": list(methods),
            "scenarios": files, "gates": gates}


def gate(name, stat, op, value, method="tamper"):
    return {"name": name, "method": method, "stat": stat, "op": op, "value": value}


def band(stat, centre, tol, method="tamper"):
    return [gate(f"{method} {stat} >= {centre - tol:g}", stat, ">=", round(centre - tol, 6), method),
            gate(f"{method} {stat} <= {centre + tol:g}", stat, "<=", round(centre + tol, 6), method)]


def suites() -> dict[str, dict]:
    audits = [gate(f"{m} plans respect their constraints", "audit_violations", "==", 0, m)
              for m in ("tamper", "baseline")]
    hz = [f"../horizontal/horizontal-{i + 1:02d}.yaml" for i in range(10)]
    kt = [f"../kitchen/kitchen-{i + 1:02d}.yaml" for i in range(10)]
    return {
        "horizontal": suite("horizontal", hz, ("tamper", "baseline"), [
            gate("tamper solves all", "success_rate", "==", 1.0),
            gate("baseline solves all", "success_rate", "==", 1.0, "baseline"),
            {"name": "tamper needs at least one grasp fewer", "stat": "mean_grasps", "lhs": "tamper",
             "rhs": "baseline", "op": "<=", "offset": -1.0},
            *band("mean_actions", 9.2, 2.0), *band("mean_behaviors", 1.1, 1.0), *audits]),
        "kitchen": suite("kitchen", kt, ("tamper", "baseline"), [
            gate("tamper solves all", "success_rate", "==", 1.0),
            gate("baseline solves none", "success_rate", "==", 0.0, "baseline"),
            gate("baseline fails after the push", "post_push_failure_rate", "==", 1.0, "baseline"),
            *band("mean_actions", 8.4, 2.0), *band("mean_behaviors", 2.3, 1.0), *audits]),
        "grocery": suite("grocery", ["../grocery/grocery.yaml"], ("tamper",), [
            gate("tamper solves all seeds", "success_rate", "==", 1.0),
            gate("at most two grasps per behavior", "max_behavior_grasps", "<=", 2),
            gate("stacking rule respected", "rule_violations", "==", 0),
            audits[0]]),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=OUT)
    args = ap.parse_args(argv)
    for fam, build in FAMILIES.items():
        d = args.out / fam
        d.mkdir(parents=True, exist_ok=True)
        for i in range(10):
            sc = build(i)
            (d / f"{sc['name']}.yaml").write_text(yaml.safe_dump(sc, sort_keys=False))
    d = args.out / "grocery"
    d.mkdir(parents=True, exist_ok=True)
    (d / "grocery.yaml").write_text(yaml.safe_dump(grocery(), sort_keys=False))
    d = args.out / "suites"
    d.mkdir(parents=True, exist_ok=True)
    for name, su in suites().items():
        (d / f"{name}.yaml").write_text(yaml.safe_dump(su, sort_keys=False))
    print(f"wrote scenarios under {args.out}")


if __name__ == "__main__":
    main()
