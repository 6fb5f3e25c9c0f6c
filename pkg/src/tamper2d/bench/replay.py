"""Step-by-step rendering of recorded traces.

Text rendering needs nothing beyond the trace. Plot rendering draws the
scene after every event that carries a world snapshot and needs matplotlib
(the ``plot`` extra).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..belief import BeliefState
from ..geometry import rect_corners
from ..kinematics import joint_points
from ..trace import Trace
from ..workspace import Workspace


@dataclass
class Frame:
    index: int
    event: dict
    world: dict | None
    belief: BeliefState | None


def frames(trace: Trace) -> list[Frame]:
    """One frame per event, carrying the latest world and belief snapshots."""
    ws = Workspace.from_dict(trace.header["workspace"]) if "workspace" in trace.header else None
    world, belief, out = None, None, []
    for e in trace.events:
        if "world" in e:
            world = e["world"]
        if "belief" in e and ws is not None:
            belief = BeliefState.from_dict(ws, e["belief"])
        out.append(Frame(e["i"], e, world, belief))
    return out


def describe(e: dict) -> str:
    ev = e["event"]
    if ev == "sense":
        return f"sense ({e.get('note', '')}): detected {', '.join(e['detected']) or 'nothing'}"
    if ev == "plan":
        marks = ["*" if s["gap"] else "" for s in e["steps"]]
        acts = [a + m for a, m in zip(e["actions"], marks)]
        return f"plan epoch {e['epoch']}: " + " ".join(acts)
    if ev == "constraint":
        when = ", ".join(f"{k}={'T' if v else 'F'}" for k, v in sorted(e["when"].items()))
        return f"constraint [{e['source']}:{e['reason']}] {{{when}}} => not {e['forbid']}"
    if ev == "execute":
        return f"execute {e['action']}: {'ok' if e['ok'] else e['error']}"
    if ev == "behavior":
        tail = "" if e["outcome"] == "Success" else f" at step {e['step']} ({e['reason']})"
        return f"behavior {e['action']}: {e['outcome']}{tail}, grasps {e['grasp_count']}"
    if ev == "repair":
        return f"repair before {e['action']}: {e['mode']}"
    if ev == "fault":
        extra = " after push" if e.get("post_push") else ""
        return f"fault {e['kind']}{extra} during {e['action']}"
    if ev == "clear":
        return f"constraints cleared, epoch {e['epoch']}, budget x{e['budget_multiplier']:g}"
    if ev == "result":
        return (f"result {e['status']}: actions {e['actions']}, behaviors {e['behaviors']}, "
                f"grasps {e['grasps']}, exec {e['exec_s']:.2f}s")
    rest = {k: v for k, v in e.items() if k not in ("i", "event", "world", "belief")}
    return f"{ev} {rest}"


def render_text(trace: Trace) -> list[str]:
    h = trace.header
    lines = [f"{h.get('scenario', '?')} seed {h.get('seed')} method {h.get('method')} epsilon {h.get('epsilon')}"]
    lines += [f"{e['i']:4d} {describe(e)}" for e in trace.events]
    return lines


def draw(ax, ws: Workspace, world: dict | None, belief: BeliefState | None, title: str = ""):
    """Draw statics, regions, shadows, true objects and the arm on ``ax``."""
    from matplotlib.patches import Polygon as Patch

    frac = 0.0 if world is None else world.get("drawer_fraction", 0.0)
    for r in ws.regions:
        p = r.polygon(ws.drawer, frac)
        ax.add_patch(Patch(p, closed=True, fill=False, ls=":", ec="0.6"))
        ax.text(*p.mean(axis=0), r.name, fontsize=6, color="0.5", ha="center")
    for _, p in ws.static_polygons(frac):
        ax.add_patch(Patch(p, closed=True, fc="0.3"))
    if belief is not None:
        for _, p in belief.occlusion_regions():
            ax.add_patch(Patch(p, closed=True, fc="tab:purple", alpha=0.15))
    if world is not None:
        for oid, pose in world["objects"].items():
            half = ws.shapes.get(oid, (0.02, 0.02))
            known = belief is None or oid in belief.known
            ax.add_patch(Patch(rect_corners(*pose, *half), closed=True, fc="tab:orange" if known else "none",
                               ec="tab:red", alpha=0.8))
            ax.text(pose[0], pose[1], oid, fontsize=6, ha="center", va="center")
        pts = joint_points(ws.arm, np.asarray(world["config"]))[0]
        ax.plot(pts[:, 0], pts[:, 1], "-o", color="tab:blue", ms=2, lw=2)
    ax.plot(*ws.camera.position, "k^")
    x0, y0, x1, y1 = ws.bounds
    ax.set_xlim(x0 - 0.05, x1 + 0.05)
    ax.set_ylim(min(y0, ws.camera.position[1]) - 0.05, y1 + 0.05)
    ax.set_aspect("equal")
    ax.set_title(title, fontsize=7)


def render_plots(trace: Trace, out_dir) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ws = Workspace.from_dict(trace.header["workspace"])
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for f in frames(trace):
        if "world" not in f.event:
            continue
        fig, ax = plt.subplots(figsize=(5, 4))
        draw(ax, ws, f.world, f.belief, f"{f.index}: {describe(f.event)}"[:90])
        path = out_dir / f"frame_{f.index:04d}.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        paths.append(path)
    return paths


def replay(path, plot_dir=None) -> tuple[Trace, list[str]]:
    """Parse a trace file, render it as text and optionally as images."""
    trace = Trace.read(path)
    lines = render_text(trace)
    if plot_dir is not None:
        render_plots(trace, plot_dir)
    return trace, lines
