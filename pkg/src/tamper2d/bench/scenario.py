"""Scenario files: loading, validation and construction of run inputs.

A scenario is a YAML document with a schema tag, the workspace, the ground
truth objects, the task block from which the symbolic domain is generated,
the behavior registry, the occlusion parameter and the seeds to run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from ..behaviors import Behavior, default_registry
from ..belief import BeliefState
from ..geometry import ConvexSet, polygons_overlap, rect_corners
from ..motion import CollisionModel
from ..task.domain import Constraint, Domain, TaskDomainError
from ..task.encoding import TaskSpec, build_domain
from ..task.planner import goal_reachable
from ..workspace import Workspace
from ..world import ObjectSpec, PushOutcomeModel, WorldSpec

SCHEMA = "tamper2d-scenario"
VERSION = 1
STREAM_IDENTITY = 21


@dataclass(frozen=True)
class Diagnostic:
    path: str
    message: str
    line: int | None = None

    def __str__(self) -> str:
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{where}{self.path}: {self.message}"


class ScenarioInvalid(ValueError):
    def __init__(self, source: str, diagnostics: list[Diagnostic]):
        self.source = source
        self.diagnostics = diagnostics
        body = "\n".join(f"  {d}" for d in diagnostics)
        super().__init__(f"{source}: {len(diagnostics)} problem(s)\n{body}")


@dataclass
class Scenario:
    name: str
    workspace: Workspace
    objects: tuple[ObjectSpec, ...]
    task: TaskSpec
    drawer_fraction: float = 0.0
    drawer_contents: tuple[str, ...] = ()
    push: PushOutcomeModel | None = None
    epsilon: float = 0.6
    seeds: tuple[int, ...] = (0,)
    behaviors: tuple[str, ...] = ("Pick", "PushPick", "Open", "PickId")
    prior_known: tuple[str, ...] = ()
    shuffle_identities: tuple[str, ...] = ()
    source: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    def domain(self) -> Domain:
        return build_domain(self.task)

    def world(self, seed: int) -> WorldSpec:
        """Ground truth for one run; shuffled labels are permuted by seed."""
        objs = list(self.objects)
        if self.shuffle_identities:
            rng = np.random.default_rng([int(seed), STREAM_IDENTITY])
            idx = [i for i, o in enumerate(objs) if o.id in self.shuffle_identities]
            labels = [objs[i].label for i in idx]
            perm = rng.permutation(len(labels))
            for j, i in enumerate(idx):
                o = objs[i]
                objs[i] = ObjectSpec(o.id, labels[perm[j]], o.half, o.pose, o.identity_visible)
        return WorldSpec(self.workspace, tuple(objs), self.drawer_fraction, tuple(self.drawer_contents), self.push)

    def belief(self, epsilon: float | None = None) -> BeliefState:
        eps = self.epsilon if epsilon is None else float(epsilon)
        b = BeliefState.empty(self.workspace, [o.id for o in self.objects], eps, self.drawer_fraction)
        for o in self.objects:
            if o.id in self.prior_known:
                b = b.with_pose(o.id, np.asarray(o.pose, dtype=float))
        return b

    def registry(self) -> dict[str, Behavior]:
        reg = default_registry()
        return {k: reg[k] for k in self.behaviors if k in reg}


def _line_index(text: str) -> dict[str, int]:
    """Field path -> 1-based source line, from the YAML node tree."""
    out: dict[str, int] = {}

    def walk(node, path):
        out[path or "$"] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                walk(v, f"{path}.{k.value}" if path else str(k.value))
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, f"{path}[{i}]")

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return out
    if root is not None:
        walk(root, "")
    return out


def _lookup(lines: dict[str, int], path: str) -> int | None:
    while path:
        if path in lines:
            return lines[path]
        cut = max(path.rfind("."), path.rfind("["))
        path = path[:cut] if cut > 0 else ""
    return lines.get("$")


def _require(d: dict, keys, prefix: str, diags: list[Diagnostic]) -> bool:
    ok = True
    for k in keys:
        if k not in d:
            diags.append(Diagnostic(f"{prefix}{k}" if prefix else k, "missing required field"))
            ok = False
    return ok


def parse(data: dict, source: str = "<memory>") -> tuple[Scenario | None, list[Diagnostic]]:
    """Build a scenario from a mapping; structural problems become diagnostics."""
    diags: list[Diagnostic] = []
    if not isinstance(data, dict):
        return None, [Diagnostic("$", "scenario must be a mapping")]
    if data.get("schema") != SCHEMA or data.get("version") != VERSION:
        diags.append(Diagnostic("schema", f"expected {SCHEMA} version {VERSION}"))
        return None, diags
    if not _require(data, ("name", "workspace", "objects", "task"), "", diags):
        return None, diags
    try:
        ws = Workspace.from_dict(data["workspace"])
    except (KeyError, TypeError, ValueError) as e:
        return None, [Diagnostic("workspace", f"cannot build workspace: {e!r}")]
    objs = []
    for i, od in enumerate(data["objects"]):
        if not _require(od, ("id", "half", "pose"), f"objects[{i}].", diags):
            continue
        objs.append(ObjectSpec.from_dict(od))
    shapes = dict(ws.shapes)
    for o in objs:
        shapes.setdefault(o.id, tuple(o.half))
        shapes.setdefault(o.label, tuple(o.half))
    ws = replace(ws, shapes=shapes)
    t = data["task"]
    if not _require(t, ("objects", "regions", "init", "goal"), "task.", diags):
        return None, diags
    rules = []
    for i, r in enumerate(t.get("rules", [])):
        try:
            rules.append(Constraint.from_dict(r))
        except (KeyError, TaskDomainError) as e:
            diags.append(Diagnostic(f"task.rules[{i}]", f"bad rule: {e}"))
    task = TaskSpec(
        objects=tuple(t["objects"]),
        regions=tuple(t["regions"]),
        init=dict(t["init"]),
        goal=dict(t["goal"]),
        drawer_region=t.get("drawer_region"),
        push_pick=tuple(tuple(p) for p in t.get("push_pick", [])),
        identity_objects=tuple(t.get("identity_objects", [])),
        place_regions={k: tuple(v) for k, v in t.get("place_regions", {}).items()},
        rules=tuple(rules),
    )
    drawer = data.get("drawer", {}) or {}
    push = PushOutcomeModel.from_dict(data["push"]) if data.get("push") else None
    sc = Scenario(
        name=str(data["name"]),
        workspace=ws,
        objects=tuple(objs),
        task=task,
        drawer_fraction=float(drawer.get("fraction", 0.0)),
        drawer_contents=tuple(drawer.get("contents", [])),
        push=push,
        epsilon=float(data.get("epsilon", 0.6)),
        seeds=tuple(int(s) for s in data.get("seeds", [0])),
        behaviors=tuple(data.get("behaviors", ["Pick", "PushPick", "Open", "PickId"])),
        prior_known=tuple(data.get("prior_known", [])),
        shuffle_identities=tuple(data.get("shuffle_identities", [])),
        source=source,
        raw=data,
    )
    return sc, diags


def check(sc: Scenario) -> list[Diagnostic]:
    """Semantic checks: geometry, camera, home configuration, task well-formedness."""
    diags: list[Diagnostic] = []
    ws = sc.workspace
    xmin, ymin, xmax, ymax = ws.bounds
    ids = [o.id for o in sc.objects]
    if len(set(ids)) != len(ids):
        diags.append(Diagnostic("objects", "duplicate object ids"))
    foot = {o.id: rect_corners(*o.pose, *o.half) for o in sc.objects}
    statics = ws.static_polygons(sc.drawer_fraction)
    for i, o in enumerate(sc.objects):
        p = foot[o.id]
        if np.any(p[:, 0] < xmin) or np.any(p[:, 0] > xmax) or np.any(p[:, 1] < ymin) or np.any(p[:, 1] > ymax):
            diags.append(Diagnostic(f"objects[{i}].pose", f"object {o.id} leaves the workspace bounds"))
        for name, sp in statics:
            if polygons_overlap(p, sp):
                diags.append(Diagnostic(f"objects[{i}].pose", f"object {o.id} overlaps static {name}"))
        for o2 in sc.objects[i + 1:]:
            if polygons_overlap(p, foot[o2.id]):
                diags.append(Diagnostic(f"objects[{i}].pose", f"objects {o.id} and {o2.id} overlap"))
    cam = np.asarray(ws.camera.position, dtype=float)
    if xmin < cam[0] < xmax and ymin < cam[1] < ymax:
        diags.append(Diagnostic("workspace.camera.position", "camera must sit outside the workspace bounds"))
    for i, o in enumerate(sc.objects):
        if not ws.camera.in_fov(o.pose[:2]):
            diags.append(Diagnostic(f"objects[{i}].pose", f"object {o.id} is outside the camera field of view"))
    polys = [p for _, p in statics] + [foot[k] for k in sorted(foot)]
    labels = [n for n, _ in statics] + sorted(foot)
    model = CollisionModel(ws.arm, ConvexSet(polys, labels))
    home = np.asarray(ws.arm.home, dtype=float)
    if not bool(model.valid(home)[0]):
        hit = sorted(str(x) for x in model.blocking_labels(home))
        diags.append(Diagnostic("workspace.arm.home", f"home configuration collides with {', '.join(hit)}"))
    if ws.scan_config is not None and not bool(model.valid(np.asarray(ws.scan_config))[0]):
        diags.append(Diagnostic("workspace.scan_config", "scan configuration is in collision"))
    t = sc.task
    region_names = {r.name for r in ws.regions}
    for r in t.regions:
        if r not in region_names:
            diags.append(Diagnostic("task.regions", f"region {r} is not defined in the workspace"))
    for key in ("init", "goal"):
        for o, r in getattr(t, key).items():
            if o not in t.objects:
                diags.append(Diagnostic(f"task.{key}.{o}", f"unknown object {o}"))
            if r not in t.regions:
                diags.append(Diagnostic(f"task.{key}.{o}", f"unknown region {r}"))
    labels_present = {o.label for o in sc.objects} | set(ids)
    for o in t.objects:
        if o not in labels_present:
            diags.append(Diagnostic("task.objects", f"symbol {o} names no object or label"))
    if diags:
        return diags
    try:
        dom = sc.domain()
        init = dom.state([v for v in t.init_vars()])
        if not goal_reachable(dom, init, t.goal_literals()):
            diags.append(Diagnostic("task.goal", "goal unreachable ignoring geometry"))
    except TaskDomainError as e:
        diags.append(Diagnostic("task", f"domain error: {e}"))
    return diags


def load_text(text: str, source: str = "<memory>") -> Scenario:
    lines = _line_index(text)
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = None if mark is None else mark.line + 1
        raise ScenarioInvalid(source, [Diagnostic("$", f"YAML error: {e}", line)]) from None
    sc, diags = parse(data, source)
    if sc is not None and not diags:
        diags = check(sc)
    if diags:
        diags = [Diagnostic(d.path, d.message, _lookup(lines, d.path)) for d in diags]
        raise ScenarioInvalid(source, diags)
    return sc


def load(path) -> Scenario:
    path = Path(path)
    return load_text(path.read_text(), str(path))


def validate(path) -> list[Diagnostic]:
    """Empty list when the scenario is valid."""
    try:
        load(path)
    except ScenarioInvalid as e:
        return e.diagnostics
    return []


def shipped_dir() -> Path:
    return Path(__file__).resolve().parent.parent / "scenarios"
