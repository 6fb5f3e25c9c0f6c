"""Benchmark suites: run (scenario, seed, method) episodes, tabulate, gate.

A suite file lists scenario files (relative to the suite), the methods to
run and a list of gates. A gate compares one per-method statistic either
with a constant or with the same statistic of another method:

    - {name: all solved, method: tamper, stat: success_rate, op: "==", value: 1.0}
    - {name: fewer grasps, stat: mean_grasps, lhs: tamper, rhs: baseline, op: "<=", offset: -1.0}
"""

from __future__ import annotations

import csv
import io
import math
import operator
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..executor import ExecConfig
from .audit import behavior_grasps, constraint_audit, failure_cause, rule_audit
from .runner import METHODS, run_episode
from .scenario import Diagnostic, Scenario, ScenarioInvalid, load, shipped_dir

SCHEMA = "tamper2d-suite"
VERSION = 1
OPS = {"==": operator.eq, "<=": operator.le, ">=": operator.ge, "<": operator.lt, ">": operator.gt}
STATS = ("runs", "success_rate", "mean_actions", "mean_behaviors", "mean_grasps", "mean_exec_s", "mean_total_s",
         "wall_s", "post_push_failure_rate", "max_behavior_grasps", "audit_violations", "rule_violations")


@dataclass
class MetricsRow:
    scenario: str
    seed: int
    method: str
    status: str
    success: bool
    actions: int
    behaviors: int
    grasps: int
    plan_be_s: float
    plan_ae_s: float
    sense_ae_s: float
    exec_s: float
    total_s: float = 0.0
    wall_s: float = 0.0
    failure_cause: str | None = None
    max_behavior_grasps: int = 0
    audit_violations: int = 0
    rule_violations: int = 0
    trace_file: str = ""

    def __post_init__(self):
        self.total_s = self.plan_be_s + self.plan_ae_s + self.sense_ae_s + self.exec_s


@dataclass
class Gate:
    name: str
    stat: str
    op: str
    method: str | None = None
    value: float | None = None
    lhs: str | None = None
    rhs: str | None = None
    offset: float = 0.0

    @classmethod
    def from_dict(cls, d: dict) -> "Gate":
        g = cls(str(d.get("name", d.get("stat", "gate"))), d["stat"], d.get("op", "=="), d.get("method"),
                None if d.get("value") is None else float(d["value"]), d.get("lhs"), d.get("rhs"),
                float(d.get("offset", 0.0)))
        if g.stat not in STATS:
            raise ValueError(f"unknown statistic {g.stat!r}")
        if g.op not in OPS:
            raise ValueError(f"unknown operator {g.op!r}")
        if (g.method is None) == (g.lhs is None):
            raise ValueError("a gate needs either method/value or lhs/rhs")
        return g

    def evaluate(self, stats: dict[str, dict]) -> "GateResult":
        if self.method is not None:
            if self.method not in stats:
                return GateResult(self.name, None, f"method {self.method} was not run")
            left = stats[self.method][self.stat]
            ok = OPS[self.op](left, self.value)
            return GateResult(self.name, bool(ok), f"{self.method}.{self.stat} = {_fmt(left)} {self.op} {_fmt(self.value)}")
        if self.lhs not in stats or self.rhs not in stats:
            return GateResult(self.name, None, f"needs methods {self.lhs} and {self.rhs}")
        left, right = stats[self.lhs][self.stat], stats[self.rhs][self.stat]
        ok = OPS[self.op](left, right + self.offset)
        sign = "+" if self.offset >= 0 else "-"
        return GateResult(self.name, bool(ok), f"{self.lhs}.{self.stat} = {_fmt(left)} {self.op} "
                                                f"{self.rhs}.{self.stat} {sign} {abs(self.offset):g} = {_fmt(right + self.offset)}")


@dataclass
class GateResult:
    name: str
    passed: bool | None
    detail: str

    def line(self) -> str:
        mark = {True: "PASS", False: "FAIL", None: "SKIP"}[self.passed]
        return f"{mark} {self.name}: {self.detail}"


@dataclass
class Suite:
    name: str
    scenarios: list[Path]
    methods: tuple[str, ...] = ("tamper", "baseline")
    gates: list[Gate] = field(default_factory=list)
    source: str = ""


@dataclass
class SuiteResult:
    suite: Suite
    rows: list[MetricsRow]
    stats: dict[str, dict]
    gates: list[GateResult]

    @property
    def passed(self) -> bool:
        return all(g.passed is not False for g in self.gates)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3f}".rstrip("0").rstrip(".") if math.isfinite(v) else str(v)
    return str(v)


def load_suite(path) -> Suite:
    """Parse a suite file; every listed scenario must validate."""
    path = Path(path)
    data = yaml.safe_load(path.read_text()) or {}
    src = str(path)
    if data.get("schema") != SCHEMA or data.get("version") != VERSION:
        raise ScenarioInvalid(src, [Diagnostic("schema", f"expected {SCHEMA} version {VERSION}")])
    methods = tuple(data.get("methods", ("tamper", "baseline")))
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ScenarioInvalid(src, [Diagnostic("methods", f"unknown method(s) {', '.join(bad)}")])
    gates, diags = [], []
    for i, g in enumerate(data.get("gates", []) or []):
        try:
            gates.append(Gate.from_dict(g))
        except (KeyError, ValueError) as e:
            diags.append(Diagnostic(f"gates[{i}]", str(e)))
    if diags:
        raise ScenarioInvalid(src, diags)
    files = [(path.parent / f).resolve() for f in data.get("scenarios", []) or []]
    return Suite(str(data.get("name", path.stem)), files, methods, gates, src)


def resolve_suite(name_or_path) -> Path:
    """A suite file path, or the name of a shipped suite."""
    p = Path(name_or_path)
    if p.exists():
        return p
    shipped = shipped_dir() / "suites" / f"{name_or_path}.yaml"
    if shipped.exists():
        return shipped
    raise FileNotFoundError(f"no suite file or shipped suite named {name_or_path!r}")


def row_from_outcome(sc: Scenario, seed: int, method: str, out, wall_s: float, trace_file: str = "") -> MetricsRow:
    m = out.metrics
    dom = sc.domain()
    init = dom.state(sc.task.init_vars())
    grasps = behavior_grasps(out.trace)
    return MetricsRow(
        scenario=sc.name, seed=seed, method=method, status=out.status, success=out.success,
        actions=m.actions, behaviors=m.behaviors, grasps=m.grasps,
        plan_be_s=m.plan_be_s, plan_ae_s=m.plan_ae_s, sense_ae_s=m.sense_ae_s, exec_s=m.exec_s,
        wall_s=wall_s, failure_cause=None if out.success else failure_cause(out.trace),
        max_behavior_grasps=max(grasps, default=0),
        audit_violations=len(constraint_audit(out.trace, dom)),
        rule_violations=len(rule_audit(out.trace, dom, init)),
        trace_file=trace_file,
    )


def method_stats(rows: list[MetricsRow]) -> dict:
    n = len(rows)
    fails = [r for r in rows if not r.success]

    def mean(key):
        return float(np.mean([getattr(r, key) for r in rows])) if rows else float("nan")

    return {
        "runs": n,
        "success_rate": sum(r.success for r in rows) / n if n else float("nan"),
        "mean_actions": mean("actions"),
        "mean_behaviors": mean("behaviors"),
        "mean_grasps": mean("grasps"),
        "mean_exec_s": mean("exec_s"),
        "mean_total_s": mean("total_s"),
        "wall_s": float(sum(r.wall_s for r in rows)),
        "post_push_failure_rate": (sum(r.failure_cause == "post-push" for r in fails) / len(fails)) if fails else 1.0,
        "max_behavior_grasps": max((r.max_behavior_grasps for r in rows), default=0),
        "audit_violations": sum(r.audit_violations for r in rows),
        "rule_violations": sum(r.rule_violations for r in rows),
    }


def run_suite(suite: Suite, out_dir=None, methods=None, seed: int | None = None, epsilon: float | None = None,
              cfg: ExecConfig = ExecConfig(), log=None) -> SuiteResult:
    """Run every (scenario, seed, method) episode of ``suite``.

    ``seed`` replaces every scenario's seed list; ``methods`` replaces the
    suite's method list. With ``out_dir`` the traces, the long metrics file,
    the per-method tables and the gate report are written there.
    """
    scenarios = [load(p) for p in suite.scenarios]
    methods = tuple(methods or suite.methods)
    out = Path(out_dir) if out_dir is not None else None
    rows: list[MetricsRow] = []
    for method in methods:
        for sc in scenarios:
            for s in ([seed] if seed is not None else sc.seeds):
                t0 = time.perf_counter()
                res = run_episode(sc, method, s, epsilon, cfg)
                wall = time.perf_counter() - t0
                tf = ""
                if out is not None:
                    tf = str(res.trace.write(out / "traces" / f"{sc.name}-s{s}-{method}.jsonl").relative_to(out))
                row = row_from_outcome(sc, s, method, res, wall, tf)
                rows.append(row)
                if log is not None:
                    log(f"{method:8s} {sc.name} seed {s}: {row.status} actions {row.actions} "
                        f"behaviors {row.behaviors} grasps {row.grasps} ({wall:.1f}s)")
    stats = {m: method_stats([r for r in rows if r.method == m]) for m in methods}
    gates = [g.evaluate(stats) for g in suite.gates]
    result = SuiteResult(suite, rows, stats, gates)
    if out is not None:
        write_outputs(result, out)
    return result


TABLE_ROWS = (("Plan-BE (s)", "plan_be_s"), ("Plan-AE (s)", "plan_ae_s"), ("Sense-AE (s)", "sense_ae_s"),
              ("Exec (s)", "exec_s"), ("Total (s)", "total_s"), ("#Actions", "actions"),
              ("#Behaviors", "behaviors"), ("#Grasps", "grasps"), ("Success", "success"))


def table(rows: list[MetricsRow]) -> tuple[list[str], list[list[str]]]:
    """One column per problem plus a Mean column, one row per metric."""
    cols = [f"{r.scenario}/s{r.seed}" for r in rows]
    body = []
    for label, key in TABLE_ROWS:
        vals = [getattr(r, key) for r in rows]
        if key == "success":
            cells = ["yes" if v else "no" for v in vals]
            mean = f"{sum(vals)}/{len(vals)}" if vals else ""
        elif key in ("actions", "behaviors", "grasps"):
            cells = [str(v) for v in vals]
            mean = f"{np.mean(vals):.1f}" if vals else ""
        else:
            cells = [f"{v:.2f}" for v in vals]
            mean = f"{np.mean(vals):.2f}" if vals else ""
        body.append([label] + cells + [mean])
    return ["Metric"] + cols + ["Mean"], body


def table_csv(rows: list[MetricsRow]) -> str:
    head, body = table(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head)
    w.writerows(body)
    return buf.getvalue()


def table_markdown(rows: list[MetricsRow]) -> str:
    head, body = table(rows)
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    lines += ["| " + " | ".join(r) + " |" for r in body]
    return "\n".join(lines) + "\n"


def write_outputs(result: SuiteResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    fields = list(MetricsRow.__dataclass_fields__)
    with open(out / "metrics.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in result.rows:
            w.writerow(asdict(r))
    md = [f"# {result.suite.name}", ""]
    for m in result.stats:
        rows = [r for r in result.rows if r.method == m]
        (out / f"table-{m}.csv").write_text(table_csv(rows))
        md += [f"## {m}", "", table_markdown(rows)]
    md += ["## Gates", ""] + [f"- {g.line()}" for g in result.gates] + [""]
    (out / "summary.md").write_text("\n".join(md))
    report = {"suite": result.suite.name, "passed": result.passed, "stats": result.stats,
              "gates": [asdict(g) for g in result.gates]}
    (out / "gates.yaml").write_text(yaml.safe_dump(report, sort_keys=False))
