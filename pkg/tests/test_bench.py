import csv
import json

import pytest
import yaml
from hypothesis import given, settings, strategies as st

from tamper2d.bench.cli import main
from tamper2d.bench.replay import frames, render_text
from tamper2d.bench.runner import run_episode
from tamper2d.bench.scenario import ScenarioInvalid, load_text, shipped_dir, validate
from tamper2d.bench.suite import Gate, MetricsRow, Suite, load_suite, method_stats, run_suite, table
from tamper2d.trace import SchemaMismatch, Trace, TruncationError

SHIPPED = sorted(shipped_dir().glob("[hkg]*/*.yaml"))


def raw(name="horizontal/horizontal-01.yaml"):
    return yaml.safe_load((shipped_dir() / name).read_text())


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.stem)
def test_shipped_scenarios_validate(path):
    assert validate(path) == []


def test_overlap_diagnostic_names_both_ids():
    d = raw()
    d["objects"][1]["pose"] = list(d["objects"][2]["pose"])
    with pytest.raises(ScenarioInvalid) as ei:
        load_text(yaml.safe_dump(d, sort_keys=False), "bad.yaml")
    msgs = [str(x) for x in ei.value.diagnostics]
    hit = [m for m in msgs if "overlap" in m and "M" in m and "L" in m]
    assert hit, msgs
    assert all(x.line is not None for x in ei.value.diagnostics)


def test_unreachable_goal_diagnostic():
    d = raw()
    # S may never be placed in its goal region
    d["task"]["place_regions"]["S"] = ["buffer", "start"]
    with pytest.raises(ScenarioInvalid) as ei:
        load_text(yaml.safe_dump(d, sort_keys=False))
    assert any(x.message == "goal unreachable ignoring geometry" for x in ei.value.diagnostics)


def test_home_collision_and_schema_diagnostics():
    d = raw()
    d["objects"][0]["pose"] = [0.0, -0.2, 0.0]
    with pytest.raises(ScenarioInvalid) as ei:
        load_text(yaml.safe_dump(d, sort_keys=False))
    assert any(x.path == "workspace.arm.home" for x in ei.value.diagnostics)
    d = raw()
    d["version"] = 99
    with pytest.raises(ScenarioInvalid):
        load_text(yaml.safe_dump(d))
    with pytest.raises(ScenarioInvalid) as ei:
        load_text("schema: [unclosed")
    assert ei.value.diagnostics[0].line is not None


@pytest.fixture(scope="module")
def grocery_run(grocery):
    return run_episode(grocery, "tamper", 0)


def test_trace_round_trip(grocery_run):
    t = grocery_run.trace
    back = Trace.from_jsonl(t.to_jsonl())
    assert back.header == t.header and back.events == t.events
    assert back.to_jsonl() == t.to_jsonl()


def test_truncated_and_foreign_traces(grocery_run, tmp_path):
    text = grocery_run.trace.to_jsonl()
    lines = text.splitlines(keepends=True)
    with pytest.raises(TruncationError):
        Trace.from_jsonl("".join(lines[:-3]))
    with pytest.raises(TruncationError):
        Trace.from_jsonl(text[: len(text) // 2])
    with pytest.raises(TruncationError):
        Trace.from_jsonl("")
    head = json.loads(lines[0])
    head["version"] = 2
    with pytest.raises(SchemaMismatch):
        Trace.from_jsonl(json.dumps(head) + "\n" + "".join(lines[1:]))


def test_replay_frames(grocery_run):
    fr = frames(grocery_run.trace)
    assert len(fr) == len(grocery_run.trace.events)
    assert all(f.world is not None for f in fr[1:])
    assert len(render_text(grocery_run.trace)) == len(fr) + 1


@settings(max_examples=100)
@given(*[st.floats(0, 1e3, allow_nan=False) for _ in range(4)])
def test_metrics_additivity(a, b, c, d):
    r = MetricsRow("x", 0, "tamper", "Success", True, 1, 0, 1, a, b, c, d)
    assert r.total_s == a + b + c + d


def test_timing_buckets(grocery_run, horizontal):
    m = grocery_run.metrics
    assert m.plan_be_s > 0 and m.exec_s > 0
    tamp = run_episode(horizontal, "tamp", 0)
    # open-loop execution: no planning or sensing after the first motion
    assert tamp.metrics.plan_ae_s == 0.0


def test_gates():
    stats = {"tamper": {"mean_grasps": 4.0, "success_rate": 1.0}, "baseline": {"mean_grasps": 5.5}}
    assert Gate.from_dict({"stat": "mean_grasps", "lhs": "tamper", "rhs": "baseline", "op": "<=",
                           "offset": -1.0}).evaluate(stats).passed
    assert not Gate.from_dict({"stat": "mean_grasps", "lhs": "tamper", "rhs": "baseline", "op": "<=",
                               "offset": -2.0}).evaluate(stats).passed
    assert Gate.from_dict({"stat": "success_rate", "method": "tamp", "value": 1}).evaluate(stats).passed is None
    for bad in ({"stat": "nope", "method": "tamper", "value": 1},
                {"stat": "runs", "op": "!=", "method": "tamper", "value": 1},
                {"stat": "runs", "value": 1}):
        with pytest.raises(ValueError):
            Gate.from_dict(bad)


def test_empty_suite(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("schema: tamper2d-suite\nversion: 1\nname: empty\nscenarios: []\n")
    res = run_suite(load_suite(p), tmp_path / "out")
    assert res.rows == [] and res.passed
    head, body = table(res.rows)
    assert head == ["Metric", "Mean"]
    assert method_stats([])["runs"] == 0
    assert main(["run", str(p), "--quiet"]) == 0


def test_cli_validate(tmp_path, capsys):
    assert main(["validate", *map(str, SHIPPED)]) == 0
    d = raw()
    d["objects"][1]["pose"] = list(d["objects"][2]["pose"])
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump(d, sort_keys=False))
    assert main(["validate", str(bad)]) == 1
    out = capsys.readouterr().out
    assert "objects M and L overlap" in out and "line " in out
    assert main(["validate", str(tmp_path / "missing.yaml")]) == 1


def test_cli_run_and_replay(tmp_path, capsys):
    out = tmp_path / "g"
    assert main(["run", "grocery", "--seed", "0", "--out", str(out), "--quiet"]) == 0
    text = capsys.readouterr().out
    assert "PASS tamper solves all seeds" in text
    rows = list(csv.DictReader(open(out / "metrics.csv")))
    assert len(rows) == 1 and rows[0]["success"] == "True"
    for r in rows:
        parts = sum(float(r[k]) for k in ("plan_be_s", "plan_ae_s", "sense_ae_s", "exec_s"))
        assert float(r["total_s"]) == pytest.approx(parts, abs=1e-9)
    assert (out / "table-tamper.csv").exists() and (out / "summary.md").exists()
    assert yaml.safe_load((out / "gates.yaml").read_text())["passed"] is True
    trace = out / rows[0]["trace_file"]
    n = len(Trace.read(trace).events)
    assert main(["replay", str(trace)]) == 0
    assert capsys.readouterr().out.strip().endswith(f"{n} events")
    cut = tmp_path / "cut.jsonl"
    cut.write_text("".join(trace.read_text().splitlines(keepends=True)[:5]))
    assert main(["replay", str(cut)]) == 2


def test_cli_errors(capsys):
    assert main(["run", "no-such-suite"]) == 2
    with pytest.raises(SystemExit):
        main(["run", "grocery", "--epsilon", "2"])
    with pytest.raises(SystemExit):
        main(["run", "grocery", "--method", "magic"])


def test_failing_gate_gives_exit_1(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text(yaml.safe_dump({
        "schema": "tamper2d-suite", "version": 1, "name": "strict", "methods": ["tamper"],
        "scenarios": [str(shipped_dir() / "grocery" / "grocery.yaml")],
        "gates": [{"name": "impossible", "method": "tamper", "stat": "max_behavior_grasps", "op": "<", "value": 0}],
    }))
    assert main(["run", str(p), "--seed", "1", "--quiet"]) == 1
