"""Acceptance criteria 1-10, one PASS/FAIL line each in the terminal summary."""

import json
import time

import numpy as np
import pytest

from tamper2d.belief import BeliefState, fuse, occupied
from tamper2d.bench.audit import constraint_audit, rule_audit
from tamper2d.bench.runner import run_episode
from tamper2d.bench.scenario import load, shipped_dir
from tamper2d.bench.suite import load_suite, resolve_suite, run_suite
from tamper2d.executor import _execute_partial
from tamper2d.geometry import points_in_polygon, polygon_area, shrink_polygon
from tamper2d.grounding import ProjectedWorld
from tamper2d.motion import PLAN_RESOLUTION, Trajectory, dense_valid, densify
from tamper2d.task import Constraint, NoPlanExists, PlanQuery, plan, validate_plan
from tamper2d.trace import Trace
from tamper2d.world import Simulator

from oracles import bfs_oracle, random_domain
from scenes import Q_A, Q_DISP, Scripted, certify_doubly_unreachable, observable_scenario, partial, scene

EPSILONS = (0.0, 0.3, 0.6, 1.0)


def timed_suite(name, tmp_path_factory):
    out = tmp_path_factory.mktemp(name)
    t0 = time.perf_counter()
    res = run_suite(load_suite(resolve_suite(name)), out)
    return res, time.perf_counter() - t0, out


@pytest.fixture(scope="module")
def horizontal_suite(tmp_path_factory):
    return timed_suite("horizontal", tmp_path_factory)


@pytest.fixture(scope="module")
def kitchen_suite(tmp_path_factory):
    return timed_suite("kitchen", tmp_path_factory)


@pytest.fixture(scope="module")
def grocery_suite(tmp_path_factory):
    return timed_suite("grocery", tmp_path_factory)


def rows(res, method):
    return [r for r in res.rows if r.method == method]


def test_criterion_1_horizontal(horizontal_suite, verdict):
    res = horizontal_suite[0]
    t, b = rows(res, "tamper"), rows(res, "baseline")
    st, sb = res.stats["tamper"], res.stats["baseline"]
    ok = (len(t) == 10 and len(b) == 10 and all(r.success for r in t) and all(r.success for r in b)
          and st["mean_grasps"] <= sb["mean_grasps"] - 1.0)
    detail = (f"tamper {sum(r.success for r in t)}/10, baseline {sum(r.success for r in b)}/10, "
              f"mean grasps {st['mean_grasps']:.1f} vs {sb['mean_grasps']:.1f}")
    assert verdict("1", ok, detail)


def test_criterion_1_runtime(horizontal_suite, verdict):
    wall = horizontal_suite[1]
    assert verdict("1.runtime", wall < 60.0, f"horizontal suite took {wall:.1f} s (expected < 60 s)")


def test_criterion_2_kitchen(kitchen_suite, verdict):
    res = kitchen_suite[0]
    t, b = rows(res, "tamper"), rows(res, "baseline")
    causes = [r.failure_cause for r in b if not r.success]
    ok = (len(t) == 10 and len(b) == 10 and all(r.success for r in t) and not any(r.success for r in b)
          and all(c == "post-push" for c in causes))
    detail = (f"tamper {sum(r.success for r in t)}/10, baseline {sum(r.success for r in b)}/10, "
              f"post-push failures {causes.count('post-push')}/{len(causes)}")
    assert verdict("2", ok, detail)


def test_criterion_2_runtime(kitchen_suite, verdict):
    wall = kitchen_suite[1]
    assert verdict("2.runtime", wall < 120.0, f"kitchen suite took {wall:.1f} s (expected < 120 s)")


def test_criterion_3_counts(horizontal_suite, kitchen_suite, verdict):
    h, k = horizontal_suite[0].stats["tamper"], kitchen_suite[0].stats["tamper"]
    checks = [
        abs(h["mean_actions"] - 9.2) <= 2, abs(k["mean_actions"] - 8.4) <= 2,
        abs(h["mean_behaviors"] - 1.1) <= 1, abs(k["mean_behaviors"] - 2.3) <= 1,
    ]
    detail = (f"actions {h['mean_actions']:.1f} (9.2±2) / {k['mean_actions']:.1f} (8.4±2), "
              f"behaviors {h['mean_behaviors']:.1f} (1.1±1) / {k['mean_behaviors']:.1f} (2.3±1)")
    assert verdict("3", all(checks), detail)


def test_criterion_4_reduction(verdict):
    sc = observable_scenario()
    same, n = 0, 0
    for seed in (0, 1, 2):
        assert set(Simulator(sc.world(seed), seed).sense().detected) == {o.id for o in sc.objects}
        a = run_episode(sc, "tamp", seed)
        b = run_episode(sc, "tamper", seed, behaviors={})
        pa = json.dumps(a.plans, sort_keys=True).encode()
        pb = json.dumps(b.plans, sort_keys=True).encode()
        n += 1
        same += a.success and b.success and pa == pb and a.world == b.world
    assert verdict("4", same == n, f"{same}/{n} seeds with identical plans and final world")


def test_criterion_5_planner_minimality(verdict):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    agree = 0
    for _ in range(100):
        dom, init, goal = random_domain(rng)
        expect = bfs_oracle(dom, init, goal)
        try:
            p = plan(PlanQuery(init, goal, horizon_limit=64), dom)
            agree += expect == len(p) and not validate_plan(p, init, goal, dom.constraints)
        except NoPlanExists:
            agree += expect is None
    wall = time.perf_counter() - t0
    assert verdict("5", agree == 100 and wall < 30.0, f"{agree}/100 match the BFS oracle in {wall:.2f} s")


def recorded(suite):
    """(scenario, row, trace read back from disk) for every run of a suite."""
    res, _, out = suite
    scenarios = {sc.name: sc for sc in map(load, res.suite.scenarios)}
    for r in res.rows:
        yield scenarios[r.scenario], r, Trace.read(out / r.trace_file)


def test_criterion_6_constraint_audit(horizontal_suite, kitchen_suite, grocery_suite, verdict):
    total = asserted = bad = 0
    for suite in (horizontal_suite, kitchen_suite, grocery_suite):
        for sc, _, tr in recorded(suite):
            total += 1
            asserted += len(tr.of("constraint"))
            bad += len(constraint_audit(tr, sc.domain()))
    assert verdict("6", bad == 0 and asserted > 0,
                   f"{bad} violations over {total} traces ({asserted} constraints asserted)")


def shadow_scenes():
    for rel in ("horizontal/horizontal-01.yaml", "kitchen/kitchen-01.yaml", "grocery/grocery.yaml"):
        sc = load(shipped_dir() / rel)
        b = fuse(sc.belief(), Simulator(sc.world(0), 0).sense())
        yield sc, b


def test_criterion_7_occlusion_model(verdict):
    rng = np.random.default_rng(77)
    mono = extremes = True
    n_queries = 0
    for sc, b in shadow_scenes():
        assert b.shadows
        bs = [BeliefState(b.workspace, {}, frozenset(), b.shadows, epsilon=e) for e in EPSILONS]
        lo, hi = np.array(sc.workspace.bounds[:2]), np.array(sc.workspace.bounds[2:])
        for q in rng.uniform(lo, hi, size=(1000, 2)):
            occ = [occupied(x, q) for x in bs]
            mono &= all(b2 or not a for a, b2 in zip(occ, occ[1:]))
            n_queries += 1
        for _, poly in b.shadows:
            poly = np.asarray(poly)
            pts = rng.uniform(poly.min(axis=0), poly.max(axis=0), size=(400, 2))
            pts = pts[points_in_polygon(pts, poly)]
            extremes &= all(occupied(bs[-1], p) for p in pts)
            extremes &= not any(occupied(bs[0], p) for p in pts)
    unit = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    area = polygon_area(shrink_polygon(unit, 0.6))
    ok = mono and extremes and abs(area - 0.36) <= 1e-9
    detail = (f"monotone over {n_queries} queries: {mono}, extremes: {extremes}, "
              f"unit-square area at 0.6: {area:.12f}")
    assert verdict("7", ok, detail)


def test_criterion_8_determinism(horizontal_suite, kitchen_suite, grocery_suite, verdict):
    picks = [("horizontal-01", 0, "tamper"), ("horizontal-02", 1, "baseline"), ("kitchen-01", 0, "tamper"),
             ("kitchen-03", 2, "baseline"), ("grocery", 3, "tamper")]
    same = 0
    for suite in (horizontal_suite, kitchen_suite, grocery_suite):
        out = suite[2]
        for sc, r, _ in recorded(suite):
            if (r.scenario, r.seed, r.method) in picks:
                same += run_episode(sc, r.method, r.seed).trace.to_jsonl() == (out / r.trace_file).read_text()
    assert verdict("8", same == len(picks), f"{same}/{len(picks)} reruns byte-identical "
                                             f"(incl. push-noise kitchen runs)")


def test_criterion_9_repair_contract(verdict):
    ep = scene(False, Scripted(Q_DISP))
    pp, s0 = partial(ep)
    ep.sim.execute_trajectory(partial_bridge(ep))
    prims = ep.repair(pp.steps[1])
    first = pp.steps[1].prims[0].traj
    model = ProjectedWorld(ep.belief, Q_DISP).model()
    ok_a = prims is not None
    if ok_a:
        traj = prims[0].traj
        k = len(traj.waypoints) - len(first.waypoints)
        ok_a = (ep.trace.of("repair")[-1]["mode"] == "start" and np.allclose(traj.start, Q_DISP)
                and np.allclose(traj.waypoints[k], Q_A) and np.array_equal(traj.waypoints[k:], first.waypoints)
                and traj.max_step() <= PLAN_RESOLUTION + 1e-12 and dense_valid(traj, model))

    ep = scene(True, Scripted())
    certified = certify_doubly_unreachable(ep)
    pp, s0 = partial(ep)
    s = _execute_partial(ep, pp, s0)
    cons = ep.trace.of("constraint")
    ok_b = certified and [e["mode"] for e in ep.trace.of("repair")] == ["failed"] and len(cons) == 1
    if ok_b:
        tp = ep.task_plan(s, ep.task.goal_literals())
        ok_b = tp is not None and not validate_plan(tp, s, ep.task.goal_literals(), [Constraint.from_dict(cons[0])])
    assert verdict("9", ok_a and ok_b, f"displacement: chained, densely valid, rejoins start: {ok_a}; "
                                       f"doubly unreachable: one constraint, respected next: {ok_b}")


def partial_bridge(ep):
    return Trajectory(densify(np.array([ep.sim.robot_config, Q_DISP])))


def ground_truth_order(sc, seed, tr):
    """Event indices at which each bag label first rests inside the cart."""
    cart = sc.workspace.region("cart").polygon()
    labels = {o.id: o.label for o in sc.world(seed).objects}
    first = {}
    for e in tr.events:
        w = e.get("world")
        if not w:
            continue
        for oid, pose in w["objects"].items():
            if oid != w["held"] and points_in_polygon(np.array([pose[:2]]), cart)[0]:
                first.setdefault(labels[oid], e["i"])
    return first


def test_criterion_10_grocery(grocery_suite, verdict):
    runs = ok_runs = 0
    max_grasps = 0
    for sc, r, tr in recorded(grocery_suite):
        runs += 1
        pickid = [e["grasp_count"] for e in tr.of("behavior") if e["action"].startswith("PickId(")]
        max_grasps = max([max_grasps] + pickid)
        order = ground_truth_order(sc, r.seed, tr)
        dom = sc.domain()
        rules = not rule_audit(tr, dom, dom.state(sc.task.init_vars()))
        ok_runs += (r.success and bool(pickid) and max(pickid) <= 2 and rules
                    and order.get("apples", np.inf) < order.get("eggs", np.inf) < np.inf)
    assert verdict("10", runs == 5 and ok_runs == 5,
                   f"{ok_runs}/{runs} seeds solved with apples in the cart before eggs, max PickId grasps {max_grasps}")
