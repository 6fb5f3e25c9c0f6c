from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from shapely.geometry import Point, Polygon

from tamper2d.belief import BeliefState, Observation, fuse, occupied, shrink_region
from tamper2d.geometry import (
    ConvexSet,
    DegeneratePolygon,
    points_in_polygon,
    polygon_area,
    polygon_centroid,
    rect_corners,
    shadow_polygon,
    shrink_polygon,
)

UNIT = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
EPSILONS = (0.0, 0.3, 0.6, 1.0)


def test_unit_square_shrink_area():
    assert abs(polygon_area(shrink_polygon(UNIT, 0.6)) - 0.36) <= 1e-9


def test_centroid_matches_shapely():
    rng = np.random.default_rng(3)
    for _ in range(50):
        pts = rng.uniform(-1, 1, size=(12, 2))
        hull = np.asarray(Polygon(pts).convex_hull.exterior.coords)[:-1]
        c = Polygon(hull).centroid
        assert np.allclose(polygon_centroid(hull), [c.x, c.y], atol=1e-12)
        assert abs(polygon_area(hull) - Polygon(hull).area) < 1e-12


def test_degenerate_polygon():
    with pytest.raises(DegeneratePolygon):
        shrink_region([[0, 0], [1, 1], [2, 2]], 0.5)
    with pytest.raises(ValueError):
        shrink_polygon(UNIT, 1.5)


def test_point_in_polygon_matches_shapely():
    rng = np.random.default_rng(4)
    poly = rect_corners(0.1, -0.2, 0.7, 0.3, 0.15)
    pts = rng.uniform(-0.6, 0.6, size=(2000, 2))
    ours = points_in_polygon(pts, poly)
    ref = np.array([Polygon(poly).buffer(1e-12).contains(Point(p)) for p in pts])
    assert np.array_equal(ours, ref)


def test_segment_hits_dense_oracle():
    rng = np.random.default_rng(8)
    polys = [rect_corners(*rng.uniform(-0.5, 0.5, 2), rng.uniform(0, 3), 0.1, 0.05) for _ in range(5)]
    cs = ConvexSet(polys)
    for _ in range(300):
        a, b = rng.uniform(-0.8, 0.8, size=(2, 2))
        got = cs.segment_hits(a[None], b[None])[0]
        dense = a + np.linspace(0, 1, 4001)[:, None] * (b - a)
        want = np.array([points_in_polygon(dense, p).any() for p in polys])
        # a dense sample can only miss a grazing hit
        assert np.all(got | ~want)


def test_shadow_lies_behind_occluder():
    cam = (0.0, -0.35)
    occ = rect_corners(0.0, 0.3, 0.0, 0.1, 0.05)
    sh = shadow_polygon(cam, occ, (-1, -0.3, 1, 0.8))
    assert sh is not None
    rng = np.random.default_rng(1)
    pts = rng.uniform([-1, -0.3], [1, 0.8], size=(3000, 2))
    inside = points_in_polygon(pts, sh) & ~points_in_polygon(pts, occ)
    cs = ConvexSet([occ])
    hits = cs.segment_hits(np.repeat(np.asarray(cam)[None], len(pts), 0), pts)[:, 0]
    assert np.all(hits[inside])


def belief_with_shadow(ws, poly, eps):
    return BeliefState(ws, {}, frozenset(), (("occ", tuple(map(tuple, poly))),), epsilon=eps)


@pytest.fixture(scope="module")
def ws(horizontal):
    return horizontal.workspace


def random_queries(n, seed):
    return np.random.default_rng(seed).uniform(-1, 1, size=(n, 2))


def test_epsilon_monotone_on_1000_queries(ws):
    rng = np.random.default_rng(7)
    poly = shadow_polygon((0.0, -0.35), rect_corners(0.1, 0.2, 0.3, 0.08, 0.05), ws.bounds)
    bs = [belief_with_shadow(ws, poly, e) for e in EPSILONS]
    for q in rng.uniform([-1, -0.3], [1, 0.8], size=(1000, 2)):
        occ = [occupied(b, q) for b in bs]
        assert all(not a or b for a, b in zip(occ, occ[1:])), occ


def test_epsilon_extremes(ws):
    poly = shadow_polygon((0.0, -0.35), rect_corners(0.1, 0.2, 0.3, 0.08, 0.05), ws.bounds)
    pts = np.random.default_rng(2).uniform([-1, -0.3], [1, 0.8], size=(2000, 2))
    shadow_pts = pts[points_in_polygon(pts, poly)]
    assert len(shadow_pts) > 20
    full = belief_with_shadow(ws, poly, 1.0)
    none = belief_with_shadow(ws, poly, 0.0)
    assert all(occupied(full, p) for p in shadow_pts)
    assert not any(occupied(none, p) for p in shadow_pts)
    assert none.occlusion_regions() == []


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(0.0, 0.5), st.floats(0, 3.1), st.floats(0.02, 0.15), st.floats(0.02, 0.15),
       st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_shrunk_regions_nest(x, y, th, hx, hy, e1, e2):
    poly = rect_corners(x, y, th, hx, hy)
    lo, hi = sorted((e1, e2))
    if lo == 0.0:
        return
    small = Polygon(shrink_polygon(poly, lo))
    big = Polygon(shrink_polygon(poly, hi))
    assert big.buffer(1e-9).contains(small)
    assert abs(small.area - lo * lo * Polygon(poly).area) < 1e-9


def test_fuse_detect_and_demote(ws):
    ws = replace(ws, shapes={"A": (0.03, 0.03), "B": (0.03, 0.03)})
    b = BeliefState.empty(ws, ["A", "B"])
    b = fuse(b, Observation({"A": (0.5, 0.2, 0.0)}, (), {"A": "apples"}))
    assert set(b.known) == {"A"} and b.unknown == {"B"}
    assert b.resolve("apples") == "A"
    # A not detected while its believed spot is in plain view
    b2 = fuse(b, Observation({}, ()))
    assert "A" in b2.unknown
    b3 = fuse(b, Observation({}, ()), held="A")
    assert "A" in b3.known


def test_belief_round_trip(ws):
    poly = rect_corners(0, 0.3, 0, 0.1, 0.1)
    b = belief_with_shadow(ws, poly, 0.3).with_pose("S", (0.1, 0.2, 0.3))
    d = b.to_dict()
    assert BeliefState.from_dict(ws, d).to_dict() == d


def test_occupied_segment(ws):
    b = BeliefState(ws, {}, frozenset(), (("o", tuple(map(tuple, UNIT * 0.2))),), epsilon=1.0)
    assert occupied(b, [[-0.1, 0.1], [0.3, 0.1]])
    assert not occupied(b, [[-0.1, 0.5], [0.3, 0.5]])
    with pytest.raises(ValueError):
        occupied(b, [1, 2, 3])
