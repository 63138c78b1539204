import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from adoptpaths.ati import (DegenerateRegion, Intersection, ati_from_parts,
                            compute_ati, compute_auc, compute_region_ati, crossings,
                            feedback_factor, find_intersections, zero_result)
from adoptpaths.curves import LINEAR, polynomial
from adoptpaths.dataset import RegionDataset
from adoptpaths.synthetic import archetype_region
from randomcurves import FAMILIES, curve, random_curve, scaled

LIN = lambda a, b: curve(LINEAR, [a, b])
QUAD = lambda c: curve(polynomial(2), [0.0, 0.0, c])


def test_auc_examples():
    assert compute_auc(LIN(0, 1)) == 50.0
    assert compute_auc(QUAD(0.2)) == pytest.approx(200 / 3, rel=1e-15)
    assert compute_auc(LIN(0, 0)) == 0.0


def test_auc_of_window():
    assert compute_auc(QUAD(0.2), 0, 5) == pytest.approx(25 / 3, rel=1e-14)
    with pytest.raises(ValueError):
        compute_auc(LIN(0, 1), 4, 4)


@pytest.mark.parametrize("family", FAMILIES, ids=str)
def test_auc_against_dense_trapezoid(family):
    c = random_curve(np.random.default_rng(42), family)
    x = np.linspace(0, 10, 100_001)
    assert compute_auc(c) == pytest.approx(np.trapezoid(c.value(x), x), rel=1e-6)


def test_intersection_examples():
    pts = find_intersections(QUAD(0.2), LIN(0, 1))
    assert len(pts) == 1 and pts[0].t == pytest.approx(5.0, abs=1e-8) and pts[0].alpha_sign == 1
    assert find_intersections(LIN(1, 1), LIN(0, 1)) == []
    pts = find_intersections(QUAD(0.25), LIN(0, 2))
    assert len(pts) == 1 and pts[0].t == pytest.approx(8.0, abs=1e-8) and pts[0].alpha_sign == 1


def test_downward_crossing_sign():
    pts = find_intersections(LIN(0, 2), QUAD(0.25))
    assert [p.alpha_sign for p in pts] == [-1]


def test_tangent_crossing_uses_probe():
    # cubic (t-5)^3 + 5 crosses the line y = 5 with zero relative slope at t = 5
    c = curve(polynomial(3), [-120.0, 75.0, -15.0, 1.0])
    pts = find_intersections(c, LIN(5, 0))
    assert len(pts) == 1 and pts[0].t == pytest.approx(5.0, abs=1e-3) and pts[0].alpha_sign == 1


def test_identical_curves_are_coincident_not_crossing():
    pts, coincident = crossings(LIN(0, 1), LIN(0, 1))
    assert pts == [] and coincident


@pytest.mark.parametrize("alpha, delta, s", [(1, 33.3, 0), (-1, 33.3, 1), (1, -16.7, 1),
                                             (-1, -16.7, 0)])
def test_feedback_factor(alpha, delta, s):
    assert feedback_factor(alpha, delta) == s


def test_penalty_case():
    r = compute_ati(QUAD(0.2), LIN(0, 1), 50.0)
    assert r.a_norm == pytest.approx(400 / 3, rel=1e-14)
    assert r.feedback_initial == pytest.approx(5.0, abs=1e-8) and r.feedback_terms == (0.0,)
    assert r.ati == pytest.approx(350 / 3, abs=1e-6)


def test_reward_case():
    r = compute_ati(QUAD(0.25), LIN(0, 2), 100.0)
    assert r.a_norm == pytest.approx(250 / 3, rel=1e-14)
    assert r.feedback_initial == 0.0 and r.feedback_terms[0] == pytest.approx(2.0, abs=1e-8)
    assert r.ati == pytest.approx(260 / 3, abs=1e-6)


def test_hand_examples_are_fast():
    start = time.perf_counter()
    compute_ati(QUAD(0.2), LIN(0, 1), 50.0)
    compute_ati(QUAD(0.25), LIN(0, 2), 100.0)
    assert time.perf_counter() - start < 1.0


def test_no_crossing_keeps_normalized_area():
    m = LIN(0, 1)
    r = compute_ati(scaled(m, 1.2), m, compute_auc(m))
    assert r.intersections == () and r.ati == r.a_norm == pytest.approx(120.0, rel=1e-14)


def test_zero_delta_ignores_crossings():
    r = ati_from_parts(50.0, 50.0, [Intersection(3.0, 1), Intersection(6.0, -1)], 0.0, 10.0)
    assert r.ati == 100.0 and r.feedback_terms == ()


def test_mean_area_must_be_positive():
    with pytest.raises(DegenerateRegion):
        ati_from_parts(1.0, 0.0, [], 0.0, 1.0)


def test_zero_result():
    r = zero_result("z", (0.0, 10.0))
    assert r.ati == 0.0 and r.a_norm == 0.0 and r.n_intersections == 0


T11 = np.arange(11.0)


def test_two_identical_entities_score_100():
    ds = RegionDataset.from_arrays(T11, {"a": 3 + 2 * T11, "b": 3 + 2 * T11})
    assert [r.ati for r in compute_region_ati(ds).results] == [pytest.approx(100.0)] * 2


def test_entity_equal_to_mean_scores_100():
    ds = RegionDataset.from_arrays(T11, {"a": T11, "b": 2 * T11, "c": 1.5 * T11})
    r = compute_region_ati(ds).by_id()["c"]
    assert r.delta == pytest.approx(0.0, abs=1e-12) and r.ati == pytest.approx(100.0, abs=1e-12)


def test_four_entity_region_by_hand():
    # mean is 1.5 t; crossings of the two quadratics sit at t = 7.5
    ds = RegionDataset.from_arrays(T11, {
        "a": 0.2 * T11 ** 2, "b": T11, "c": 2 * T11, "d": 3 * T11 - 0.2 * T11 ** 2})
    region = compute_region_ati(ds)
    assert region.mean_curve.family == LINEAR
    got = {r.entity_id: r.ati for r in region.results}
    expected = {"a": 800 / 9 + 0.25 * 100 / 9, "b": 200 / 3, "c": 400 / 3,
                "d": 1000 / 9 - 0.25 * 100 / 9}
    for k, v in expected.items():
        assert got[k] == pytest.approx(v, abs=1e-6), k
    by = region.by_id()
    assert [x.alpha_sign for x in by["a"].intersections] == [1]
    assert [x.alpha_sign for x in by["d"].intersections] == [-1]


def test_zero_entity_scores_zero():
    ds = RegionDataset.from_arrays(T11, {"a": T11, "z": np.zeros(11)})
    assert compute_region_ati(ds).by_id()["z"] == zero_result("z", (0.0, 10.0))


def test_mean_curve_normalizes_to_100():
    region = compute_region_ati(archetype_region())
    assert compute_auc(region.mean_curve) / region.a_m * 100 == pytest.approx(100.0, abs=1e-9)


def dense_roots(ci, cm, n=1_000_001, edge=1e-6):
    x = np.linspace(0.0, 10.0, n)
    g = ci.value(x) - cm.value(x)
    s = np.sign(g)
    k = np.nonzero(s[:-1] * s[1:] < 0)[0]
    roots = x[k] - g[k] * (x[k + 1] - x[k]) / (g[k + 1] - g[k])
    return roots[(roots > edge * 10) & (roots < 10 - edge * 10)]


def test_intersections_against_dense_sign_scan():
    rng = np.random.default_rng(2024)
    for _ in range(25):
        ci, cm = random_curve(rng), random_curve(rng)
        got = np.array([p.t for p in find_intersections(ci, cm)])
        ref = dense_roots(ci, cm)
        assert got.shape == ref.shape
        np.testing.assert_allclose(got, ref, atol=1e-6 * 10)


@given(st.floats(0.0, 400.0), st.lists(st.floats(0.01, 9.99), max_size=6, unique=True),
       st.sampled_from([1, -1]))
def test_ati_stays_between_normalized_area_and_mean(a_i, times, first_sign):
    pts = [Intersection(t, first_sign * (-1) ** k) for k, t in enumerate(sorted(times))]
    r = ati_from_parts(a_i, 100.0, pts, 0.0, 10.0)
    lo, hi = sorted((r.a_norm, 100.0))
    assert lo - 1e-9 <= r.ati <= hi + 1e-9
    assert math.copysign(1, r.ati - 100) == math.copysign(1, r.a_norm - 100) or r.ati == 100
    assert 0.0 <= r.feedback_duration <= 10.0 + 1e-12
