import numpy as np
import pytest

from adoptpaths.ati import compute_auc, compute_region_ati
from adoptpaths.dataset import RegionDataset, load_region
from adoptpaths.features import extract_features
from adoptpaths.pipeline import analyze
from adoptpaths.synthetic import archetype_region
from adoptpaths.transitions import (TransitionRecord, classify_half, magnitude_distribution,
                                    path_median_curves, split_features, transition_matrix,
                                    transition_records)
from adoptpaths.typology import PATH_ORDER, Path, PathAssignment
from randomcurves import random_curve

T11 = np.arange(11.0)


def rec(i, a, b):
    return TransitionRecord(f"e{i}", a, b)


def test_entity_equal_to_mean_is_unchanged():
    ds = RegionDataset.from_arrays(T11, {"a": T11, "b": 2 * T11, "c": 1.5 * T11})
    an = analyze(ds)
    for half in an.halves:
        c = {r.entity_id: r for r in half.ati}["c"]
        assert c.ati == pytest.approx(100.0, abs=1e-9)
    r = {x.entity_id: x for x in an.records}["c"]
    assert r.path_first_half is r.path_second_half and r.magnitude == 0


def test_quadratic_halves(data_dir):
    an = analyze(load_region(data_dir / "quadratic.csv"), split_time=5.0)
    h1 = {r.entity_id: r for r in an.halves[0].ati}["convex"]
    h2 = {r.entity_id: r for r in an.halves[1].ati}["convex"]
    # int_0^5 0.2t^2 / int_0^5 t and int_5^10 0.2t^2 / int_5^10 t
    assert h1.a_norm == pytest.approx((25 / 3) / 12.5 * 100, abs=1e-6)
    assert h2.a_norm == pytest.approx((175 / 3) / 37.5 * 100, abs=1e-6)
    # the crossing sits on the split and is interior to neither half
    assert h1.n_intersections == h2.n_intersections == 0
    assert (h1.ati, h2.ati) == (h1.a_norm, h2.a_norm)


def test_zero_entity_is_non_adopting_in_both_halves():
    ds = RegionDataset.from_arrays(T11, {"a": T11, "b": 2 * T11, "z": 0 * T11})
    r = {x.entity_id: x for x in analyze(ds).records}["z"]
    assert r.path_first_half is r.path_second_half is Path.NON_ADOPTING


def test_late_starter_is_non_adopter_in_first_half():
    late = np.where(T11 > 6, T11 - 6, 0.0)
    ds = RegionDataset.from_arrays(T11, {"a": T11, "b": 2 * T11, "late": late})
    an = analyze(ds)
    r = {x.entity_id: x for x in an.records}["late"]
    assert r.path_first_half is Path.NON_ADOPTING
    assert r.path_second_half is not Path.NON_ADOPTING


def test_split_outside_domain():
    ds = archetype_region()
    region = compute_region_ati(ds)
    feats = extract_features(ds, region.results, 0.3)
    for s in (0.0, 10.0, -1.0, 12.0):
        with pytest.raises(ValueError):
            split_features(ds, region, feats, s)


def test_default_split_is_midpoint():
    ds = archetype_region()
    region = compute_region_ati(ds)
    h1, h2 = split_features(ds, region, extract_features(ds, region.results, 0.3))
    assert h1.window == (0.0, 5.0) and h2.window == (5.0, 10.0)


def test_second_half_lai_is_full_lai():
    ds = archetype_region()
    region = compute_region_ati(ds)
    feats = extract_features(ds, region.results, 0.3)
    _, h2 = split_features(ds, region, feats)
    for a, b in zip(feats, h2.features):
        assert a.lai == pytest.approx(b.lai, rel=1e-12)
        assert a.entry == b.entry or b.entry.value is None


def test_half_side_preservation():
    ds = archetype_region()
    region = compute_region_ati(ds)
    for half in split_features(ds, region, extract_features(ds, region.results, 0.3)):
        for r in half.ati:
            if r.a_norm == 0:
                continue
            assert np.sign(r.ati - 100) == np.sign(r.a_norm - 100)
            assert abs(r.ati - 100) <= abs(r.a_norm - 100) + 1e-9


def test_designed_matrix():
    records = [rec(i, Path.LAGGING, Path.MODERATE) for i in range(3)]
    records.append(rec(3, Path.LEADING, Path.LEADING))
    m = transition_matrix(records)
    assert m.counts[1, 3] == 3 and m.counts[7, 7] == 1 and m.counts.sum() == 4
    assert m.percentages[1, 3] == 75.0
    assert m.percentages.sum() == pytest.approx(100.0, abs=1e-9)


def test_unchanged_population_is_diagonal():
    records = [rec(i, p, p) for i, p in enumerate(PATH_ORDER)]
    m = transition_matrix(records)
    assert np.array_equal(m.counts, np.eye(8, dtype=np.int64))
    d = magnitude_distribution(records)
    assert d.unchanged == 1.0 and d.counts[0] == 8


def test_empty_matrix():
    m = transition_matrix([])
    assert m.total == 0 and not m.counts.any() and not m.percentages.any()


def test_magnitudes():
    assert rec(0, Path.LEADING, Path.DECLINING_MODERATE).magnitude == -5
    assert rec(0, Path.NON_ADOPTING, Path.LEADING).magnitude == 7
    records = [rec(0, Path.LEADING, Path.DECLINING_MODERATE),
               rec(1, Path.LAGGING, Path.MODERATE), rec(2, Path.MODERATE, Path.MODERATE)]
    d = magnitude_distribution(records)
    assert sorted(d.counts) == list(range(-7, 8))
    assert d.counts[-5] == 1 and d.counts[2] == 1 and d.counts[0] == 1
    assert d.upward + d.downward + d.unchanged == pytest.approx(1.0)


def test_matrix_marginals_match_half_frequencies():
    an = analyze(archetype_region())
    for axis, assignments in ((1, an.half_assignments[0]), (0, an.half_assignments[1])):
        freq = np.zeros(8, dtype=np.int64)
        for a in assignments:
            if a is not None:
                freq[a.path.tier] += 1
        assert np.array_equal(an.matrix.counts.sum(axis=axis), freq)


def test_records_skip_unclassified():
    a = PathAssignment(Path.LAGGING, "x")
    got = transition_records(["p", "q"], [a, None], [a, a])
    assert [r.entity_id for r in got] == ["p"]


def test_median_curves():
    ds = RegionDataset.from_arrays(np.arange(3.0), {
        "a": np.array([1.0, 1.0, 1.0]), "b": np.array([2.0, 2.0, 2.0]),
        "c": np.array([9.0, 9.0, 9.0]), "d": np.array([0.0, 4.0, 5.0])})
    lag = PathAssignment(Path.LAGGING, "x")
    med = path_median_curves(ds, [lag, lag, lag, PathAssignment(Path.LEADING, "y")])
    assert list(med) == [Path.LAGGING, Path.LEADING]
    assert med[Path.LAGGING].tolist() == [2.0, 2.0, 2.0]
    assert med[Path.LEADING].tolist() == [0.0, 4.0, 5.0]


def test_half_auc_additivity():
    rng = np.random.default_rng(11)
    for _ in range(100):
        c = random_curve(rng)
        s = rng.uniform(0.5, 9.5)
        assert compute_auc(c, 0, s) + compute_auc(c, s, 10) == pytest.approx(compute_auc(c),
                                                                            rel=1e-9)


def test_classify_half_returns_profiles_and_paths():
    ds = archetype_region()
    region = compute_region_ati(ds)
    h1, _ = split_features(ds, region, extract_features(ds, region.results, 0.3))
    profiles, paths = classify_half(h1)
    assert len(profiles) == len(paths) == len(ds.ids)
