"""Command-line interface.

Every stage reads what earlier stages wrote into the output directory and
writes its own files there, so ``run`` is just the stages in order:

    fit          data.csv, fits.csv
    ati          ati.csv, intersections.csv
    features     features.csv, threshold.csv
    classify     paths.csv, frequencies.csv
    transitions  halves.csv, transitions.csv, matrix.csv, matrix_percent.csv,
                 magnitudes.csv, medians.csv
    stats        stats.csv, wilcoxon.csv

``manifest.json`` collects configuration, library versions, the selected
curve family per entity, the entry threshold and the split time.

Exit codes: 0 success, 1 data error, 2 configuration error or missing
prior-stage file.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, replace
from importlib import metadata
from pathlib import Path as FsPath
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from . import io as fio
from .ati import (QUAD_REL_TOL, AtiResult, DegenerateRegion, Intersection, RegionAti,
                  fit_region, region_ati_from_fits)
from .curves import R2_MIN, CurveFamily, FitError, FittedCurve
from .dataset import DataError, RegionDataset, load_region
from .features import EntryTime, FeatureVector, Trajectory, extract_features, select_entry_threshold
from .pipeline import compare_ati, feature_moments
from .transitions import (classify_half, magnitude_distribution, path_median_curves,
                          split_features, transition_matrix, transition_records)
from .typology import (PATH_ORDER, Path, PathAssignment, build_profiles, classify_profiles,
                       infeasibility, path_frequencies)

UNCLASSIFIED = "unclassified"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    out: FsPath
    input: Optional[str] = None
    threshold_fraction: Union[str, float, None] = None
    r2_min: float = R2_MIN
    selection_mode: str = "adjusted"
    split_time: Union[str, float, None] = None
    quad_rel_tol: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.r2_min < 1.0:
            raise ConfigError(f"--r2-min must be in (0, 1), got {self.r2_min}")
        if self.selection_mode not in ("adjusted", "plain"):
            raise ConfigError(f"--selection-mode must be adjusted or plain, got {self.selection_mode!r}")
        if self.quad_rel_tol is not None and not self.quad_rel_tol > 0:
            raise ConfigError(f"--quad-rel-tol must be > 0, got {self.quad_rel_tol}")
        th = self.threshold_fraction
        if th not in (None, "auto") and not (isinstance(th, float) and 0.0 < th < 1.0):
            raise ConfigError(f"--threshold-fraction must be 'auto' or in (0, 1), got {th!r}")
        if self.split_time not in (None, "mid") and not isinstance(self.split_time, float):
            raise ConfigError(f"--split-time must be 'mid' or a number, got {self.split_time!r}")


# ---------------------------------------------------------------- manifest

def _versions() -> dict:
    out = {"adoptpaths": __version__}
    for pkg in ("numpy", "scipy", "numba"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _update_manifest(out: FsPath, fresh: bool = False, config: Optional[dict] = None, **sections):
    path = out / "manifest.json"
    man = {} if fresh else fio.read_json(path)
    if config:
        man.setdefault("config", {}).update(config)
    man.update(sections)
    fio.write_json(path, man)


def _manifest(out: FsPath) -> dict:
    return fio.read_json(out / "manifest.json")


def _quad_tol(cfg: RunConfig) -> float:
    if cfg.quad_rel_tol is not None:
        return cfg.quad_rel_tol
    return float(_manifest(cfg.out).get("config", {}).get("quad_rel_tol", QUAD_REL_TOL))


# ---------------------------------------------------------------- readers

def _load_data(out: FsPath) -> RegionDataset:
    path = out / "data.csv"
    if not path.is_file():
        raise fio.MissingStageFile(f"missing data.csv in {out}; run the fit stage first")
    return load_region(path)


def _curve_from_row(row: dict) -> FittedCurve:
    params = [float(x) for x in row["params"].split(";")] if row["params"] else []
    return FittedCurve(CurveFamily.parse(row["family"]), np.array(params),
                       float(row["r2"]), float(row["r2_adjusted"]),
                       (float(row["t_first"]), float(row["t_last"])), float(row["sse"]),
                       fio.parse_bool(row["low_fit"]), int(row["n_points"]))


def _read_fits(out: FsPath) -> tuple[FittedCurve, dict[str, FittedCurve]]:
    mean, fits = None, {}
    for row in fio.read_csv(out / "fits.csv"):
        if row["role"] == "mean":
            mean = _curve_from_row(row)
        else:
            fits[row["entity_id"]] = _curve_from_row(row)
    if mean is None:
        raise DataError("fits.csv has no regional mean row")
    return mean, fits


def _read_region(out: FsPath, ds: RegionDataset) -> RegionAti:
    mean, fits = _read_fits(out)
    points: dict[str, list] = {e: [] for e in ds.ids}
    for row in fio.read_csv(out / "intersections.csv"):
        s = row["s_factor"]
        points[row["entity_id"]].append((
            Intersection(float(row["t"]), int(row["alpha_sign"]), None if s == "" else int(s)),
            fio.parse_float(row["feedback_term"])))
    results = []
    for row in fio.read_csv(out / "ati.csv"):
        pts = points[row["entity_id"]]
        terms = tuple(x[1] for x in pts if x[1] is not None)
        results.append(AtiResult(
            row["entity_id"], float(row["a_i"]), float(row["a_norm"]), float(row["delta"]),
            tuple(x[0] for x in pts), float(row["feedback_initial"]), terms, float(row["ati"]),
            (float(row["window_start"]), float(row["window_end"])),
            fio.parse_bool(row["low_fit"]), fio.parse_bool(row["coincident"])))
    a_m = float(_manifest(out).get("regional_mean_area", "nan"))
    return RegionAti(mean, a_m, fits, tuple(results))


def _read_features(out: FsPath) -> list[FeatureVector]:
    return [FeatureVector(row["entity_id"], float(row["ati"]),
                          EntryTime(fio.parse_float(row["entry_time"]),
                                    float(row["threshold_fraction"])),
                          float(row["lai"]), Trajectory(row["trajectory"]),
                          fio.parse_bool(row["low_fit"]))
            for row in fio.read_csv(out / "features.csv")]


def _read_paths(out: FsPath) -> list[Optional[PathAssignment]]:
    return [None if row["path"] == UNCLASSIFIED else PathAssignment(Path(row["path"]), row["rule_id"])
            for row in fio.read_csv(out / "paths.csv")]


# ---------------------------------------------------------------- stages

def stage_fit(cfg: RunConfig) -> None:
    if cfg.input is None:
        raise ConfigError("fit needs an input file")
    src = FsPath(cfg.input)
    if not src.is_file():
        raise ConfigError(f"cannot read input {src}")
    raw = load_region(src)
    cfg.out.mkdir(parents=True, exist_ok=True)
    fio.write_csv(cfg.out / "data.csv", ("entity_id", "time", "time_label", "value"),
                  ((s.entity_id, t, lab, v) for s in raw.series
                   for t, lab, v in zip(raw.axis.points, raw.axis.labels, s.values)))
    ds = _load_data(cfg.out)
    mean, fits = fit_region(ds, cfg.r2_min, cfg.selection_mode)
    header = ("role", "entity_id", "family", "n_params", "params", "r2", "r2_adjusted", "sse",
              "low_fit", "n_points", "t_first", "t_last")

    def row(role, ent, c):
        return (role, ent, str(c.family), c.family.parameter_count,
                ";".join(fio.fmt(p) for p in c.params), c.r2, c.r2_adjusted, c.sse,
                c.low_fit, c.n_points, c.t_first, c.t_last)

    fio.write_csv(cfg.out / "fits.csv", header,
                  [row("mean", "", mean)] + [row("entity", e, fits[e]) for e in ds.ids])
    _update_manifest(
        cfg.out, fresh=True,
        config={"r2_min": cfg.r2_min, "selection_mode": cfg.selection_mode},
        versions=_versions(),
        input={"sha256": fio.sha256_file(src), "entities": len(ds),
               "time_points": len(ds.axis), "time_labels": list(raw.axis.labels)},
        mean_family=str(mean.family),
        families={e: str(fits[e].family) for e in ds.ids},
        low_fit=sorted(e for e in ds.ids if fits[e].low_fit))


def stage_ati(cfg: RunConfig) -> None:
    ds = _load_data(cfg.out)
    mean, fits = _read_fits(cfg.out)
    tol = _quad_tol(cfg)
    region = region_ati_from_fits(ds, mean, fits, tol)
    fio.write_csv(cfg.out / "ati.csv",
                  ("entity_id", "a_i", "a_norm", "delta", "ati", "feedback_initial",
                   "feedback_duration", "n_intersections", "window_start", "window_end",
                   "low_fit", "coincident"),
                  ((r.entity_id, r.a_i, r.a_norm, r.delta, r.ati, r.feedback_initial,
                    r.feedback_duration, r.n_intersections, r.window[0], r.window[1],
                    r.low_fit, r.coincident) for r in region.results))
    rows = []
    for r in region.results:
        for k, x in enumerate(r.intersections):
            term = r.feedback_terms[k] if k < len(r.feedback_terms) else None
            rows.append((r.entity_id, k + 1, x.t, x.alpha_sign, x.s_factor, term))
    fio.write_csv(cfg.out / "intersections.csv",
                  ("entity_id", "index", "t", "alpha_sign", "s_factor", "feedback_term"), rows)
    _update_manifest(cfg.out, config={"quad_rel_tol": tol}, regional_mean_area=region.a_m)


def stage_features(cfg: RunConfig) -> None:
    ds = _load_data(cfg.out)
    region = _read_region(cfg.out, ds)
    sel = select_entry_threshold(ds)
    explicit = isinstance(cfg.threshold_fraction, float)
    fraction = cfg.threshold_fraction if explicit else sel.fraction
    feats = extract_features(ds, region.results, fraction)
    fio.write_csv(cfg.out / "features.csv",
                  ("entity_id", "ati", "entry_time", "threshold_fraction", "lai", "trajectory",
                   "low_fit"),
                  ((f.entity_id, f.ati, f.entry.value, f.entry.threshold_fraction, f.lai,
                    f.trajectory, f.low_fit) for f in feats))
    fio.write_csv(cfg.out / "threshold.csv",
                  ("fraction", "coverage", "n_reached", "mean", "sd", "skewness",
                   "excess_kurtosis", "score", "selected"),
                  ((c.fraction, c.coverage, c.n_reached, c.mean, c.sd, c.skewness,
                    c.excess_kurtosis, c.score, c.fraction == fraction) for c in sel.table))
    _update_manifest(cfg.out, threshold={
        "fraction": fraction, "source": "explicit" if explicit else "auto",
        "auto_fraction": sel.fraction, "auto_forced": sel.forced})


def stage_classify(cfg: RunConfig) -> None:
    if cfg.threshold_fraction is not None:
        stage_features(cfg)
    feats = _read_features(cfg.out)
    profiles = build_profiles(feats)
    assignments = classify_profiles(profiles)
    rows = []
    for f, p, a in zip(feats, profiles, assignments):
        if a is None:
            rows.append((f.entity_id, p.ati, p.entry, p.trajectory, p.lai, UNCLASSIFIED, None,
                         f"infeasible:{infeasibility(p)}"))
        else:
            rows.append((f.entity_id, p.ati, p.entry, p.trajectory, p.lai, a.path, a.path.tier,
                         a.rule_id))
    fio.write_csv(cfg.out / "paths.csv",
                  ("entity_id", "ati_tier", "entry_tier", "trajectory", "lai_tier", "path",
                   "path_tier", "rule_id"), rows)
    freq = path_frequencies(assignments)
    n = sum(freq.values())
    fio.write_csv(cfg.out / "frequencies.csv", ("path", "path_tier", "count", "percent"),
                  ((p, p.tier, freq[p], 100.0 * freq[p] / n if n else 0.0) for p in PATH_ORDER))
    _update_manifest(cfg.out, unclassified=[f.entity_id for f, a in zip(feats, assignments)
                                            if a is None])


def _split_value(cfg: RunConfig, ds: RegionDataset) -> float:
    if isinstance(cfg.split_time, float):
        split = cfg.split_time
    else:
        split = 0.5 * (ds.axis.t_first + ds.axis.t_last)
    if not ds.axis.t_first < split < ds.axis.t_last:
        raise ConfigError(f"--split-time {split} is outside ({ds.axis.t_first}, {ds.axis.t_last})")
    return split


def stage_transitions(cfg: RunConfig) -> None:
    ds = _load_data(cfg.out)
    region = _read_region(cfg.out, ds)
    feats = _read_features(cfg.out)
    assignments = _read_paths(cfg.out)
    split = _split_value(cfg, ds)
    halves = split_features(ds, region, feats, split, _quad_tol(cfg))
    classified = [classify_half(h) for h in halves]
    rows = []
    for h, (profiles, assigned) in zip(halves, classified):
        for r, f, p, a in zip(h.ati, h.features, profiles, assigned):
            rows.append((h.half, f.entity_id, h.window[0], h.window[1], r.a_i, r.a_norm, r.ati,
                         r.n_intersections, f.entry.value, f.lai, f.trajectory, p.ati, p.entry,
                         p.lai, UNCLASSIFIED if a is None else a.path,
                         f"infeasible:{infeasibility(p)}" if a is None else a.rule_id))
    fio.write_csv(cfg.out / "halves.csv",
                  ("half", "entity_id", "window_start", "window_end", "a_i", "a_norm", "ati",
                   "n_intersections", "entry_time", "lai", "trajectory", "ati_tier",
                   "entry_tier", "lai_tier", "path", "rule_id"), rows)
    records = transition_records(ds.ids, classified[0][1], classified[1][1])
    fio.write_csv(cfg.out / "transitions.csv", ("entity_id", "path_h1", "path_h2", "magnitude"),
                  ((r.entity_id, r.path_first_half, r.path_second_half, r.magnitude)
                   for r in records))
    mat = transition_matrix(records)
    names = [str(p) for p in PATH_ORDER]
    fio.write_csv(cfg.out / "matrix.csv", ["from\\to"] + names,
                  ([names[i]] + [int(c) for c in mat.counts[i]] for i in range(len(names))))
    fio.write_csv(cfg.out / "matrix_percent.csv", ["from\\to"] + names,
                  ([names[i]] + [float(c) for c in mat.percentages[i]] for i in range(len(names))))
    mags = magnitude_distribution(records)
    fio.write_csv(cfg.out / "magnitudes.csv", ("magnitude", "count", "share"),
                  ((k, v, v / len(records) if records else 0.0) for k, v in mags.counts.items()))
    medians = path_median_curves(ds, assignments)
    fio.write_csv(cfg.out / "medians.csv", ("path", "time", "value"),
                  ((p, t, v) for p, curve in medians.items()
                   for t, v in zip(ds.axis.points, curve)))
    _update_manifest(cfg.out, split_time=split,
                     transitions={"records": len(records), "upward": mags.upward,
                                  "downward": mags.downward, "unchanged": mags.unchanged})


def stage_stats(cfg: RunConfig) -> None:
    ds = _load_data(cfg.out)
    region = _read_region(cfg.out, ds)
    feats = _read_features(cfg.out)
    mom = feature_moments(region, feats)
    fio.write_csv(cfg.out / "stats.csv",
                  ("metric", "n", "mean", "median", "sd", "excess_kurtosis", "skewness"),
                  ((k, m.n, m.mean, m.median, m.sd, m.excess_kurtosis, m.skewness)
                   for k, m in mom.items()))
    w = compare_ati(region)
    header = ("comparison", "n", "n_zero", "statistic", "t_plus", "t_minus", "p_value", "method",
              "note")
    if w is None:
        rows = [("a_norm-ati", None, None, None, None, None, None, "none",
                 "too few nonzero differences")]
    else:
        rows = [("a_norm-ati", w.n, w.n_zero, w.statistic, w.t_plus, w.t_minus,
                 None if w.p_value is None else float(w.p_value), w.method, w.note)]
    fio.write_csv(cfg.out / "wilcoxon.csv", header, rows)


def run_pipeline(cfg: RunConfig) -> None:
    stage_fit(cfg)
    stage_ati(cfg)
    stage_features(cfg)
    stage_classify(replace(cfg, threshold_fraction=None))
    stage_transitions(cfg)
    stage_stats(cfg)


HELP = {
    "run": "all stages in order",
    "fit": "select and fit a curve per entity and for the regional mean",
    "ati": "score every entity curve against the regional mean curve",
    "features": "entry time, latest intensity and trajectory",
    "classify": "tiers, feasibility and adoption paths",
    "transitions": "per-half paths, transition matrix and median curves",
    "stats": "moments and the signed-rank comparison of normalized area vs ATI",
}

STAGES = {
    "run": run_pipeline,
    "fit": stage_fit,
    "ati": stage_ati,
    "features": stage_features,
    "classify": stage_classify,
    "transitions": stage_transitions,
    "stats": stage_stats,
}


# ---------------------------------------------------------------- argv

def _fraction(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got {text!r}") from None


def _split(text: str):
    if text == "mid":
        return "mid"
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'mid' or a number, got {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError("split time must be finite")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adoptpaths", description="Adoption-path typology for regional adoption panels.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES:
        p = sub.add_parser(name, help=HELP[name])
        if name in ("run", "fit"):
            p.add_argument("input", help="long-format CSV: entity_id,time,value "
                                         "or entity_id,time,pv_area,built_area")
        p.add_argument("-o", "--out", required=True, help="output directory")
        if name in ("run", "fit"):
            p.add_argument("--r2-min", type=float, default=R2_MIN)
            p.add_argument("--selection-mode", choices=("adjusted", "plain"), default="adjusted")
        if name in ("run", "ati", "transitions"):
            p.add_argument("--quad-rel-tol", type=float, default=None)
        if name in ("run", "features", "classify"):
            p.add_argument("--threshold-fraction", type=_fraction, default=None,
                           help="'auto' or a fraction in (0, 1)")
        if name in ("run", "transitions"):
            p.add_argument("--split-time", type=_split, default=None, help="'mid' or a time")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        out=FsPath(args.out),
        input=getattr(args, "input", None),
        threshold_fraction=getattr(args, "threshold_fraction", None),
        r2_min=getattr(args, "r2_min", R2_MIN),
        selection_mode=getattr(args, "selection_mode", "adjusted"),
        split_time=getattr(args, "split_time", None),
        quad_rel_tol=getattr(args, "quad_rel_tol", None))


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            fio.precision()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        cfg = config_from_args(args)
        STAGES[args.command](cfg)
    except (ConfigError, fio.MissingStageFile) as exc:
        print(f"adoptpaths: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, DegenerateRegion, FitError, ValueError) as exc:
        print(f"adoptpaths: data error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
