"""Compiled vs pure-numpy kernels.

Runs each workload in a fresh interpreter with ADOPTPATHS_NUMBA=1 and then
ADOPTPATHS_NUMBA=0, so the fallback never sees numba at all.  Compilation
happens in a warm-up call and is reported separately.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def workloads():
    import numpy as np

    from adoptpaths import kernels as K
    from adoptpaths.ati import compute_region_ati, find_intersections
    from adoptpaths.curves import GOMPERTZ, LOGISTIC, FittedCurve, fit_family
    from adoptpaths.stats import wilcoxon_signed_rank
    from adoptpaths.synthetic import FIXTURE_EXTRAS, archetype_region

    t = np.linspace(0.0, 10.0, 6)
    y = K.curve_value(GOMPERTZ.code, np.array([80.0, 5.0, 0.6]), t)
    ci = FittedCurve(LOGISTIC, np.array([100.0, 1.2, 4.0]), 1.0, 1.0, (0.0, 10.0))
    cm = FittedCurve(GOMPERTZ, np.array([90.0, 5.0, 0.6]), 1.0, 1.0, (0.0, 10.0))
    p = np.array([100.0, 1.2, 4.0])
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=25), rng.normal(size=25)
    region = archetype_region(extra=FIXTURE_EXTRAS)
    return {
        "fit Gompertz (8 starts)": lambda: fit_family(t, y, GOMPERTZ),
        "adaptive quadrature": lambda: K.integrate_curve(LOGISTIC.code, p, 0.0, 10.0, 1e-10, 200),
        "crossing scan": lambda: find_intersections(ci, cm),
        "exact signed-rank n=25": lambda: wilcoxon_signed_rank(a, b),
        "region ATI (12 entities)": lambda: compute_region_ati(region),
    }


def worker(repeat):
    from adoptpaths._accel import JIT_ENABLED
    out = {"jit": JIT_ENABLED, "rows": {}}
    for name, fn in workloads().items():
        start = time.perf_counter()
        fn()
        warm = time.perf_counter() - start
        best = float("inf")
        for _ in range(repeat):
            start = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - start)
        out["rows"][name] = {"first": warm, "best": best}
    print(json.dumps(out))


def run(flag, repeat):
    env = dict(os.environ, ADOPTPATHS_NUMBA=flag)
    proc = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(repeat)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker(args.repeat)
        return
    jit, py = run("1", args.repeat), run("0", args.repeat)
    assert jit["jit"] and not py["jit"]
    print(f"{'workload':<28}{'numba first':>13}{'numba best':>13}{'numpy best':>13}{'speedup':>10}")
    for name, r in jit["rows"].items():
        f = py["rows"][name]
        print(f"{name:<28}{r['first'] * 1e3:>11.2f}ms{r['best'] * 1e3:>11.3f}ms"
              f"{f['best'] * 1e3:>11.3f}ms{f['best'] / r['best']:>9.1f}x")


if __name__ == "__main__":
    main()
