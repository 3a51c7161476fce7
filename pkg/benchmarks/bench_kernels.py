"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run on identical inputs under both backends; the table
reports the best wall time of ``--repeat`` runs, the speed-up and the
largest difference between the two outputs.
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from mlfrac._backend import get_backend
from mlfrac.motion import _cumulative, _draw_events, orthogonal_motion
from mlfrac.special import _coeffs, _log_denominators, _log_majorant


def series_case(npts: int, nu: float, radius: float):
    K = 256
    c = _coeffs(("ones",), K)
    g = _log_denominators(nu, 1.0 + 0j, K)
    logb = _log_majorant(1.0, K)
    rng = np.random.default_rng(0)
    w = radius * np.sqrt(rng.random(npts)) * np.exp(2j * np.pi * rng.random(npts))
    return (c, g, logb, w, 0, 1e-14, 1e-12)


def motion_case(paths: int, t: float):
    spec = orthogonal_motion(2.0, 1.0)
    counts, offsets, epochs, _, switch_u, init_u = _draw_events(spec, t, paths, np.random.default_rng(1))
    return (counts, offsets, epochs, switch_u, init_u, _cumulative(spec.initial_dist),
            _cumulative(spec.switch_matrix), np.asarray(spec.velocities), t)


def bench(name: str, fn_name: str, args, repeat: int, backends) -> tuple:
    times, outs = {}, {}
    for b in backends:
        fn = getattr(b, fn_name)
        outs[b.NAME] = fn(*args)
        times[b.NAME] = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))
    first = outs[backends[0].NAME]
    a = first[0] if isinstance(first, tuple) else first
    diff = 0.0
    for b in backends[1:]:
        o = outs[b.NAME]
        o = o[0] if isinstance(o, tuple) else o
        diff = max(diff, float(np.max(np.abs(np.asarray(a) - np.asarray(o)))))
    return name, times, diff


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = [get_backend("python")]
    try:
        backends.insert(0, get_backend("cython"))
    except ImportError:
        print("compiled backend not built; timing the Python fallback only", file=sys.stderr)
    cases = [
        ("series_sum nu=0.8 |z|<=2, 10^4 pts", "series_sum", series_case(10_000, 0.8, 2.0)),
        ("series_sum nu=1.5 |z|<=5, 10^4 pts", "series_sum", series_case(10_000, 1.5, 5.0)),
        ("motion_positions lam*t=2, 10^5 paths", "motion_positions", motion_case(100_000, 1.0)),
        ("motion_positions lam*t=10, 10^5 paths", "motion_positions", motion_case(100_000, 5.0)),
    ]
    names = [b.NAME for b in backends]
    head = f"{'kernel':40s}" + "".join(f"{n:>12s}" for n in names) + f"{'speed-up':>10s}{'max diff':>11s}"
    print(head)
    print("-" * len(head))
    for label, fn, a in cases:
        _, times, diff = bench(label, fn, a, args.repeat, backends)
        row = f"{label:40s}" + "".join(f"{times[n] * 1e3:10.2f}ms" for n in names)
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(row + f"{speed:9.1f}x{diff:11.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
