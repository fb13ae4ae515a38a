#!/usr/bin/env python3
"""Time the grid kernels under the numba and numpy backends.

Prints one line per (kernel, grid, backend) with the median wall time and
the numba speedup, and checks that both backends agree to rounding (relative difference).
Run with ``python3 benchmarks/bench_kernels.py [--runs N] [--json]``.
"""

import argparse
import json
import statistics
import time

import numpy as np

from scglue import _kernels as K
from scglue import gluing as G
from scglue.fields import GluingParameter
from scglue.sampling import random_pair

GRIDS = ((161, 16, 3), (641, 32, 3), (2561, 64, 3))


def _inputs(shape, rng):
    ns = shape[0]
    wa = rng.uniform(size=ns)
    return {
        "blend": (wa, rng.normal(size=shape), 1.0 - wa, rng.normal(size=shape)),
        "unglue_solve": (wa, rng.normal(size=shape), rng.normal(size=shape)),
        "weighted_sq_integral": (rng.normal(size=shape), np.exp(0.2 * np.arange(ns) * 0.25), 0.25),
    }


def _time(fn, args, runs):
    fn(*args)  # warm-up, includes jit compilation for numba
    times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def _flat(result):
    if isinstance(result, tuple):
        return np.concatenate([np.ravel(r) for r in result])
    return np.ravel(result)


def bench_kernels(runs):
    rng = np.random.default_rng(0)
    rows = []
    for shape in GRIDS:
        for name, args in _inputs(shape, rng).items():
            fn = getattr(K, name)
            out = {}
            ref = {}
            for b in ("numpy", "numba"):
                K.set_backend(b)
                out[b] = _time(fn, args, runs)
                ref[b] = _flat(fn(*args))
            scale = max(1.0, float(np.max(np.abs(ref["numpy"]))))
            diff = float(np.max(np.abs(ref["numba"] - ref["numpy"]))) / scale
            rows.append({"kernel": name, "grid": "x".join(map(str, shape)),
                         "numpy_s": out["numpy"], "numba_s": out["numba"],
                         "speedup": out["numpy"] / out["numba"], "max_diff": diff})
    return rows


def bench_gluing(runs):
    """End-to-end oplus on a long neck; sampling and interpolation dilute the kernel gain."""
    rng = np.random.default_rng(1)
    ux, uy = random_pair(rng, nt=64, smax=200.0, ds=0.125)
    a = GluingParameter.from_length(160.0, 0.25)
    out = {}
    for b in ("numpy", "numba"):
        K.set_backend(b)
        out[b] = _time(G.oplus, (a, ux, uy), runs)
    return {"kernel": "oplus", "grid": "1281x64x3", "numpy_s": out["numpy"], "numba_s": out["numba"],
            "speedup": out["numpy"] / out["numba"], "max_diff": 0.0}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    args = ap.parse_args()
    start = K.backend()
    try:
        rows = bench_kernels(args.runs) + [bench_gluing(args.runs)]
    finally:
        K.set_backend(start)
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"{'kernel':<22}{'grid':>12}{'numpy ms':>11}{'numba ms':>11}{'speedup':>9}{'rel diff':>11}")
    for r in rows:
        print(f"{r['kernel']:<22}{r['grid']:>12}{1e3 * r['numpy_s']:>11.3f}{1e3 * r['numba_s']:>11.3f}"
              f"{r['speedup']:>9.2f}{r['max_diff']:>11.1e}")


if __name__ == "__main__":
    main()
