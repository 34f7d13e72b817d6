"""Compare the compiled and numpy ascent kernels on seeded problems.

    python benchmarks/bench_kernels.py [--seed 0] [--repeat 3] [--out report.json]

Times ``transform_ratio`` on a batch of tuples and ``ascend`` with the
default budget, per depth and norm pair, and records whether both backends
reach the same best ratio.
"""

import argparse
import json
import math
import platform
import sys
import time

import numpy as np

from umdnorms import _kernels_py

try:
    from umdnorms import _kernels as _compiled
except ImportError:
    _compiled = None

NORMS = [(1.0, 1.0), (math.inf, math.inf), (1.0, math.inf)]


def _best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_case(n, px, py, seed, repeat, restarts, iters):
    rng = np.random.default_rng([seed, n])
    T = rng.standard_normal((2, 2))
    signs = rng.choice([-1.0, 1.0], 2 ** n - 1)
    X0 = rng.standard_normal((restarts, 2 ** n - 1, 2))
    batch = rng.standard_normal((1000, 2 ** n - 1, 2))
    row = {"depth": n, "px": str(px), "py": str(py), "restarts": restarts, "iterations": iters}
    for name, impl in (("python", _kernels_py), ("cython", _compiled)):
        if impl is None:
            continue
        t_eval, _ = _best_time(lambda: impl.transform_ratio(batch, signs, T, n, px, py), repeat)
        t_asc, (ratios, _) = _best_time(lambda: impl.ascend(X0, signs, T, n, px, py, iters, 0.1, 1e-9), repeat)
        row[name] = {"transform_ratio_s": t_eval, "ascend_s": t_asc, "best_ratio": float(np.max(ratios))}
    if _compiled is not None:
        row["speedup_ascend"] = row["python"]["ascend_s"] / row["cython"]["ascend_s"]
        row["best_ratio_gap"] = abs(row["python"]["best_ratio"] - row["cython"]["best_ratio"])
    return row


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--depths", type=int, nargs="+", default=[2, 3, 4])
    parser.add_argument("--restarts", type=int, default=100)
    parser.add_argument("--iters", type=int, default=1000)
    parser.add_argument("--out", default=None)
    args = parser.parse_args(argv)

    rows = [bench_case(n, px, py, args.seed, args.repeat, args.restarts, args.iters)
            for n in args.depths for px, py in NORMS]
    report = {
        "seed": args.seed,
        "repeat": args.repeat,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "machine": platform.machine(),
        "compiled_available": _compiled is not None,
        "cases": rows,
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for r in rows:
        if "speedup_ascend" in r:
            print(f"n={r['depth']} px={r['px']} py={r['py']}: ascend speedup {r['speedup_ascend']:.1f}x, "
                  f"best ratio gap {r['best_ratio_gap']:.1e}", file=sys.stderr)


if __name__ == "__main__":
    main()
