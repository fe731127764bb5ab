"""Time the compiled recursion against the numpy fallback.

    python benchmarks/bench_backends.py [--repeat 3]

Small dimensions with deep recursion are dominated by per-node overhead,
which is where the compiled core pays off; at large d both spend their time
generating Gaussians.
"""

import argparse
import time

import numpy as np

from mlp_curse import compiled_available, counterexample
from mlp_curse.engine import MlpParams, evaluate, node_count

CASES = [
    # (d, n, m, evaluations)
    (3, 4, 3, 5),
    (10, 3, 3, 20),
    (6, 5, 2, 10),
    (100, 3, 2, 50),
    (2048, 1, 1, 500),
    (65536, 2, 1, 20),
]


def time_case(d, n, m, evals, backend, repeat):
    spec = counterexample(d)
    best = float("inf")
    checksum = 0.0
    for _ in range(repeat):
        start = time.perf_counter()
        checksum = 0.0
        for rep in range(evals):
            res = evaluate(spec, MlpParams(n, m, master_seed=1, replication=rep), backend=backend)
            checksum += res.u + float(np.sum(res.v))
        best = min(best, time.perf_counter() - start)
    return best / evals, checksum


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not compiled_available():
        raise SystemExit("compiled core not built; run `pip install -e . --no-build-isolation`")
    print(f"{'d':>6} {'n':>2} {'m':>2} {'nodes':>6} {'python ms':>10} {'compiled ms':>12} {'speedup':>8} {'|diff|':>9}")
    for d, n, m, evals in CASES:
        py, sum_py = time_case(d, n, m, evals, "python", args.repeat)
        c, sum_c = time_case(d, n, m, evals, "compiled", args.repeat)
        print(
            f"{d:>6} {n:>2} {m:>2} {node_count(n, m):>6} {py * 1e3:>10.3f} {c * 1e3:>12.3f} "
            f"{py / c:>8.1f} {abs(sum_py - sum_c):>9.1e}"
        )


if __name__ == "__main__":
    main()
