"""Depth-2 lower-bound check just above the feasibility threshold.

    python benchmarks/stretch_n2.py [--d 3000000] [--reps 200]

Not part of the test suite: about 0.5 s and ~150 MB per replication with the
compiled core.
"""

import argparse
import resource
import time

from mlp_curse import bounds, counterexample
from mlp_curse.engine import MlpParams, second_moment_fV


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--d", type=int, default=3_000_000)
    parser.add_argument("--reps", type=int, default=200)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args()

    d, n, m = args.d, 2, 1
    threshold = bounds.feasible_dimension(n, m)
    lower = bounds.lower_moment_fV(d, n, m)
    upper = bounds.upper_moment_fV(d, n)
    print(f"d={d} threshold={threshold:.0f} feasible={lower is not None}")
    start = time.perf_counter()
    est = second_moment_fV(counterexample(d), MlpParams(n, m, master_seed=args.seed), args.reps, threads=args.threads)
    elapsed = time.perf_counter() - start
    peak_mb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024
    print(f"E[f(V)^2]^(1/2) = {est.estimate:.1f} +- {est.std_error:.1f}")
    print(f"lower bound {lower:.1f}, upper bound {upper:.4g}")
    ok = lower is not None and est.estimate >= lower - 4 * est.std_error and est.estimate <= upper
    print(f"{'PASS' if ok else 'FAIL'} runtime={elapsed:.1f}s peak_rss={peak_mb:.0f}MB")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
