"""Full-history recursive multilevel Picard estimator for (u, grad u).

``evaluate`` returns one draw of the pair ``(U_{n,m}, V_{n,m})`` at a
space-time point.  Node ``theta`` spends its randomness as follows:

* ``m^n`` terminal samples, child ``(theta, 0, -i)``: one Gaussian increment
  over ``[t, 1]``;
* for each level ``l < n``, ``m^(n-l)`` samples, child ``(theta, l, i)``:
  one intermediate time ``R`` with density ``rho(t, .)`` followed by one
  increment over ``[t, R]``.  The level-``l`` estimate is evaluated at child
  ``(theta, l, i)`` and the level-``(l-1)`` estimate at ``(theta, -l, i)``,
  both at the same point ``(R, x + dW)``.

Only the increment at the sampled times enters the formula, so each
Brownian motion is represented by a single Gaussian draw.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from . import _backend
from .index_rng import (
    MultiIndex,
    as_index,
    derive_stream,
    sample_brownian_increment,
    sample_r_time,
)
from .model import MissingExactSolution, ProblemSpec

__all__ = [
    "MlpParams",
    "EvalResult",
    "ErrorEstimate",
    "NonFiniteError",
    "time_kernel",
    "evaluate",
    "replicate",
    "second_moment_fV",
    "error_l2",
    "node_count",
    "default_threads",
]

MAX_DEPTH = 12
# largest sample count m^n accepted at one node
MAX_SAMPLES = 1 << 40


class NonFiniteError(FloatingPointError):
    """A node produced NaN or infinity; ``theta`` is the offending index path."""

    def __init__(self, theta: Sequence[int], detail: str = "") -> None:
        self.theta = tuple(theta)
        msg = "non-finite estimate at node (" + ",".join(map(str, self.theta)) + ")"
        if detail:
            msg += ": " + detail
        super().__init__(msg)


@dataclass(frozen=True)
class MlpParams:
    n: int
    m: int
    master_seed: int = 0
    replication: int = 0
    mirror: bool = False
    max_depth: int = MAX_DEPTH

    def __post_init__(self) -> None:
        if self.n < -1:
            raise ValueError(f"depth n must be >= -1, got {self.n}")
        if self.m < 1:
            raise ValueError(f"base m must be >= 1, got {self.m}")
        if self.n > self.max_depth:
            raise ValueError(
                f"depth n={self.n} exceeds the guard {self.max_depth}; raise max_depth explicitly"
            )
        if self.n > 0 and self.m**self.n > MAX_SAMPLES:
            raise ValueError(f"m^n = {self.m}^{self.n} samples per node is too large")
        if not 0 <= self.master_seed < 1 << 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.replication < 0:
            raise ValueError("replication must be nonnegative")


@dataclass
class EvalResult:
    u: float
    v: np.ndarray
    nodes: int = 0
    f_evals: int = 0
    gaussians: int = 0


@dataclass
class ErrorEstimate:
    """Root-mean-square statistic over independent replications."""

    reps: int
    estimate: float
    std_error: float
    nodes: int = 0
    f_evals: int = 0
    gaussians: int = 0
    wall_ms: float = 0.0
    samples: Optional[np.ndarray] = field(default=None, repr=False)


def time_kernel(t: float, s: float) -> float:
    """Density ``1 / (2 sqrt(1 - t) sqrt(s - t))`` of the intermediate time."""
    if not t < 1.0:
        raise ValueError(f"t must be < 1, got {t}")
    if not t < s <= 1.0:
        raise ValueError(f"need t < s <= 1, got t={t}, s={s}")
    return 1.0 / (2.0 * math.sqrt(1.0 - t) * math.sqrt(s - t))


@lru_cache(maxsize=None)
def node_count(n: int, m: int) -> int:
    """Number of ``evaluate`` calls (root included) made by one estimate."""
    if n < -1:
        raise ValueError("n must be >= -1")
    if n <= 0:
        return 0
    return 1 + sum(m ** (n - l) * (node_count(l, m) + node_count(l - 1, m)) for l in range(1, n))


class _Context:
    __slots__ = ("spec", "m", "mirror", "streams", "f0", "nodes", "f_evals", "gaussians")

    def __init__(self, spec: ProblemSpec, m: int, mirror: bool, streams) -> None:
        self.spec = spec
        self.m = m
        self.mirror = mirror
        self.streams = streams
        self.f0 = float(spec.f(np.zeros(spec.d)))
        self.nodes = 0
        self.f_evals = 0
        self.gaussians = 0


def _recurse(ctx: _Context, n: int, theta: MultiIndex, t: float, x: np.ndarray):
    spec = ctx.spec
    d = spec.d
    g, f = spec.g, spec.f
    ctx.nodes += 1

    one_minus_t = 1.0 - t
    gx = float(g(x))
    u = gx
    v = np.zeros(d)

    count = ctx.m**n
    for i in range(1, count + 1):
        stream = ctx.streams(theta.child(0, -i))
        dw = sample_brownian_increment(stream, d, one_minus_t)
        ctx.gaussians += 1
        if ctx.mirror:
            dw = -dw
        coef = (float(g(x + dw)) - gx) / count
        u += coef
        v += (coef / one_minus_t) * dw

    sqrt_one_minus_t = math.sqrt(one_minus_t)
    for level in range(n):
        count = ctx.m ** (n - level)
        for i in range(1, count + 1):
            child = theta.child(level, i)
            stream = ctx.streams(child)
            r_time = sample_r_time(stream, t)
            dur = r_time - t
            dw = sample_brownian_increment(stream, d, dur)
            ctx.gaussians += 1
            if ctx.mirror:
                dw = -dw
            if level == 0:
                val = ctx.f0
                ctx.f_evals += 1
            else:
                y = x + dw
                _, v_hi = _recurse(ctx, level, child, r_time, y)
                val = float(f(v_hi))
                if level >= 2:
                    _, v_lo = _recurse(ctx, level - 1, theta.child(-level, i), r_time, y)
                    val -= float(f(v_lo))
                else:
                    val -= ctx.f0
                ctx.f_evals += 2
            # 1/rho(t, R) in product form
            w = val * (2.0 * sqrt_one_minus_t * math.sqrt(dur)) / count
            u += w
            v += (w / dur) * dw

    if not (math.isfinite(u) and np.all(np.isfinite(v))):
        raise NonFiniteError(theta.path)
    return u, v


def _check_point(spec: ProblemSpec, t: float, x) -> np.ndarray:
    if not 0.0 <= t < 1.0:
        raise ValueError(f"t must lie in [0, 1), got {t}")
    if x is None:
        return np.zeros(spec.d)
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (spec.d,):
        raise ValueError(f"point has shape {x.shape}, expected ({spec.d},)")
    return x


def _use_compiled(spec: ProblemSpec, streams, backend: str) -> bool:
    if backend == "python":
        return False
    native = spec.kind == "counterexample" and streams is None
    if backend == "compiled":
        if not _backend.compiled_available():
            raise RuntimeError("compiled core is not available")
        if not native:
            raise ValueError("compiled core only handles the built-in counterexample and streams")
        return True
    return native and _backend.compiled_available()


def evaluate(
    spec: ProblemSpec,
    params: MlpParams,
    theta: MultiIndex | Sequence[int] | int = (0,),
    t: float = 0.0,
    x=None,
    *,
    streams: Optional[Callable[[MultiIndex], object]] = None,
    backend: str = "auto",
) -> EvalResult:
    """One draw of ``(U_{n,m}^theta(t, x), V_{n,m}^theta(t, x))``.

    ``streams`` maps a child index to a stream-like object and replaces the
    keyed streams (used for stubbing).  ``backend`` is ``"auto"``,
    ``"compiled"`` or ``"python"``.
    """
    theta = as_index(theta)
    x = _check_point(spec, t, x)
    if params.n <= 0:
        return EvalResult(u=0.0, v=np.zeros(spec.d))

    if _use_compiled(spec, streams, backend):
        u, v, nodes, f_evals, gaussians = _backend._core.evaluate_counterexample(
            spec.d,
            params.n,
            params.m,
            params.master_seed,
            params.replication,
            np.asarray(theta.path, dtype=np.int64),
            t,
            x,
            params.mirror,
        )
        return EvalResult(u=u, v=v, nodes=nodes, f_evals=f_evals, gaussians=gaussians)

    if streams is None:
        seed, rep = params.master_seed, params.replication

        def streams(index: MultiIndex):
            return derive_stream(seed, rep, index)

    ctx = _Context(spec, params.m, params.mirror, streams)
    u, v = _recurse(ctx, params.n, theta, t, x)
    return EvalResult(u=u, v=v, nodes=ctx.nodes, f_evals=ctx.f_evals, gaussians=ctx.gaussians)


def default_threads() -> int:
    import os

    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def replicate(
    spec: ProblemSpec,
    params: MlpParams,
    reps: int,
    statistic: Callable[[EvalResult], float],
    t: float = 0.0,
    x=None,
    *,
    threads: Optional[int] = None,
    backend: str = "auto",
) -> tuple[np.ndarray, dict[str, int]]:
    """Evaluate ``statistic`` on replications ``0 .. reps-1`` at root ``(0)``.

    Replications are split into contiguous blocks, one per thread; each
    result lands in its own slot so the output does not depend on the
    schedule.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    x = _check_point(spec, t, x)
    values = np.empty(reps)
    nodes = np.zeros(reps, dtype=np.int64)
    f_evals = np.zeros(reps, dtype=np.int64)
    gaussians = np.zeros(reps, dtype=np.int64)
    root = MultiIndex((0,))

    def run_block(lo: int, hi: int) -> None:
        for rep in range(lo, hi):
            p = MlpParams(
                n=params.n,
                m=params.m,
                master_seed=params.master_seed,
                replication=rep,
                mirror=params.mirror,
                max_depth=params.max_depth,
            )
            res = evaluate(spec, p, root, t, x, backend=backend)
            values[rep] = statistic(res)
            nodes[rep] = res.nodes
            f_evals[rep] = res.f_evals
            gaussians[rep] = res.gaussians

    threads = min(threads or default_threads(), reps)
    if threads <= 1:
        run_block(0, reps)
    else:
        bounds = np.linspace(0, reps, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run_block, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
            for fut in futures:
                fut.result()
    counters = {
        "nodes": int(nodes.sum()),
        "f_evals": int(f_evals.sum()),
        "gaussians": int(gaussians.sum()),
    }
    return values, counters


def _rms_summary(values: np.ndarray) -> tuple[float, float]:
    """sqrt of the sample mean and its delta-method standard error."""
    reps = values.size
    mean = math.fsum(values) / reps
    var = math.fsum((values - mean) ** 2) / (reps - 1)
    estimate = math.sqrt(mean)
    if estimate == 0.0:
        return 0.0, 0.0
    return estimate, math.sqrt(var / reps) / (2.0 * estimate)


def second_moment_fV(
    spec: ProblemSpec,
    params: MlpParams,
    reps: int,
    t: float = 0.0,
    x=None,
    *,
    threads: Optional[int] = None,
    backend: str = "auto",
    keep_samples: bool = False,
) -> ErrorEstimate:
    """``E[f(V_{n,m}(t, x))^2]^(1/2)`` estimated from ``reps`` replications."""
    if reps < 2:
        raise ValueError("reps must be >= 2")
    f = spec.f
    start = time.perf_counter()
    values, counters = replicate(
        spec, params, reps, lambda r: float(f(r.v)) ** 2, t, x, threads=threads, backend=backend
    )
    estimate, se = _rms_summary(values)
    return ErrorEstimate(
        reps=reps,
        estimate=estimate,
        std_error=se,
        wall_ms=(time.perf_counter() - start) * 1e3,
        samples=values if keep_samples else None,
        **counters,
    )


def error_l2(
    spec: ProblemSpec,
    params: MlpParams,
    reps: int,
    t: float = 0.0,
    x=None,
    *,
    threads: Optional[int] = None,
    backend: str = "auto",
    keep_samples: bool = False,
) -> ErrorEstimate:
    """Root-mean-square distance of ``(U, V)`` from ``(u, grad u)`` at ``(t, x)``."""
    if reps < 2:
        raise ValueError("reps must be >= 2")
    if spec.exact is None:
        raise MissingExactSolution("error_l2 needs an exact solution")
    xp = _check_point(spec, t, x)
    u_ref = float(spec.exact.value(t, xp))
    grad_ref = np.asarray(spec.exact.gradient(t, xp), dtype=np.float64)

    def sq_error(r: EvalResult) -> float:
        dv = r.v - grad_ref
        return (r.u - u_ref) ** 2 + float(np.dot(dv, dv))

    start = time.perf_counter()
    values, counters = replicate(spec, params, reps, sq_error, t, xp, threads=threads, backend=backend)
    estimate, se = _rms_summary(values)
    return ErrorEstimate(
        reps=reps,
        estimate=estimate,
        std_error=se,
        wall_ms=(time.perf_counter() - start) * 1e3,
        samples=values if keep_samples else None,
        **counters,
    )
