"""Independent checks of the auxiliary facts the estimator relies on.

None of these go through the Picard recursion except :func:`check_mirror`,
which tests an exact symmetry of it.  Each ``check_*`` returns a
:class:`CheckResult`; ``margin`` is positive when the check passes with room
to spare.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from . import engine, model
from .index_rng import derive_stream, sample_r_time

__all__ = [
    "CheckResult",
    "VerificationError",
    "ControlPolicy",
    "variance_lemma_sides",
    "check_variance_lemma",
    "kernel_integral",
    "check_kernel_integral",
    "r_time_cdf",
    "check_r_density",
    "zero_policy",
    "constant_policy",
    "feedback_policy",
    "bang_bang_policy",
    "random_admissible_policy",
    "simulate_control_value",
    "check_value_function",
    "check_control",
    "check_pde_residuals",
    "check_mirror",
]


class VerificationError(AssertionError):
    """A checked inequality or admissibility condition failed."""


@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""
    data: dict = field(default_factory=dict, repr=False)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name:<9} margin={self.margin:.6g} {self.detail}".rstrip()


# -- variance of sums of i.i.d. random fields --------------------------------


def variance_lemma_sides(
    table: np.ndarray, outcome_probs: np.ndarray, n: int, x_probs: Optional[np.ndarray] = None
) -> tuple[float, float]:
    """Exact ``(Var[sum_i F_i(X)], n Var[F_1(X)])`` by enumeration.

    ``table[w, x]`` is the value of one field in outcome ``w`` at point
    ``x``; the ``n`` fields use independent outcomes drawn from
    ``outcome_probs`` and ``X`` is independent with law ``x_probs``
    (uniform by default).
    """
    table = np.asarray(table, dtype=np.float64)
    outcome_probs = np.asarray(outcome_probs, dtype=np.float64)
    n_outcomes, card = table.shape
    if x_probs is None:
        x_probs = np.full(card, 1.0 / card)

    first = second = 0.0
    for combo in itertools.product(range(n_outcomes), repeat=n):
        weight = math.prod(outcome_probs[w] for w in combo)
        total = table[list(combo)].sum(axis=0)
        first += weight * float(np.dot(x_probs, total))
        second += weight * float(np.dot(x_probs, total * total))
    lhs = second - first * first

    joint = outcome_probs[:, None] * x_probs[None, :]
    mean1 = float((joint * table).sum())
    var1 = float((joint * table * table).sum()) - mean1 * mean1
    return lhs, n * var1


def check_variance_lemma(
    trials: int = 1000, n: int = 3, field_card: int = 4, outcomes: int = 3, seed: int = 0
) -> CheckResult:
    """Random finite laws for ``(F_i, X)``; the sum's variance must dominate."""
    if n < 1 or field_card < 1:
        raise ValueError("need n >= 1 and field_card >= 1")
    rng = np.random.default_rng(seed)
    worst = math.inf
    failures = []
    for trial in range(trials):
        table = rng.uniform(-1.0, 1.0, size=(outcomes, field_card))
        probs = rng.dirichlet(np.ones(outcomes))
        lhs, rhs = variance_lemma_sides(table, probs, n)
        slack = lhs - rhs
        worst = min(worst, slack)
        if slack < -1e-12:
            failures.append({"trial": trial, "table": table, "probs": probs, "lhs": lhs, "rhs": rhs})
    return CheckResult(
        name="variance",
        passed=not failures,
        margin=worst,
        detail=f"{trials} instances, {len(failures)} violations",
        data={"failures": failures},
    )


# -- nested singular kernel integral -----------------------------------------


def kernel_integral(t0: float, k: int, grid: int = 64) -> float:
    """Nested integral of ``prod_j sqrt(1 - t_{j-1}) / sqrt(t_j - t_{j-1})``.

    Each level uses ``t_j = t_{j-1} + w^2``, which turns the square-root
    singularity into the bounded integrand ``2 sqrt(1 - t_{j-1})``, and then
    ``grid``-point Gauss-Legendre on ``w``.
    """
    if k not in (1, 2, 3):
        raise ValueError(f"k must be 1, 2 or 3, got {k}")
    if not 0.0 <= t0 < 1.0:
        raise ValueError(f"t0 must lie in [0, 1), got {t0}")
    if grid < 1 or grid**k > 50_000_000:
        raise ValueError("grid out of range for this k")
    nodes, weights = np.polynomial.legendre.leggauss(grid)
    # map to [0, 1]
    xi = 0.5 * (nodes + 1.0)
    wts = 0.5 * weights

    def level(t: np.ndarray, remaining: int) -> np.ndarray:
        if remaining == 0:
            return np.ones_like(t)
        span = 1.0 - t
        inner = level(t[..., None] + span[..., None] * xi * xi, remaining - 1)
        return 2.0 * span * (inner @ wts)

    return float(level(np.asarray(t0, dtype=np.float64), k))


def check_kernel_integral(t0: float = 0.0, k: int = 2, grid: int = 64) -> float:
    value = kernel_integral(t0, k, grid)
    if value > 2.0**k + 1e-6:
        raise VerificationError(f"kernel integral {value} exceeds 2^{k}")
    return value


# -- law of the intermediate time ---------------------------------------------


def r_time_cdf(s, t: float):
    """``P(R_t <= s) = sqrt((s - t) / (1 - t))`` on ``[t, 1]``."""
    s = np.clip(np.asarray(s, dtype=np.float64), t, 1.0)
    return np.sqrt((s - t) / (1.0 - t))


def check_r_density(
    t: float = 0.0, samples: int = 100_000, seed: int = 0, replication: int = 0
) -> CheckResult:
    if samples < 10_000:
        raise ValueError("need at least 10^4 samples")
    stream = derive_stream(seed, replication, (0,))
    draws = np.fromiter((sample_r_time(stream, t) for _ in range(samples)), dtype=np.float64, count=samples)
    ks = stats.kstest(draws, lambda s: r_time_cdf(s, t)).statistic
    critical = 1.63 / math.sqrt(samples)
    return CheckResult(
        name="density",
        passed=bool(ks < critical),
        margin=critical - ks,
        detail=f"t={t} KS={ks:.5f} critical={critical:.5f}",
    )


# -- the control problem ----------------------------------------------------------


ControlPolicy = Callable[[float, np.ndarray, np.random.Generator], np.ndarray]


def zero_policy(t: float, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return np.zeros_like(state)


def constant_policy(direction) -> ControlPolicy:
    direction = np.asarray(direction, dtype=np.float64)

    def policy(t, state, rng):
        return np.broadcast_to(direction, state.shape)

    return policy


def feedback_policy(t: float, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Push coordinates 2..d radially outward at unit speed."""
    c = np.zeros_like(state)
    if state.shape[1] > 1:
        tail = state[:, 1:]
        norm = np.linalg.norm(tail, axis=1, keepdims=True)
        c[:, 1:] = np.divide(tail, norm, out=np.zeros_like(tail), where=norm > 0)
    return c


def bang_bang_policy(t: float, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random signs in coordinates 2..d, redrawn every step."""
    c = np.zeros_like(state)
    d = state.shape[1]
    if d > 1:
        c[:, 1:] = rng.choice([-1.0, 1.0], size=(state.shape[0], d - 1)) / math.sqrt(d - 1)
    return c


def random_admissible_policy(rng: np.random.Generator, d: int) -> ControlPolicy:
    if d == 1:
        return zero_policy
    kind = rng.integers(3)
    if kind == 0:
        direction = np.zeros(d)
        direction[1:] = rng.normal(size=d - 1)
        direction *= rng.uniform(0.0, 1.0) / np.linalg.norm(direction)
        return constant_policy(direction)
    return feedback_policy if kind == 1 else bang_bang_policy


def _check_admissible(c: np.ndarray) -> None:
    if np.any(c[:, 0] != 0.0):
        raise VerificationError("control moves the first coordinate")
    norms = np.linalg.norm(c, axis=1)
    if np.any(norms > 1.0 + 1e-12):
        raise VerificationError(f"control norm {norms.max()} exceeds 1")


def simulate_control_value(
    d: int,
    s: float,
    x,
    policy: ControlPolicy,
    paths: int = 100_000,
    steps: int = 20,
    seed: int = 0,
) -> tuple[float, float]:
    """Euler simulation of ``dX = c dt + dW`` from ``(s, x)``; payoff ``|X_1(1)|``.

    The first coordinate carries no drift, so the payoff law is exact for
    any step count.
    """
    if steps < 10:
        raise ValueError("need at least 10 time steps")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"start time must lie in [0, 1], got {s}")
    x = np.zeros(d) if x is None else np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(seed)
    dt = (1.0 - s) / steps
    state = np.tile(x, (paths, 1))
    t = s
    for _ in range(steps):
        c = np.asarray(policy(t, state, rng), dtype=np.float64)
        _check_admissible(c)
        state += c * dt + math.sqrt(dt) * rng.standard_normal(state.shape)
        t += dt
    payoff = np.abs(state[:, 0])
    return float(payoff.mean()), float(payoff.std(ddof=1) / math.sqrt(paths))


def check_value_function(
    d: int = 3, trials: int = 5, paths: int = 20_000, steps: int = 10, seed: int = 0
) -> CheckResult:
    """Simulated values under random admissible policies match the closed form."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    bad = 0
    for trial in range(trials):
        s = float(rng.uniform(0.0, 0.95))
        x = rng.normal(size=d)
        exact = model.exact_value(s, x)
        for j in range(3):
            policy = random_admissible_policy(rng, d)
            mean, se = simulate_control_value(d, s, x, policy, paths, steps, seed=seed + 1000 * trial + j)
            slack = 5.0 * se - abs(mean - exact)
            worst = min(worst, slack / se if se > 0 else slack)
            bad += slack < 0
    return CheckResult(
        name="value",
        passed=bad == 0,
        margin=worst,
        detail=f"{trials} points x 3 policies, margin in std errors",
    )


def check_control(d: int = 3, paths: int = 100_000, steps: int = 20, seed: int = 0) -> CheckResult:
    """Zero policy against E|Z|, then three random policies against the zero policy."""
    mean0, se0 = simulate_control_value(d, 0.0, None, zero_policy, paths, steps, seed)
    slacks = [4.0 - abs(mean0 - model.SQRT_2_OVER_PI) / se0]
    rng = np.random.default_rng(seed + 1)
    for j in range(3):
        policy = random_admissible_policy(rng, d)
        mean, se = simulate_control_value(d, 0.0, None, policy, paths, steps, seed + 2 + j)
        slacks.append(4.0 - abs(mean - mean0) / math.hypot(se, se0))
    value = check_value_function(d, trials=5, paths=paths // 5, steps=10, seed=seed + 7)
    return CheckResult(
        name="control",
        passed=min(slacks) > 0 and value.passed,
        margin=min(slacks),
        detail=f"zero-policy mean={mean0:.5f}, closed-form check margin={value.margin:.3g} std errors",
    )


# -- checks on the exact solution and on the recursion -------------------------------


def check_pde_residuals(points: int = 20, d: int = 5, h: float = 1e-4, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    spec = model.counterexample(d)
    worst = 0.0
    for _ in range(points):
        t = float(rng.uniform(0.01, 0.9))
        x = rng.normal(size=d)
        worst = max(worst, abs(model.pde_residual(spec, t, x, h)))
    return CheckResult(
        name="pde",
        passed=worst < 1e-5,
        margin=1e-5 - worst,
        detail=f"max |residual|={worst:.3e} over {points} points",
    )


def check_mirror(cases: int = 50, seed: int = 0, backend: str = "auto") -> CheckResult:
    """``V(t, x)`` with negated increments equals ``-V(t, -x)`` without."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for case in range(cases):
        d = int(rng.integers(1, 7))
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 3))
        t = float(rng.uniform(0.0, 0.95))
        x = rng.normal(size=d)
        spec = model.counterexample(d)
        mirrored = engine.evaluate(
            spec, engine.MlpParams(n, m, master_seed=seed, replication=case, mirror=True), (0,), t, x, backend=backend
        )
        plain = engine.evaluate(
            spec, engine.MlpParams(n, m, master_seed=seed, replication=case), (0,), t, -x, backend=backend
        )
        scale = max(1.0, float(np.max(np.abs(plain.v))))
        worst = max(worst, float(np.max(np.abs(mirrored.v + plain.v))) / scale)
    tol = 1e-12
    return CheckResult(
        name="mirror",
        passed=worst <= tol,
        margin=tol - worst,
        detail=f"max relative deviation {worst:.3e} over {cases} cases",
    )
