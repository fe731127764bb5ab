"""Closed-form moment and error bounds for the counterexample.

Upper bounds hold for every ``(d, n, m)``.  Lower bounds only hold once the
dimension clears the threshold ``(1224 m)^n n!``; below it they are reported
as ``None``.

Two upper bounds on the error exist: the seminorm bound
``|g(0)| + c2 max(c1^n, 1) 6^n sqrt(d)`` on ``E[U^2 + |V|^2]^(1/2)`` (see
:func:`upper_second_moment_seminorm`) and the cruder ``d^((n+1)/2) 6^(n+1)``
on the error itself, which is what :func:`upper_error` reports.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

__all__ = [
    "BoundReport",
    "constants_counterexample",
    "constants_from_moments",
    "upper_moment_fV",
    "upper_error",
    "upper_second_moment_seminorm",
    "feasible_dimension",
    "lower_moment_fV",
    "lower_error",
    "bound_report",
]

LOWER_CONST = 34
THRESHOLD_CONST = 1224


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")


def constants_from_moments(fourth_moment_f: float, fourth_moment_gamma: float) -> tuple[float, float]:
    """``(c1, c2)`` from ``E|f(W_1)|^4`` and ``E|gamma(W_1)|^4``."""
    if fourth_moment_f < 0 or fourth_moment_gamma < 0:
        raise ValueError("fourth moments are nonnegative")
    return fourth_moment_f**0.25, fourth_moment_gamma**0.25


def constants_counterexample(d: int) -> tuple[float, float]:
    """``f(W_1)^2`` is chi-square with ``d - 1`` degrees of freedom and
    ``gamma(W_1) = |W_{1,1}|``, so the fourth moments are ``(d-1)(d+1)`` and 3.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return constants_from_moments(float((d - 1) * (d + 1)), 3.0)


def _safe_pow(base: float, exponent: float) -> float:
    try:
        return math.pow(base, exponent)
    except OverflowError:
        return math.inf


def upper_moment_fV(d: int, n: int, c1: Optional[float] = None, c2: Optional[float] = None) -> float:
    """``c2 max(c1^n, 1) 6^(n-1)`` bounding ``E[f(V_{n,m})^2]^(1/2)``."""
    _check_n(n)
    if c1 is None or c2 is None:
        c1, c2 = constants_counterexample(d)
    return c2 * max(_safe_pow(c1, n), 1.0) * _safe_pow(6.0, n - 1)


def upper_second_moment_seminorm(
    d: int, n: int, g0: float = 0.0, c1: Optional[float] = None, c2: Optional[float] = None
) -> float:
    """``|g(0)| + c2 max(c1^n, 1) 6^n sqrt(d)`` bounding ``E[U^2 + |V|^2]^(1/2)`` at the origin."""
    _check_n(n)
    if c1 is None or c2 is None:
        c1, c2 = constants_counterexample(d)
    return abs(g0) + c2 * max(_safe_pow(c1, n), 1.0) * _safe_pow(6.0, n) * math.sqrt(d)


def upper_error(d: int, n: int) -> float:
    _check_n(n)
    return _safe_pow(d, (n + 1) / 2) * _safe_pow(6.0, n + 1)


def feasible_dimension(n: int, m: int) -> float:
    """``(1224 m)^n n!`` as a float, ``inf`` on overflow."""
    _check_n(n)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    try:
        return float((THRESHOLD_CONST * m) ** n * math.factorial(n))
    except OverflowError:
        return math.inf


def lower_moment_fV(d: int, n: int, m: int) -> Optional[float]:
    """``d^(n/2) / ((34 m)^(n/2) sqrt(n!))`` when ``d`` is feasible, else ``None``."""
    if d < feasible_dimension(n, m):
        return None
    return math.sqrt(_safe_pow(d / (LOWER_CONST * m), n) / math.factorial(n))


def lower_error(d: int, n: int, m: int) -> Optional[float]:
    lower = lower_moment_fV(d, n, m)
    return None if lower is None else lower - 1.0


@dataclass(frozen=True)
class BoundReport:
    d: int
    n: int
    m: int
    c1: float
    c2: float
    upper_moment_fV: float
    upper_error: float
    lower_moment_fV: Optional[float]
    lower_error: Optional[float]
    feasible: bool
    threshold_d: float

    def as_dict(self) -> dict:
        return asdict(self)


def bound_report(d: int, n: int, m: int) -> BoundReport:
    c1, c2 = constants_counterexample(d)
    lower = lower_moment_fV(d, n, m)
    return BoundReport(
        d=d,
        n=n,
        m=m,
        c1=c1,
        c2=c2,
        upper_moment_fV=upper_moment_fV(d, n),
        upper_error=upper_error(d, n),
        lower_moment_fV=lower,
        lower_error=None if lower is None else lower - 1.0,
        feasible=lower is not None,
        threshold_d=feasible_dimension(n, m),
    )
