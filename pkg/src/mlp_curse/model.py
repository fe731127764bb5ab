"""Problem data for semilinear heat equations on [0, 1] x R^d.

The equation is ``u_t + 1/2 Lap u + f(grad u) = 0`` with ``u(1, .) = g``.
:func:`counterexample` builds the instance ``g(x) = |x_1|``,
``f(v) = ||(v_2, ..., v_d)||`` whose solution ignores ``f`` entirely, because
the solution only depends on ``x_1`` and so its gradient has no components
in directions 2..d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import erf

Vector = np.ndarray

__all__ = [
    "ExactSolution",
    "ProblemSpec",
    "MissingExactSolution",
    "counterexample",
    "exact_value",
    "exact_gradient",
    "pde_residual",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class MissingExactSolution(ValueError):
    """Raised when an operation needs ``ProblemSpec.exact`` and it is absent."""


@dataclass(frozen=True)
class ExactSolution:
    value: Callable[[float, Vector], float]
    gradient: Callable[[float, Vector], Vector]


@dataclass(frozen=True)
class ProblemSpec:
    """Dimension, terminal condition ``g``, gradient nonlinearity ``f``.

    ``gamma`` is a seminorm majorant of the increments of ``g``
    (``|g(a) - g(b)| <= gamma(a - b)``); only the bounds module uses it.
    ``kind`` tags built-in instances so the compiled core can pick them up.
    """

    d: int
    g: Callable[[Vector], float]
    f: Callable[[Vector], float]
    exact: Optional[ExactSolution] = None
    gamma: Optional[Callable[[Vector], float]] = None
    kind: str = "custom"

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")


def _g_abs_first(x: Vector) -> float:
    return abs(float(x[0]))


def _f_tail_norm(v: Vector) -> float:
    tail = np.asarray(v, dtype=np.float64)[1:]
    return math.sqrt(float(np.dot(tail, tail)))


def exact_value(t: float, x: Vector) -> float:
    """``E|x_1 + sqrt(1 - t) Z|`` for standard normal ``Z``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    a = float(x[0])
    if t == 1.0:
        return abs(a)
    sigma = math.sqrt(1.0 - t)
    return sigma * SQRT_2_OVER_PI * math.exp(-a * a / (2.0 * sigma * sigma)) + a * math.erf(
        a / (sigma * math.sqrt(2.0))
    )


def exact_gradient(t: float, x: Vector) -> Vector:
    if not 0.0 <= t < 1.0:
        raise ValueError(f"t must lie in [0, 1), got {t}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    grad[0] = erf(x[0] / math.sqrt(2.0 * (1.0 - t)))
    return grad


def counterexample(d: int) -> ProblemSpec:
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return ProblemSpec(
        d=d,
        g=_g_abs_first,
        f=_f_tail_norm,
        exact=ExactSolution(value=exact_value, gradient=exact_gradient),
        gamma=_g_abs_first,
        kind="counterexample",
    )


def pde_residual(spec: ProblemSpec, t: float, x: Vector, h: float = 1e-4) -> float:
    """``u_t + 1/2 Lap u + f(grad u)`` from central differences of the exact value."""
    if spec.exact is None:
        raise MissingExactSolution("pde_residual needs an exact solution")
    if h <= 0.0:
        raise ValueError("step must be positive")
    if not h < t < 1.0 - h:
        raise ValueError(f"need h < t < 1 - h, got t={t}, h={h}")
    u = spec.exact.value
    x = np.asarray(x, dtype=np.float64)
    centre = u(t, x)
    du_dt = (u(t + h, x) - u(t - h, x)) / (2.0 * h)
    lap = 0.0
    grad = np.empty_like(x)
    for j in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        up, um = u(t, xp), u(t, xm)
        lap += (up - 2.0 * centre + um) / (h * h)
        grad[j] = (up - um) / (2.0 * h)
    return du_dt + 0.5 * lap + spec.f(grad)
