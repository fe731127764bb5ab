import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from mlp_curse.model import (
    ExactSolution,
    MissingExactSolution,
    ProblemSpec,
    counterexample,
    exact_gradient,
    exact_value,
    pde_residual,
)

vectors = st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4).map(np.array)


def quad_abs_gaussian(a, sigma):
    """E|a + sigma Z| by adaptive quadrature."""
    dens = lambda z: abs(a + sigma * z) * math.exp(-z * z / 2) / math.sqrt(2 * math.pi)
    kink = -a / sigma
    left, _ = integrate.quad(dens, -np.inf, kink, epsabs=1e-13, epsrel=1e-13)
    right, _ = integrate.quad(dens, kink, np.inf, epsabs=1e-13, epsrel=1e-13)
    return left + right


def test_counterexample_data():
    spec = counterexample(4)
    assert spec.g(np.array([-2.0, 5, 1, 9])) == 2.0
    assert spec.f(np.array([7.0, 3, 4, 0])) == 5.0
    assert counterexample(1).f(np.array([7.0])) == 0.0
    assert spec.f(np.zeros(4)) == 0.0 and spec.g(np.zeros(4)) == 0.0
    with pytest.raises(ValueError):
        counterexample(0)


def test_exact_value_terminal():
    assert exact_value(1.0, np.array([-3.0, 2.0])) == 3.0


@pytest.mark.parametrize(
    "t, a, frozen",
    [(0.0, 0.0, 0.7978845608028654), (0.75, 0.0, 0.3989422804014327), (0.4, 1.3, None), (0.9, -0.2, None)],
)
def test_exact_value_matches_quadrature(t, a, frozen):
    oracle = quad_abs_gaussian(a, math.sqrt(1 - t))
    value = exact_value(t, np.array([a, 5.0, -1.0]))
    assert value == pytest.approx(oracle, abs=1e-10)
    if frozen is not None:
        assert value == pytest.approx(frozen, abs=1e-10)


def test_exact_value_domain():
    with pytest.raises(ValueError):
        exact_value(1.5, np.zeros(2))
    with pytest.raises(ValueError):
        exact_gradient(1.0, np.zeros(2))


def test_exact_gradient_examples():
    assert np.array_equal(exact_gradient(0.0, np.zeros(3)), np.zeros(3))
    g = exact_gradient(0.0, np.array([10.0, 1.0, 2.0]))
    assert abs(g[0] - 1.0) < 1e-10
    h = 1e-5
    fd = (exact_value(0.0, np.array([10.0 + h])) - exact_value(0.0, np.array([10.0 - h]))) / (2 * h)
    assert abs(fd - 1.0) < 1e-6
    assert np.all(g[1:] == 0.0)


def test_gradient_consistency(rng):
    h = 1e-5
    for _ in range(100):
        d = int(rng.integers(1, 6))
        t = float(rng.uniform(0, 0.9))
        x = rng.normal(scale=2.0, size=d)
        grad = exact_gradient(t, x)
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            fd = (exact_value(t, x + e) - exact_value(t, x - e)) / (2 * h)
            assert abs(grad[j] - fd) < 1e-6


def test_terminal_consistency(rng):
    spec = counterexample(3)
    for _ in range(100):
        x = rng.normal(scale=3.0, size=3)
        assert exact_value(1.0, x) == spec.g(x)


@pytest.mark.parametrize(
    "d, t, x", [(5, 0.5, [0.3, 1, -1, 2, 0]), (1, 0.2, [0.7])]
)
def test_pde_residual_counterexample(d, t, x):
    assert abs(pde_residual(counterexample(d), t, np.array(x, dtype=float), 1e-4)) < 1e-5


def test_pde_residual_linear_terminal():
    exact = ExactSolution(value=lambda t, x: float(x[0]), gradient=lambda t, x: np.eye(len(x))[0])
    spec = ProblemSpec(d=3, g=lambda x: float(x[0]), f=lambda v: 0.0, exact=exact)
    assert abs(pde_residual(spec, 0.5, np.array([0.4, 1.0, 2.0]))) < 1e-9


def test_pde_residual_needs_exact():
    spec = ProblemSpec(d=2, g=lambda x: 0.0, f=lambda v: 0.0)
    with pytest.raises(MissingExactSolution):
        pde_residual(spec, 0.5, np.zeros(2))


@given(vectors, vectors)
def test_g_increment_majorant(a, b):
    spec = counterexample(4)
    assert abs(spec.g(a) - spec.g(b)) <= spec.gamma(a - b) + 1e-12


@given(vectors, vectors, st.floats(-1e3, 1e3))
def test_f_is_seminorm(a, b, lam):
    f = counterexample(4).f
    assert f(a + b) <= f(a) + f(b) + 1e-9 * (1 + f(a) + f(b))
    assert f(lam * a) == pytest.approx(abs(lam) * f(a), rel=1e-12, abs=1e-12)


@given(vectors)
def test_symmetry(v):
    spec = counterexample(4)
    assert spec.f(v) == spec.f(-v)
    assert spec.g(v) == spec.g(-v)
