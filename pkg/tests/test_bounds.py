import itertools
import math

import numpy as np
import pytest
from scipy import integrate

from mlp_curse import bounds


def gaussian_fourth_moment():
    return integrate.quad(lambda z: z**4 * math.exp(-z * z / 2) / math.sqrt(2 * math.pi), -np.inf, np.inf)[0]


def test_constants_d1():
    c1, c2 = bounds.constants_counterexample(1)
    assert c1 == 0.0
    assert c2 == pytest.approx(gaussian_fourth_moment() ** 0.25, rel=1e-10)
    assert c2 == pytest.approx(1.3160740129, rel=1e-9)


def test_constants_d2_against_monte_carlo():
    c1, _ = bounds.constants_counterexample(2)
    assert c1 == pytest.approx(3**0.25, rel=1e-15)
    rng = np.random.default_rng(1)
    chi = rng.chisquare(1, 10_000_000)
    assert (chi**2).mean() ** 0.25 == pytest.approx(c1, rel=0.01)


def test_constants_d101():
    c1, _ = bounds.constants_counterexample(101)
    assert c1 == pytest.approx(10200**0.25, rel=1e-15)
    assert c1 == pytest.approx(10.0499, rel=1e-3)
    rng = np.random.default_rng(2)
    chi = rng.chisquare(100, 2_000_000)
    assert (chi**2).mean() ** 0.25 == pytest.approx(c1, rel=0.005)


def test_constants_from_user_moments():
    assert bounds.constants_from_moments(16.0, 81.0) == (2.0, 3.0)


@pytest.mark.parametrize(
    "d, n, expected",
    [(1, 1, 3**0.25), (2048, 1, 3**0.25 * (2047 * 2049) ** 0.25), (2048, 2, 16170)],
)
def test_upper_moment_fV(d, n, expected):
    assert bounds.upper_moment_fV(d, n) == pytest.approx(expected, rel=1e-3)


def test_upper_moment_fV_exceeds_measured_scale():
    assert bounds.upper_moment_fV(2048, 1) == pytest.approx(59.57, rel=1e-3)
    assert bounds.upper_moment_fV(2048, 1) > math.sqrt(2047)


@pytest.mark.parametrize("d, n, expected", [(1, 1, 36.0), (2048, 1, 73728.0), (100, 3, 12_960_000.0)])
def test_upper_error(d, n, expected):
    assert bounds.upper_error(d, n) == pytest.approx(expected, rel=1e-14)


def test_lower_moment_fV():
    assert bounds.lower_moment_fV(2048, 1, 1) == pytest.approx(7.761, abs=1e-3)
    assert bounds.lower_moment_fV(1223, 1, 1) is None
    assert bounds.lower_moment_fV(1224, 1, 1) == 6.0


def test_lower_error():
    assert bounds.lower_error(2048, 1, 1) == pytest.approx(6.761, abs=1e-3)
    assert bounds.lower_error(1224, 1, 1) == 5.0
    assert bounds.lower_error(100, 2, 1) is None


def test_feasible_dimension():
    assert bounds.feasible_dimension(1, 1) == 1224
    assert bounds.feasible_dimension(2, 1) == 2_996_352
    assert bounds.feasible_dimension(3, 2) == pytest.approx(8.80e10, rel=1e-3)
    assert bounds.feasible_dimension(200, 50) == math.inf


def test_report_fields():
    rep = bounds.bound_report(1223, 1, 1)
    assert not rep.feasible and rep.lower_error is None and rep.lower_moment_fV is None
    rep = bounds.bound_report(1224, 1, 1)
    assert rep.feasible and rep.lower_error == 5.0


def test_sandwich_ordering_grid():
    for n, m in itertools.product(range(1, 4), range(1, 3)):
        threshold = bounds.feasible_dimension(n, m)
        for factor in (1, 2, 10, 1000):
            d = int(threshold * factor)
            assert bounds.lower_error(d, n, m) < bounds.upper_error(d, n)


def test_monotone_in_d():
    for n, m in ((1, 1), (2, 1), (1, 3)):
        d0 = int(bounds.feasible_dimension(n, m))
        ds = [d0, d0 + 1, 2 * d0, 10 * d0]
        lows = [bounds.lower_moment_fV(d, n, m) for d in ds]
        ups = [bounds.upper_error(d, n) for d in ds]
        assert all(b > a for a, b in zip(lows, lows[1:]))
        assert all(b > a for a, b in zip(ups, ups[1:]))


def test_growth_witness_from_formula():
    ratios = [bounds.lower_error(d, 1, 1) / d**0.25 for d in (2048, 8192, 32768)]
    assert ratios[0] < ratios[1] < ratios[2]


def test_seminorm_upper_bound_dominates_corollary_moment_scale():
    # with g(0) = 0 the seminorm bound on E[U^2 + |V|^2]^(1/2) is finite and positive
    assert 0 < bounds.upper_second_moment_seminorm(2048, 1) < math.inf
