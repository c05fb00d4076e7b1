import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_network, random_params
from netlearn.errors import InputError
from netlearn.game import GameParams, enumerate_equilibria, profile_space_size
from netlearn.learning import (Tolerances, Verdict, accuracy, classify, classify_multi, erf, erfc,
                               failure_mass, learning_score, markov_bounds, network_free_bounds)

mpmath.mp.dps = 40


def erf_oracle(x: float) -> float:
    """Defining integral by adaptive quadrature."""
    return float(2 / mpmath.sqrt(mpmath.pi) * mpmath.quad(lambda t: mpmath.exp(-t * t), [0, x]))


def test_erf_values():
    assert erf(0.0) == 0.0
    assert erf(1.0) == pytest.approx(0.842700792949715, abs=1e-15)
    assert erf_oracle(1.0) == pytest.approx(0.842700792949715, abs=1e-15)
    assert erf(7.0) == 1.0 and erf(-50.0) == -1.0


def test_erf_against_quadrature_grid():
    for x in np.linspace(-6, 6, 121):
        assert abs(erf(float(x)) - erf_oracle(float(x))) <= 1e-14


@settings(max_examples=300)
@given(st.floats(-8, 8), st.floats(-8, 8))
def test_erf_odd_and_monotone(a, b):
    assert erf(-a) == -erf(a)
    if a < b:
        assert erf(a) <= erf(b)


def test_erfc_is_complement_without_cancellation():
    assert erfc(1.0) == pytest.approx(1 - erf(1.0), rel=1e-14)
    assert erfc(10.0) == pytest.approx(float(mpmath.erfc(10)), rel=1e-13)


def test_tolerances_validation():
    with pytest.raises(InputError):
        Tolerances(0, 0.1, 0.1)
    with pytest.raises(InputError):
        Tolerances(0.1, 1.0, 0.1)
    with pytest.raises(InputError):
        Tolerances(0.1, 0.1, 0.0)


def test_learning_score_examples():
    p = GameParams(0.5, 0.5, 1.0)
    eps = 0.2
    expected = np.mean([erf_oracle(eps * math.sqrt(v)) for v in (1.0, 0.5, 0.75, 0.5)])
    assert learning_score(p, [3, 1, 2, 1], eps) == pytest.approx(expected, abs=1e-14)
    assert learning_score(p, [5] * 7, eps) == pytest.approx(erf(eps * math.sqrt(3.0 / 2)))
    assert learning_score(p, [10**9] * 3, eps) == pytest.approx(1.0)
    with pytest.raises(InputError):
        learning_score(p, [0, 1], eps)
    with pytest.raises(InputError):
        learning_score(p, [], eps)


def test_failure_mass_is_one_minus_score():
    p = GameParams(1, 1, 1)
    k = [1, 5, 40]
    assert failure_mass(p, k, 0.7) == pytest.approx(1 - learning_score(p, k, 0.7), rel=1e-12)


def test_classify_examples():
    tol = Tolerances(0.1, 0.5, 0.5)
    assert tol.thresholds == (0.25, 0.75)
    assert classify(1.0, tol).verdict is Verdict.LEARNING
    assert classify(0.0, tol).verdict is Verdict.NOT_LEARNING
    assert classify(0.4, tol).verdict is Verdict.INDETERMINATE
    assert classify(0.75, tol).verdict is Verdict.LEARNING
    assert classify(0.4, tol).to_dict() == {"score": 0.4, "thresholds": [0.25, 0.75],
                                            "verdict": "Indeterminate"}


@settings(max_examples=500)
@given(st.floats(0, 1), st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_classify_symmetry_and_exclusivity(score, a, b):
    tol = Tolerances(0.1, a, b)
    v = classify(score, tol)
    assert v.verdict == classify(score, tol.swapped()).verdict
    lower, upper = tol.thresholds
    assert lower < upper
    assert (v.verdict is Verdict.NOT_LEARNING) == (score < lower)
    assert (v.verdict is Verdict.LEARNING) == (score >= upper)


@settings(max_examples=300)
@given(st.floats(0, 1), st.floats(0.01, 0.9), st.floats(0.01, 0.9), st.floats(0, 0.09))
def test_classify_monotone_in_tolerances(score, a, b, grow):
    v = classify(score, Tolerances(0.1, a, b))
    if v.verdict is Verdict.LEARNING:
        assert classify(score, Tolerances(0.1, a + grow, b)).verdict is Verdict.LEARNING
        assert classify(score, Tolerances(0.1, a, b + grow)).verdict is Verdict.LEARNING


@settings(max_examples=200)
@given(st.floats(0.05, 5), st.floats(0.05, 5), st.floats(0.01, 3),
       st.lists(st.integers(1, 50), min_size=1, max_size=10), st.floats(1.0, 2.0))
def test_score_monotone(rho, rhobar, eps, counts, scale):
    p = GameParams(rho, rhobar, 1.0)
    s = learning_score(p, counts, eps)
    assert learning_score(p, [k + 1 for k in counts], eps) >= s
    assert learning_score(p, counts, eps * scale) >= s
    assert learning_score(GameParams(rho * scale, rhobar, 1), counts, eps) >= s
    assert learning_score(GameParams(rho, rhobar * scale, 1), counts, eps) >= s


def test_markov_bounds():
    lo, hi = markov_bounds(0.9, 0.2)
    assert lo == 0.0 and hi == pytest.approx(0.5)
    lo, hi = markov_bounds(0.1, 0.5)
    assert lo == pytest.approx(0.8) and hi == 1.0


def test_network_free_bounds():
    p = GameParams(1, 1, 1)
    assert network_free_bounds(p, 5, Tolerances(100, 0.1, 0.1)).verdict is Verdict.LEARNING
    assert network_free_bounds(p, 2, Tolerances(1e-4, 0.1, 0.1)).verdict is Verdict.NOT_LEARNING
    r = network_free_bounds(p, 10, Tolerances(0.3, 0.1, 0.1))
    assert r.upper_score == pytest.approx(erf_oracle(0.3 * math.sqrt(5.5)), abs=1e-14)
    assert r.lower_score == pytest.approx(erf_oracle(0.3), abs=1e-14)
    # erf(0.3 sqrt(5.5)) = 0.680 is already below 0.81 with every agent informed
    assert r.thresholds == pytest.approx((0.81, 0.99))
    assert r.upper_score == pytest.approx(0.68, abs=1e-3)
    assert r.verdict is Verdict.NOT_LEARNING
    with pytest.raises(InputError):
        network_free_bounds(p, 0, Tolerances(0.3, 0.1, 0.1))


class _Eq:
    def __init__(self, counts):
        self.counts = counts


def test_classify_multi(four, four_params):
    tol = Tolerances(0.5, 0.2, 0.2)
    single = classify_multi(four_params, four, tol, [_Eq((3, 1, 2, 1))])
    assert single == classify(learning_score(four_params, (3, 1, 2, 1), 0.5), tol)
    both = classify_multi(four_params, four, tol, [_Eq((3, 3, 3)), _Eq((1, 1, 1))])
    assert both.score == learning_score(four_params, (1, 1, 1), 0.5)
    with pytest.raises(InputError):
        classify_multi(four_params, four, tol, [])


def test_classify_multi_matches_scan():
    rng = np.random.default_rng(4)
    tol = Tolerances(0.4, 0.3, 0.3)
    for _ in range(30):
        net = random_network(rng, int(rng.integers(2, 6)), 0.4)
        if profile_space_size(net) > 2000:
            continue
        params = random_params(rng)
        eqs = enumerate_equilibria(params, net)
        if not eqs:
            continue
        scan = min(np.mean([accuracy(params, k, 0.4) for k in e.counts]) for e in eqs)
        assert classify_multi(params, net, tol, eqs).score == pytest.approx(scan, abs=1e-15)
