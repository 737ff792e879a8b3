import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gaussline.contfrac import GOLDEN, inverse_branch
from gaussline.errors import BracketError, BudgetError, DivergentPressureError, DomainError
from gaussline.measure import Bernoulli, bernoulli, from_potential, gauss, geometric_bernoulli, lebesgue, minkowski
from gaussline.potentials import BernoulliLog, Combo, GeometricTail, TLogDeriv, TruncatedNaturals, finite, zero_potential
from gaussline.thermo import (
    birkhoff_sum,
    criterion_tail,
    entropy_detail,
    entropy_estimate,
    enumerate_words,
    kinney_detail,
    kinney_dimension,
    lyapunov_detail,
    lyapunov_estimate,
    measure_stats,
    periodic_point,
    pressure_estimate,
    pressure_root,
    transfer_apply,
)

HALF = BernoulliLog.from_probs([0.5, 0.5])
AB = finite(1, 2)


def test_birkhoff_examples():
    assert birkhoff_sum(HALF, (1, 2), 0.3) == pytest.approx(math.log(0.25), abs=1e-15)
    assert birkhoff_sum(TLogDeriv(1), (1,), GOLDEN.c0) == pytest.approx(-2 * math.log(GOLDEN.theta), abs=1e-12)
    assert birkhoff_sum(TLogDeriv(1), (2, 3), 0.0) == pytest.approx(math.log(1 / 49), abs=1e-14)


small_words = st.lists(st.integers(1, 9), min_size=1, max_size=6).map(tuple)


@given(small_words, small_words, st.floats(0, 1))
def test_birkhoff_cocycle(u, v, x):
    phi = Combo(((1.0, BernoulliLog.from_probs([0.1] * 9)), (0.7, TLogDeriv(1.0))))
    lhs = birkhoff_sum(phi, u + v, x)
    rhs = birkhoff_sum(phi, u, float(inverse_branch(v, x))) + birkhoff_sum(phi, v, x)
    assert lhs == pytest.approx(rhs, abs=1e-12 * max(1.0, abs(lhs)))


def test_periodic_point_examples():
    assert periodic_point((1,)) == pytest.approx(GOLDEN.c0, abs=1e-15)
    assert periodic_point((2,)) == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    assert periodic_point((1, 1)) == pytest.approx(periodic_point((1,)), abs=1e-15)


@given(small_words)
def test_periodic_point_is_fixed(word):
    x = periodic_point(word)
    assert abs(float(inverse_branch(word, x)) - x) < 1e-14


def test_pressure_examples():
    assert pressure_estimate(zero_potential(), AB, 8).value == pytest.approx(math.log(2), abs=1e-14)
    assert pressure_estimate(HALF, AB, 8).value == pytest.approx(0.0, abs=1e-14)
    assert pressure_estimate(TLogDeriv(1), AB, 12).value < 0


def test_pressure_sequence_and_partitions():
    est = pressure_estimate(TLogDeriv(0.5), AB, 10)
    assert set(est.sequence) == set(range(5, 11))
    assert est.sequence[10] == est.value
    split = pressure_estimate(TLogDeriv(0.5), AB, 10, partitions=2)
    assert split.value == pytest.approx(est.value, abs=1e-14)


def test_pressure_bernoulli_envelope():
    phi = BernoulliLog.from_probs([0.2, 0.3, 0.5])
    for n in range(4, 15):
        if 3 ** n > 2 ** 24:
            break
        assert abs(pressure_estimate(phi, finite(1, 2, 3), n).value) <= 5 / n


def test_pressure_strictly_decreasing_in_s():
    values = [pressure_estimate(TLogDeriv(s), finite(1, 2, 3), 8).value for s in np.linspace(0, 1.5, 13)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_pressure_budget_refused():
    with pytest.raises(BudgetError):
        pressure_estimate(TLogDeriv(0.5), finite(1, 2, 3, 4), 10, budget=1000)


def test_pressure_truncated_naturals_tail():
    phi = TLogDeriv(1.0)
    est = pressure_estimate(phi, TruncatedNaturals(20, tail_bound=1.0), 3)
    assert 0 < est.tail_bound < 0.1
    with pytest.raises(DivergentPressureError):
        criterion_tail(TLogDeriv(0.4), 20)


def test_pressure_root_examples():
    d2 = pressure_root(AB, depth=16, tol=1e-4)
    assert abs(d2 - 0.531) <= 0.002
    with pytest.raises(BracketError):
        pressure_root(finite(1), depth=8)


def test_pressure_root_monotone_in_alphabet():
    dims = [pressure_root(finite(*range(1, N + 1)), depth=8, tol=1e-4) for N in (2, 3, 4)]
    assert all(a < b < 1 for a, b in zip(dims, dims[1:]))


def test_entropy_examples():
    assert entropy_estimate(bernoulli(0.5, 0.5), 6) == pytest.approx(math.log(2), abs=1e-14)
    assert abs(entropy_estimate(minkowski(40), 8) - 2 * math.log(2)) <= 1e-6
    assert entropy_estimate(bernoulli(1.0, 0.0), 5) == 0.0


def test_entropy_tail_too_large():
    from gaussline.errors import PrecisionError

    with pytest.raises(PrecisionError):
        entropy_detail(geometric_bernoulli(0.9, a_max=5), 4, tail_bound=1e-6)


def test_lyapunov_point_mass():
    est = lyapunov_detail(Bernoulli((1.0,)), 40)
    assert abs(est.value - 2 * math.log(GOLDEN.theta)) <= est.distortion_bound
    assert est.distortion_bound == pytest.approx(math.log(4) / 40)


def test_lyapunov_gauss_oracle():
    integral, _ = quad(lambda x: -2 * math.log(x) / (math.log(2) * (1 + x)), 0, 1)
    assert integral == pytest.approx(math.pi ** 2 / (6 * math.log(2)), rel=1e-10)
    est = lyapunov_detail(gauss(), 10)
    assert abs(est.value - integral) <= est.distortion_bound + est.quadrature_error


def test_lyapunov_matches_enumeration():
    # product measure: direct enumeration of (1/n) sum mu(a) (-log|T_a'(1/2)|)
    model = bernoulli(0.6, 0.4)
    n = 8
    words = enumerate_words((1, 2), n)
    total = 0.0
    for w in words:
        w = tuple(int(a) for a in w)
        mass = math.prod(model.p(a) for a in w)
        total += mass * (-birkhoff_sum(TLogDeriv(1), w, 0.5))
    assert lyapunov_estimate(model, n) == pytest.approx(total / n, rel=1e-9)


def test_lyapunov_at_least_golden_minimum():
    for model in (minkowski(), bernoulli(0.5, 0.5), gauss()):
        est = lyapunov_detail(model, 8)
        assert est.value >= 2 * math.log(GOLDEN.theta) - est.distortion_bound


@pytest.mark.parametrize("model", [minkowski(), bernoulli(0.5, 0.5), bernoulli(0.2, 0.3, 0.5),
                                   geometric_bernoulli(0.3), gauss(), lebesgue(),
                                   from_potential(TLogDeriv(0.5312805), AB)])
def test_stats_dimension_in_unit_interval(model):
    st_ = measure_stats(model, 8)
    assert 0 < st_.dimension_s <= 1 + st_.lyapunov_error
    assert st_.dimension_s == pytest.approx(st_.entropy_h / st_.lyapunov_lambda)


def test_stats_flags_small_lyapunov():
    st_ = measure_stats(Bernoulli((1.0,)), 20)
    assert "lambda<=1" in st_.flags


def test_kinney_examples():
    mu = minkowski()
    d10, d12 = kinney_dimension(mu, 10), kinney_dimension(mu, 12)
    assert d10 > 0.5
    assert abs(d10 - d12) <= 1e-3
    assert abs(d10 - measure_stats(mu, 10).dimension_s) < 1e-2
    est = kinney_detail(mu, 10)
    assert est.error >= 0
    with pytest.raises(DomainError):
        kinney_dimension(bernoulli(0.5, 0.5), 8)


def test_transfer_examples():
    assert transfer_apply(HALF, AB, lambda y: 1.0, 0.3, 7).real == pytest.approx(1.0, abs=1e-14)
    mink = Bernoulli((), GeometricTail(1.0, 0.5)).potential
    v = transfer_apply(mink, TruncatedNaturals(30), lambda y: 1.0, 0.4, 1)
    assert abs(v.real - (1 - 2.0 ** -30)) <= 1e-12
    v = transfer_apply(HALF, AB, lambda y: y, 0.0, 1)
    assert v.real == pytest.approx(0.75, abs=1e-15)


def test_transfer_normalisation_random_points():
    rng = np.random.default_rng(0)
    phi = BernoulliLog.from_probs([0.2, 0.3, 0.5])
    for x in rng.random(100):
        value, tail = transfer_apply(phi, finite(1, 2, 3), lambda y: 1.0, float(x), 3, with_tail=True)
        assert abs(value - 1) <= tail + 1e-13


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 1.5))
def test_transfer_matches_pressure_order(s):
    # L^n 1 and the periodic-point sum share their exponential growth rate
    n = 8
    direct = math.log(transfer_apply(TLogDeriv(s), AB, lambda y: 1.0, 0.5, n).real) / n
    assert direct == pytest.approx(pressure_estimate(TLogDeriv(s), AB, n).value, abs=math.log(4) * s / n + 1e-12)
