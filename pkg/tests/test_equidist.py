import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussline.equidist import (
    del_partial_sums,
    dirac_fourier,
    equidist_report,
    erdos_turan_bound,
    explicit_sequence,
    lebesgue_fourier,
    normality_experiment,
    orbit_points,
    power_base,
    star_discrepancy,
    weyl_sum,
)
from gaussline.errors import DomainError
from gaussline.fourier import transform_cylinder
from gaussline.measure import Bernoulli, gauss, lebesgue, minkowski, sample_exact


def test_orbit_spec_validation():
    with pytest.raises(DomainError):
        power_base(1, 10)
    with pytest.raises(DomainError):
        explicit_sequence([1, 3, 3])
    assert power_base(3, 4).terms() == [3, 9, 27, 81]


def test_orbit_points_exact():
    u = orbit_points(Fraction(1, 3), power_base(2, 6))
    np.testing.assert_allclose(u, [2 / 3, 1 / 3] * 3, atol=1e-16)
    x = Fraction(1, 2 ** 200 + 1)
    u = orbit_points(x, power_base(2, 210))
    # 2^200 x mod 1 = 1 - x
    assert u[199] == pytest.approx(1 - float(x), abs=1e-15)


def test_weyl_examples():
    assert weyl_sum(0, power_base(2, 100), 1) == 1
    w = weyl_sum(Fraction(1, 3), power_base(2, 1000), 1)
    assert abs(w) >= 0.5 - 1 / 1000
    with pytest.raises(DomainError):
        weyl_sum(0.3, power_base(2, 10), 0)


def test_weyl_lebesgue_samples_small():
    N = 2 ** 15
    spec = power_base(2, N)
    bits = N + 64
    small = 0
    for j in range(50):
        x = sample_exact(lebesgue(), 17, bits, index=j)
        small += abs(weyl_sum(x, spec, 1)) <= 0.05
    assert small >= 45


@given(st.fractions(0, 1, max_denominator=10 ** 12), st.integers(1, 20), st.integers(1, 200))
def test_weyl_properties(x, p, N):
    spec = power_base(3, 200)
    w = weyl_sum(x, spec, p, N)
    assert abs(w) <= 1 + 1e-12
    assert weyl_sum(x, spec, -p, N) == pytest.approx(w.conjugate(), abs=1e-12)
    assert weyl_sum(x + 1, spec, p, N) == pytest.approx(w, abs=1e-12)


def test_star_discrepancy_examples():
    for N in (1, 10, 1000):
        assert star_discrepancy(np.arange(N) / N) == pytest.approx(1 / N, abs=1e-15)
    assert star_discrepancy(np.full(7, 0.5)) == 0.5
    assert star_discrepancy([0.0]) == 1.0
    with pytest.raises(DomainError):
        star_discrepancy([])


def test_erdos_turan_examples():
    assert erdos_turan_bound({k: 0j for k in range(1, 100)}) == pytest.approx(0.03)
    assert erdos_turan_bound({1: 1 + 0j}) == pytest.approx(4.5)
    with pytest.raises(DomainError):
        erdos_turan_bound({1: 0j, 3: 0j})


def _weyl_points(u, k):
    ph = 2 * math.pi * k * u
    return complex(np.cos(ph).mean(), np.sin(ph).mean())


def test_erdos_turan_dominates_discrepancy():
    rng = np.random.default_rng(3)
    for _ in range(100):
        u = rng.random(1000)
        bound = erdos_turan_bound({k: _weyl_points(u, k) for k in range(1, 101)})
        assert bound >= star_discrepancy(u)
    N = 64
    u = np.arange(N) / N
    bound = erdos_turan_bound({k: _weyl_points(u, k) for k in range(1, 11)})
    assert bound >= star_discrepancy(u)


def test_del_lebesgue_terms_exact():
    dels = del_partial_sums(lebesgue_fourier, power_base(2, 64), 1, 64)
    assert dels.terms == [1.0 / N ** 2 for N in range(1, 65)]
    assert dels.partial[-1] < math.pi ** 2 / 6
    dels = del_partial_sums(lebesgue_fourier, explicit_sequence([1, 4, 9, 16, 25, 36]), 3, 6)
    assert dels.terms == [1.0 / N ** 2 for N in range(1, 7)]


def test_del_dirac_harmonic():
    dels = del_partial_sums(dirac_fourier, power_base(2, 100), 1, 100)
    harmonic = np.cumsum(1.0 / np.arange(1, 101))
    np.testing.assert_allclose(dels.partial, harmonic, rtol=1e-14)
    # differences 2^k - 2^m are pairwise distinct
    assert dels.evaluations == 1 + 100 * 99


def test_del_caches_and_budget():
    from gaussline.errors import BudgetError

    with pytest.raises(BudgetError):
        del_partial_sums(dirac_fourier, power_base(2, 50), 1, 50, budget=10)
    with pytest.raises(DomainError):
        del_partial_sums(dirac_fourier, power_base(2, 5), 0, 5)


def test_del_minkowski_stays_below_dirac():
    def mu_hat(xi):
        return transform_cylinder(minkowski(), xi, tol=1e-2).value

    dels = del_partial_sums(mu_hat, power_base(2, 12), 1, 12)
    harmonic = np.cumsum(1.0 / np.arange(1, 13))
    assert all(p < h for p, h in zip(dels.partial[1:], harmonic[1:]))
    assert all(t > 0 for t in dels.terms)


def test_equidist_report():
    rep = equidist_report(Fraction(1, 7), power_base(10, 60), ps=(1, 2), mu_hat=lebesgue_fourier, del_N=5)
    assert rep.n_points == 60
    assert 0 <= rep.discrepancy <= 1
    assert set(rep.weyl) == {(1, 60), (2, 60)}
    assert len(rep.del_partial) == 5


def test_normality_lebesgue_and_gauss():
    for model in (lebesgue(), gauss()):
        rep = normality_experiment(model, 2, 5, 2 ** 12, seed=1)
        assert rep.mean <= 0.05
        assert rep.calibration_flag
        assert len(rep.discrepancies) == 5


def test_normality_dirac_like_reports_only():
    rep = normality_experiment(Bernoulli((1.0,)), 2, 2, 2 ** 10, seed=0)
    assert 0 <= rep.mean <= 1


def test_normality_validation():
    with pytest.raises(DomainError):
        normality_experiment(lebesgue(), 1, 5, 10)
    with pytest.raises(DomainError):
        normality_experiment(lebesgue(), 2, 0, 10)
