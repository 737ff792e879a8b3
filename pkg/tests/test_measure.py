import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussline.contfrac import GOLDEN, cf_digits, continuants, value_of
from gaussline.errors import DomainError
from gaussline.measure import (
    Bernoulli,
    DyadicRational,
    box_inverse,
    box_inverse_array,
    bernoulli,
    cdf,
    cylinder_mass,
    from_potential,
    gauss,
    geometric_bernoulli,
    lebesgue,
    mass_weights,
    minkowski,
    question_mark,
    question_mark_array,
    sample,
    sample_exact,
    tail_mass,
)
from gaussline.potentials import TLogDeriv, finite
from gaussline.thermo import enumerate_words

STOCK = {
    "minkowski": minkowski(),
    "bernoulli": bernoulli(0.5, 0.3, 0.2),
    "geometric": geometric_bernoulli(0.4),
    "lebesgue": lebesgue(),
    "gauss": gauss(),
}


def test_cylinder_mass_examples():
    assert cylinder_mass(minkowski(), (1, 2)) == 1 / 8
    assert cylinder_mass(lebesgue(), (1,)) == 0.5
    assert cylinder_mass(gauss(), (1,)) == pytest.approx(math.log(4 / 3) / math.log(2), rel=1e-14)


def test_cylinder_mass_rejects_digits_outside_alphabet():
    with pytest.raises(DomainError):
        cylinder_mass(bernoulli(0.5, 0.5), (3,))


def test_tail_mass_examples():
    assert tail_mass(minkowski(), 5) == 1 / 16
    assert tail_mass(lebesgue(), 2) == 0.5
    for model in STOCK.values():
        assert tail_mass(model, 1) == pytest.approx(1.0, abs=1e-12)


def test_minkowski_tail_law_exact():
    for n in range(1, 41):
        assert tail_mass(minkowski(), n) == 2.0 ** (1 - n)


@pytest.mark.parametrize("name", sorted(STOCK))
def test_additivity(name):
    model = STOCK[name]
    for n in range(0, 4):
        for w in enumerate_words((1, 2, 3), n) if n else [()]:
            w = tuple(int(a) for a in w)
            parent = cylinder_mass(model, w)
            top = 2000
            digits = [d for d in range(1, top) if not isinstance(model, Bernoulli) or model.p(d) > 0]
            kids = math.fsum(cylinder_mass(model, w + (d,)) for d in digits)
            # children beyond `top` sit in a cylinder of relative size < 2/top
            tail = parent * (3.0 / top if name in ("lebesgue", "gauss") else 0.0)
            if isinstance(model, Bernoulli):
                tail = parent * model.tail_sum(top)
            assert kids <= parent * (1 + 1e-12)
            assert parent - kids <= tail + 1e-14


def test_mass_weights_match_scalar():
    words = enumerate_words((1, 2, 3), 4)
    for model in STOCK.values():
        vec = mass_weights(model, words)
        ref = [cylinder_mass(model, tuple(int(a) for a in w)) for w in words]
        np.testing.assert_allclose(vec, ref, rtol=1e-12)


def test_potential_model_masses_close_to_additive():
    model = from_potential(TLogDeriv(0.53128), finite(1, 2))
    words = enumerate_words((1, 2), 8)
    total = mass_weights(model, words).sum()
    assert total == pytest.approx(1.0, rel=0.5)
    assert model.gibbs_constant >= 1.0


def test_question_mark_examples():
    assert question_mark(Fraction(1, 2)).fraction == Fraction(1, 2)
    assert question_mark(Fraction(2, 5)).fraction == Fraction(3, 8)
    assert question_mark(0).fraction == 0
    assert question_mark(1).fraction == 1
    assert question_mark((2, 2)) == DyadicRational(3, 3)


def test_question_mark_rejects_floats_and_range():
    with pytest.raises(DomainError):
        question_mark(0.4)
    with pytest.raises(DomainError):
        question_mark(Fraction(3, 2))


def test_dyadic_normalised():
    d = DyadicRational(12, 5)
    assert (d.numerator, d.exponent) == (3, 3)
    assert str(d) == "3/8"
    assert DyadicRational.from_fraction(Fraction(5, 16)) == DyadicRational(5, 4)
    with pytest.raises(DomainError):
        DyadicRational.from_fraction(Fraction(1, 3))


def test_box_inverse_examples():
    assert box_inverse(Fraction(2, 3), 12) == (1,) * 12
    assert box_inverse(Fraction(1, 2)) == (2,)
    assert box_inverse(Fraction(3, 8)) == (2, 2)
    assert box_inverse(Fraction(1)) == (1,)
    for bad in (0, Fraction(-1, 2), Fraction(3, 2)):
        with pytest.raises(DomainError):
            box_inverse(bad)


def test_golden_question_mark_series():
    for n in range(1, 50):
        assert question_mark((1,) * n).fraction == Fraction(2, 3) * (1 - Fraction(-1, 2) ** n)


canonical_words = st.lists(st.integers(1, 6), min_size=1, max_size=10).map(tuple).filter(
    lambda w: w == (1,) or w[-1] >= 2)


@given(canonical_words)
def test_round_trip(word):
    assert box_inverse(question_mark(word)) == word
    assert question_mark(value_of(word)) == question_mark(word)


@given(st.lists(st.lists(st.integers(1, 6), min_size=1, max_size=10), min_size=1, max_size=50))
def test_batch_paths_match_scalar(rows):
    width = 10
    arr = np.zeros((len(rows), width), dtype=np.int64)
    for i, r in enumerate(rows):
        arr[i, :len(r)] = r
    nums = question_mark_array(arr)
    back, lens = box_inverse_array(nums, width=12)
    for i, r in enumerate(rows):
        q = question_mark(tuple(r))
        assert Fraction(int(nums[i]), 2 ** 62) == q.fraction
        assert tuple(back[i, :lens[i]]) == box_inverse(q)


def test_question_mark_strictly_increasing():
    rng = random.Random(7)
    xs = sorted({Fraction(rng.randint(0, 10 ** 6), 10 ** 6) for _ in range(300)})
    vals = [question_mark(x).fraction for x in xs]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_question_mark_cdf_identity():
    rng = random.Random(11)
    mu = minkowski()
    for _ in range(50):
        q = rng.randint(2, 10 ** 6)
        x = Fraction(rng.randint(1, q - 1), q)
        value, err = cdf(mu, x)
        assert abs(value - float(question_mark(x).fraction)) <= err + 1e-15


def test_cdf_examples():
    v, e = cdf(minkowski(), Fraction(2, 5))
    assert abs(v - 3 / 8) <= e + 1e-15
    v, e = cdf(lebesgue(), 0.3)
    assert v == pytest.approx(0.3, abs=1e-15)
    for model in STOCK.values():
        v, e = cdf(model, 1)
        assert v == pytest.approx(1.0, abs=1e-12)
        assert cdf(model, 0)[0] == 0.0


def test_cdf_gauss_closed_form():
    for x in (0.1, 0.37, 0.9):
        v, e = cdf(gauss(), x)
        assert abs(v - math.log1p(x) / math.log(2)) <= e + 1e-12


def test_sample_dirac_bernoulli():
    pts = sample(Bernoulli((1.0,)), seed=3, depth=40, size=5)
    q = continuants((1,) * 40).q
    assert np.all(np.abs(pts - GOLDEN.c0) <= 2.0 / q ** 2 + 1e-16)


def test_sample_minkowski_digit_frequency():
    pts = sample(minkowski(), seed=1, size=10 ** 5)
    freq = np.mean(pts >= 0.5)
    assert abs(freq - 0.5) <= 0.01


def test_sample_lebesgue_mean():
    pts = sample(lebesgue(), seed=2, size=10 ** 5)
    assert abs(pts.mean() - 0.5) <= 0.01


def test_sample_deterministic_and_order_free():
    mu = minkowski()
    a = sample(mu, seed=5, size=1000)
    b = sample(mu, seed=5, size=1000)
    np.testing.assert_array_equal(a, b)
    tail = sample(mu, seed=5, size=200, start=800)
    np.testing.assert_array_equal(a[800:], tail)
    assert not np.array_equal(a, sample(mu, seed=6, size=1000))


def test_sample_gauss_distribution():
    pts = sample(gauss(), seed=4, size=10 ** 5)
    # mean of the Gauss density is 1/log 2 - 1
    assert abs(pts.mean() - (1 / math.log(2) - 1)) <= 0.01


def test_sample_exact_digits_follow_model():
    mu = bernoulli(0.5, 0.5)
    for i in range(20):
        x = sample_exact(mu, seed=9, bits=256, index=i)
        assert isinstance(x, Fraction)
        digits = cf_digits(x, 60)
        assert set(digits[:40]) <= {1, 2}
    assert sample_exact(mu, 9, 256, 3) == sample_exact(mu, 9, 256, 3)
