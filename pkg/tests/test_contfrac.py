import math
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussline.contfrac import (
    GOLDEN,
    EmptyWordError,
    cf_digits,
    continuant_sequence,
    continuants,
    cylinder,
    fibonacci,
    gauss_step,
    inverse_branch,
    inverse_branch_derivative,
    log_continuant,
    mirror,
    parse_word,
    quasi_independence_ratio,
    value_of,
)

words = st.lists(st.integers(1, 50), min_size=1, max_size=30).map(tuple)


def nested_value(word):
    x = Fraction(0)
    for a in reversed(word):
        x = 1 / (a + x)
    return x


def test_continuant_examples():
    c = continuants((2, 3))
    assert (c.p, c.q) == (3, 7)
    c = continuants((1,))
    assert (c.p, c.q) == (1, 1)
    c = continuants((1, 1, 1, 1))
    assert (c.q, c.q_prev) == (5, 3)


def test_empty_word_rejected():
    with pytest.raises(EmptyWordError, match="empty word has no continuant"):
        continuants(())
    with pytest.raises(EmptyWordError):
        cylinder(())
    with pytest.raises(EmptyWordError):
        log_continuant(())


def test_bad_digit_rejected():
    with pytest.raises(ValueError):
        continuants((2, 0))


def test_log_continuant_examples():
    assert log_continuant((2, 3)) == pytest.approx(math.log(7), rel=1e-12)
    assert log_continuant((1,)) == 0.0
    exact = continuants((5,) * 6).q
    assert abs(log_continuant((5,) * 6) - math.log(exact)) <= 1e-10 * math.log(exact)


@given(st.lists(st.integers(1, 10 ** 6), min_size=1, max_size=64))
def test_log_continuant_matches_exact(word):
    exact = math.log(continuants(word).q) if continuants(word).q > 1 else 0.0
    got = log_continuant(word)
    assert abs(got - exact) <= 1e-10 * max(1.0, abs(exact))


def test_log_continuant_never_overflows():
    assert math.isfinite(log_continuant((10 ** 9,) * 256))


def test_mirror_examples():
    assert mirror((2, 3)) == (3, 2)
    assert continuants((3, 2)).q == continuants((2, 3)).q == 7
    assert mirror((1,)) == (1,)
    assert continuants((1, 2, 3)).q_prev == continuants(mirror((1, 2, 3))).p


def test_cylinder_examples():
    c = cylinder((1,))
    assert (c.low, c.high) == (Fraction(1, 2), Fraction(1))
    c = cylinder((2,))
    assert (c.low, c.high) == (Fraction(1, 3), Fraction(1, 2))
    c = cylinder((2, 3))
    assert (c.low, c.high) == (Fraction(3, 7), Fraction(4, 9))
    assert c.length == Fraction(1, 63)


def test_inverse_branch_examples():
    assert inverse_branch((2,), Fraction(0)) == Fraction(1, 2)
    assert inverse_branch((2, 3), Fraction(0)) == Fraction(3, 7)
    assert inverse_branch((1, 1), Fraction(1)) == Fraction(2, 3)
    with pytest.raises(ValueError):
        inverse_branch((2,), 1.5)


def test_inverse_branch_derivative_examples():
    assert inverse_branch_derivative((2, 3), Fraction(0)) == Fraction(1, 49)
    assert inverse_branch_derivative((1,), Fraction(0)) == -1
    assert inverse_branch_derivative((1, 1, 1, 1), Fraction(1)) == Fraction(1, 64)
    with pytest.raises(ValueError):
        inverse_branch_derivative((1,), -0.1)


def test_gauss_step_examples():
    assert gauss_step(Fraction(7, 10)) == (1, Fraction(3, 7))
    assert gauss_step(Fraction(1, 3)) == (3, 0)
    d, r = gauss_step(GOLDEN.c0)
    assert d == 1 and abs(r - GOLDEN.c0) < 1e-12
    for bad in (0, 1, -0.5, Fraction(3, 2)):
        with pytest.raises(ValueError):
            gauss_step(bad)


def test_cf_digits_examples():
    assert cf_digits(Fraction(2, 5), 10) == (2, 2)
    assert cf_digits(Fraction(1, 2), 10) == (2,)
    assert cf_digits(Fraction(3, 7), 10) == (2, 3)
    with pytest.raises(ValueError):
        cf_digits(Fraction(0), 5)


def test_cf_digits_float_stops_early():
    digits = cf_digits(math.pi - 3, 100)
    assert digits[:5] == (7, 15, 1, 292, 1)
    assert len(digits) < 20


def test_quasi_independence_examples():
    assert quasi_independence_ratio((1, 1), 1) == 2
    assert quasi_independence_ratio((2, 3), 1) == Fraction(7, 6)
    with pytest.raises(ValueError):
        quasi_independence_ratio((2, 3), 2)


def test_golden_constants():
    assert abs(GOLDEN.theta ** 2 - GOLDEN.theta - 1) < 1e-12
    assert GOLDEN.c0 == pytest.approx(1 / GOLDEN.theta)


@settings(max_examples=300)
@given(words)
def test_continuants_match_nested_fraction(word):
    c = continuants(word)
    assert Fraction(c.p, c.q) == nested_value(word)
    assert math.gcd(c.p, c.q) == 1
    assert c.q * c.p_prev - c.q_prev * c.p == (-1) ** len(word)
    assert c.q >= c.q_prev >= 0


@given(words)
def test_mirror_law(word):
    c, m = continuants(word), continuants(mirror(word))
    assert m.q == c.q
    assert m.p == c.q_prev


@given(words)
def test_cylinder_length_law(word):
    cyl = cylinder(word)
    q, qp = continuants(word).q, continuants(word).q_prev
    assert cyl.length == Fraction(1, q * (q + qp))
    assert Fraction(1, 4 * q * q) <= cyl.length <= Fraction(1, q * q)
    assert 0 <= cyl.low < cyl.high <= 1
    assert cyl.orientation == (-1) ** len(word)


@given(words, st.fractions(0, 1))
def test_inverse_branch_lands_in_cylinder(word, x):
    y = inverse_branch(word, x)
    cyl = cylinder(word)
    assert cyl.low <= y <= cyl.high
    d = inverse_branch_derivative(word, x)
    q = continuants(word).q
    assert (d > 0) == (len(word) % 2 == 0)
    assert Fraction(1, 4 * q * q) <= abs(d) <= Fraction(1, q * q)


def test_cylinder_nesting_and_disjoint_siblings():
    for n in range(0, 4):
        for w in product(range(1, 6), repeat=n):
            parent = cylinder(w) if w else None
            kids = [cylinder(w + (d,)) for d in range(1, 6)]
            for k in kids:
                if parent is not None:
                    assert parent.contains(k)
            kids.sort(key=lambda c: c.low)
            for a, b in zip(kids, kids[1:]):
                assert a.high <= b.low


@given(words)
def test_golden_growth(word):
    n = len(word)
    q = continuants(word).q
    assert q >= fibonacci(n + 1) >= GOLDEN.theta ** (n - 1) - 1e-9
    assert q >= GOLDEN.c0 * GOLDEN.theta ** n * (1 - 1e-12)


@given(words)
def test_round_trip_canonical(word):
    if word[-1] == 1 and len(word) > 1:
        word = word[:-2] + (word[-2] + 1,)
    if word == (1,):
        return
    assert cf_digits(value_of(word), len(word) + 5) == word


@given(words)
def test_quasi_independence_bounds(word):
    for j in range(1, len(word)):
        assert Fraction(1, 2) <= quasi_independence_ratio(word, j) <= 4


def test_continuant_sequence_and_parse():
    assert continuant_sequence((1, 1, 1, 1)) == [1, 1, 2, 3, 5]
    assert parse_word("2, 3") == (2, 3)
    with pytest.raises(ValueError):
        parse_word("2,0")


def test_exact_for_long_words():
    word = (7,) * 256
    c = continuants(word)
    assert c.q * c.p_prev - c.q_prev * c.p == 1
    assert c.q.bit_length() > 700
