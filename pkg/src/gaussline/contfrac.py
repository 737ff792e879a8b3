"""Exact continued-fraction arithmetic for the Gauss map.

Words are plain tuples of positive integers.  Continuants are exact Python
integers, cylinder endpoints are :class:`fractions.Fraction`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence, Union

Word = tuple[int, ...]
Real = Union[float, Fraction, int]

THETA = (1.0 + math.sqrt(5.0)) / 2.0
GOLDEN_POINT = (math.sqrt(5.0) - 1.0) / 2.0

_FLOAT_EPS = 2.0 ** -52


class EmptyWordError(ValueError):
    pass


@dataclass(frozen=True)
class GoldenConstants:
    theta: float = THETA
    # q_n >= Fib(n+1) >= theta^(n-1), so c0 = 1/theta is admissible
    c0: float = 1.0 / THETA


GOLDEN = GoldenConstants()


class ConvergentQuad(NamedTuple):
    """Numerators and denominators of the (n-1)th and nth convergents."""

    p_prev: int
    q_prev: int
    p: int
    q: int

    @property
    def determinant(self) -> int:
        return self.q * self.p_prev - self.q_prev * self.p


@dataclass(frozen=True)
class CylinderInterval:
    low: Fraction
    high: Fraction
    orientation: int  # (-1)^n: +1 when T_word is increasing

    @property
    def length(self) -> Fraction:
        return self.high - self.low

    @property
    def midpoint(self) -> Fraction:
        return (self.low + self.high) / 2

    def contains(self, other: "CylinderInterval") -> bool:
        return self.low <= other.low and other.high <= self.high


def as_word(digits: Iterable[int]) -> Word:
    word = tuple(int(d) for d in digits)
    for d in word:
        if d < 1:
            raise ValueError(f"continued fraction digits must be >= 1, got {d}")
    return word


def parse_word(text: str) -> Word:
    text = text.strip()
    if not text:
        return ()
    return as_word(int(tok) for tok in text.split(","))


def continuants(word: Sequence[int]) -> ConvergentQuad:
    if len(word) == 0:
        raise EmptyWordError("empty word has no continuant")
    if min(word) < 1:
        raise ValueError(f"continued fraction digits must be >= 1, got {min(word)}")
    # seeds p_{-1}=1, p_0=0, q_{-1}=0, q_0=1
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    for a in word:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
    return ConvergentQuad(p_prev, q_prev, p, q)


def _denominator(word: Sequence[int]) -> int:
    q_prev, q = 0, 1
    for a in word:
        q_prev, q = q, a * q + q_prev
    return q


def continuant_sequence(word: Sequence[int]) -> list[int]:
    """Return [q_0, q_1, ..., q_n] for the word."""
    qs = [1]
    q_prev, q = 0, 1
    for a in word:
        q_prev, q = q, a * q + q_prev
        qs.append(q)
    return qs


def value_of(word: Sequence[int]) -> Fraction:
    c = continuants(word)
    return Fraction(c.p, c.q)


def log_continuant(word: Sequence[int]) -> float:
    """log q_n computed with rescaling, so it never overflows.

    Tracks the ratio r = q_{k-1}/q_k and accumulates log(a_k + r).
    """
    if len(word) == 0:
        raise EmptyWordError("empty word has no continuant")
    total = 0.0
    r = 0.0
    for a in word:
        if a < 1:
            raise ValueError(f"continued fraction digits must be >= 1, got {a}")
        step = a + r
        total += math.log(step)
        r = 1.0 / step
    return total


def mirror(word: Sequence[int]) -> Word:
    return tuple(reversed(tuple(word)))


def cylinder(word: Sequence[int]) -> CylinderInterval:
    c = continuants(word)
    e0 = Fraction(c.p, c.q)
    e1 = Fraction(c.p + c.p_prev, c.q + c.q_prev)
    orientation = 1 if len(word) % 2 == 0 else -1
    lo, hi = (e0, e1) if e0 < e1 else (e1, e0)
    return CylinderInterval(lo, hi, orientation)


def _check_unit(x: Real) -> None:
    if not 0 <= x <= 1:
        raise ValueError(f"x must lie in [0, 1], got {x}")


def inverse_branch(word: Sequence[int], x: Real) -> Real:
    """T_word(x) = (p_prev x + p) / (q_prev x + q); exact for Fraction x."""
    _check_unit(x)
    c = continuants(word)
    if isinstance(x, float):
        return (c.p_prev * x + c.p) / (c.q_prev * x + c.q)
    x = Fraction(x)
    return (c.p_prev * x + c.p) / (c.q_prev * x + c.q)


def inverse_branch_derivative(word: Sequence[int], x: Real) -> Real:
    _check_unit(x)
    c = continuants(word)
    sign = 1 if len(word) % 2 == 0 else -1
    if isinstance(x, float):
        return sign / (c.q_prev * x + c.q) ** 2
    x = Fraction(x)
    return Fraction(sign) / (c.q_prev * x + c.q) ** 2


def gauss_step(x: Real) -> tuple[int, Real]:
    """One application of T(x) = 1/x mod 1, returning (digit, remainder)."""
    if not 0 < x < 1:
        raise ValueError(f"gauss_step needs 0 < x < 1, got {x}")
    if isinstance(x, float):
        inv = 1.0 / x
        digit = int(math.floor(inv))
        return digit, inv - digit
    inv = 1 / Fraction(x)
    digit = inv.numerator // inv.denominator
    return digit, inv - digit


def cf_digits(x: Real, max_n: int) -> Word:
    """Continued-fraction digits of x in (0, 1).

    Exact rationals use Euclid and return the canonical form (last digit
    >= 2 unless the word is (1,)).  Floats stop once the remainder is
    swamped by accumulated rounding, i.e. rem < 2^-52 * q_n^2.
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    if not 0 < x < 1:
        raise ValueError(f"cf_digits needs 0 < x < 1, got {x}")
    digits: list[int] = []
    if not isinstance(x, float):
        r = Fraction(x)
        num, den = r.numerator, r.denominator
        while num and len(digits) < max_n:
            a, rem = divmod(den, num)
            digits.append(a)
            num, den = rem, num
        return tuple(digits)
    q_prev, q = 0, 1
    rem: float = x
    while len(digits) < max_n:
        a, rem = gauss_step(rem)
        digits.append(a)
        q_prev, q = q, a * q + q_prev
        if rem <= 0.0 or rem < _FLOAT_EPS * float(q) ** 2:
            break
    return tuple(digits)


def quasi_independence_ratio(word: Sequence[int], j: int) -> Fraction:
    """q_n(a) / (q_{n-j}(a_1..a_{n-j}) * q_j(a_{n-j+1}..a_n)), always in [1/2, 4]."""
    n = len(word)
    if not 1 <= j < n:
        raise ValueError(f"j must satisfy 1 <= j < n={n}, got {j}")
    if min(word) < 1:
        raise ValueError("continued fraction digits must be >= 1")
    head = _denominator(word[: n - j])
    tail = _denominator(word[n - j:])
    return Fraction(_denominator(word), head * tail)


def fibonacci(n: int) -> int:
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a
