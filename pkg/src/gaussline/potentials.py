"""Gibbs potentials and digit alphabets.

Every potential handled here is a linear combination of a per-digit
log-weight and a multiple of -log|T'|.  ``normal_form`` reduces any
potential to that pair, which is all the Birkhoff-sum code needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from .errors import DomainError


@dataclass(frozen=True)
class Finite:
    digits: tuple[int, ...]

    def __post_init__(self):
        digits = tuple(sorted(set(int(d) for d in self.digits)))
        if not digits:
            raise DomainError("alphabet must be nonempty")
        if digits[0] < 1:
            raise DomainError("alphabet digits must be >= 1")
        object.__setattr__(self, "digits", digits)

    @property
    def size(self) -> int:
        return len(self.digits)

    @property
    def max_digit(self) -> int:
        return self.digits[-1]

    def __contains__(self, d) -> bool:
        return d in self.digits


@dataclass(frozen=True)
class TruncatedNaturals:
    """{1, ..., a_max}; tail_bound is the largest neglected tail we accept."""

    a_max: int
    tail_bound: float = 1e-6

    def __post_init__(self):
        if self.a_max < 2:
            raise DomainError("TruncatedNaturals needs a_max >= 2")

    @property
    def digits(self) -> tuple[int, ...]:
        return tuple(range(1, self.a_max + 1))

    @property
    def size(self) -> int:
        return self.a_max

    @property
    def max_digit(self) -> int:
        return self.a_max

    def __contains__(self, d) -> bool:
        return 1 <= d <= self.a_max


Alphabet = Union[Finite, TruncatedNaturals]


def finite(*digits: int) -> Finite:
    if len(digits) == 1 and not isinstance(digits[0], int):
        digits = tuple(digits[0])
    return Finite(tuple(digits))


def parse_alphabet(text: str) -> Alphabet:
    text = text.strip()
    if text.startswith("N:") or text.startswith("n:"):
        return TruncatedNaturals(int(text[2:]))
    toks = [t for t in text.split(",") if t.strip()]
    if not toks:
        raise DomainError("alphabet must be nonempty")
    return Finite(tuple(int(t) for t in toks))


@dataclass(frozen=True)
class GeometricTail:
    """p_a = coef * ratio**a for digits beyond the explicit weights."""

    coef: float
    ratio: float

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise DomainError("geometric tail ratio must lie in (0, 1)")

    def weight(self, a: int) -> float:
        return self.coef * self.ratio ** a

    def tail_sum(self, a: int) -> float:
        """sum_{b >= a} coef * ratio**b."""
        return self.coef * self.ratio ** a / (1.0 - self.ratio)


@dataclass(frozen=True)
class BernoulliLog:
    """phi(x) = log p_{a_1(x)}.

    ``weights`` maps explicit digits to log-probabilities; digits above the
    largest explicit digit fall through to ``tail`` when one is given.
    """

    weights: Mapping[int, float] = field(default_factory=dict)
    tail: Optional[GeometricTail] = None

    def __post_init__(self):
        object.__setattr__(self, "weights", dict(sorted(self.weights.items())))
        total = sum(math.exp(w) for w in self.weights.values())
        if self.tail is not None:
            start = (max(self.weights) + 1) if self.weights else 1
            total += self.tail.tail_sum(start)
        if total > 1 + 1e-12:
            raise DomainError(f"Bernoulli weights sum to {total} > 1")

    @classmethod
    def from_probs(cls, probs: Sequence[float], tail: Optional[GeometricTail] = None):
        weights = {a: (math.log(p) if p > 0 else -math.inf) for a, p in enumerate(probs, start=1)}
        return cls(weights, tail)

    def log_weight(self, a: int) -> float:
        if a in self.weights:
            return self.weights[a]
        if self.tail is not None and (not self.weights or a > max(self.weights)):
            w = self.tail.weight(a)
            return math.log(w) if w > 0 else -math.inf
        return -math.inf


@dataclass(frozen=True)
class TLogDeriv:
    """-t log|T'(x)| = 2 t log x."""

    t: float


@dataclass(frozen=True)
class Combo:
    terms: tuple[tuple[float, "Potential"], ...]


Potential = Union[BernoulliLog, TLogDeriv, Combo]


def zero_potential() -> Potential:
    return TLogDeriv(0.0)


@dataclass(frozen=True)
class NormalForm:
    """phi = g(a_1) + t * (-log|T'|) where g is a per-digit log weight."""

    bernoulli: tuple[tuple[float, BernoulliLog], ...]
    t: float

    def digit_weight(self, a: int) -> float:
        total = 0.0
        for coef, b in self.bernoulli:
            if coef == 0:
                continue
            w = b.log_weight(a)
            if w == -math.inf:
                return -math.inf if coef > 0 else math.inf
            total += coef * w
        return total


def normal_form(phi: Potential) -> NormalForm:
    if isinstance(phi, BernoulliLog):
        return NormalForm(((1.0, phi),), 0.0)
    if isinstance(phi, TLogDeriv):
        return NormalForm((), float(phi.t))
    if isinstance(phi, Combo):
        bern: list[tuple[float, BernoulliLog]] = []
        t = 0.0
        for coef, sub in phi.terms:
            nf = normal_form(sub)
            bern.extend((coef * c, b) for c, b in nf.bernoulli)
            t += coef * nf.t
        return NormalForm(tuple(bern), t)
    raise TypeError(f"not a potential: {phi!r}")


def evaluate(phi: Potential, x: float) -> float:
    """phi at a single point x in (0, 1)."""
    if not 0 < x < 1:
        raise DomainError("potentials are evaluated on (0, 1)")
    nf = normal_form(phi)
    a = int(math.floor(1.0 / x))
    return nf.digit_weight(a) + nf.t * 2.0 * math.log(x)
