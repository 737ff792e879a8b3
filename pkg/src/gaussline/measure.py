"""Measure models on [0, 1]: Bernoulli (incl. the Minkowski ?-measure),
midpoint-weighted Gibbs potentials, Lebesgue and the Gauss measure.

Also home to the question-mark function, its inverse (Conway's box
function), deterministic samplers and distribution functions.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernels as K
from .contfrac import Word, as_word, cf_digits, continuants, cylinder, value_of
from .errors import DomainError
from .potentials import (
    Alphabet,
    BernoulliLog,
    GeometricTail,
    Potential,
    normal_form,
)

LOG2 = math.log(2.0)
DIGIT_CAP = 100_000  # unbounded alphabets are lumped beyond this digit


@dataclass(frozen=True)
class Bernoulli:
    """mu(I_a) = p_{a_1} ... p_{a_n}.

    ``probs`` lists p_1..p_K; an optional geometric tail supplies p_a for
    a > K exactly.  ``a_max`` truncates enumerations of infinite supports.
    """

    probs: tuple[float, ...] = ()
    tail: Optional[GeometricTail] = None
    a_max: int = 40
    name: str = "bernoulli"

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if any(p < 0 for p in self.probs):
            raise DomainError("probabilities must be nonnegative")
        if not self.probs and self.tail is None:
            raise DomainError("Bernoulli model needs weights")
        total = self.total_mass
        if total > 1 + 1e-12:
            raise DomainError(f"Bernoulli weights sum to {total} > 1")

    @property
    def support_max(self) -> Optional[int]:
        """Largest digit with positive weight, None when unbounded."""
        if self.tail is not None:
            return None
        nz = [a for a, p in enumerate(self.probs, start=1) if p > 0]
        return nz[-1] if nz else 0

    def p(self, a: int) -> float:
        if a < 1:
            return 0.0
        if a <= len(self.probs):
            return self.probs[a - 1]
        if self.tail is not None:
            return self.tail.weight(a)
        return 0.0

    def tail_sum(self, a: int) -> float:
        """sum_{b >= a} p_b, exact for the geometric tail."""
        a = max(a, 1)
        k = len(self.probs)
        explicit = math.fsum(self.probs[a - 1:]) if a <= k else 0.0
        if self.tail is None:
            return explicit
        return explicit + self.tail.tail_sum(max(a, k + 1))

    @property
    def total_mass(self) -> float:
        return self.tail_sum(1)

    @property
    def enumeration_digits(self) -> tuple[int, ...]:
        top = self.support_max if self.support_max is not None else max(self.a_max, len(self.probs))
        return tuple(a for a in range(1, top + 1) if self.p(a) > 0)

    @property
    def potential(self) -> BernoulliLog:
        return BernoulliLog.from_probs(self.probs, self.tail)


@dataclass(frozen=True)
class FinitePotential:
    """Gibbs model whose cylinder masses are pinned to w_a(1/2) e^{-nP}.

    ``gibbs_constant`` is an empirical estimate of how far those weights
    are from an additive measure (distortion and normalisation slack).
    """

    potential: Potential
    alphabet: Alphabet
    pressure: float = 0.0
    gibbs_constant: float = 1.0
    name: str = "potential"

    @cached_property
    def log_weights(self) -> np.ndarray:
        nf = normal_form(self.potential)
        g = np.full(self.alphabet.max_digit + 1, -np.inf)
        for a in self.alphabet.digits:
            g[a] = nf.digit_weight(a)
        return g

    @property
    def t(self) -> float:
        return normal_form(self.potential).t

    @property
    def enumeration_digits(self) -> tuple[int, ...]:
        return tuple(self.alphabet.digits)


@dataclass(frozen=True)
class Lebesgue:
    name: str = "lebesgue"
    a_max: int = 1000


@dataclass(frozen=True)
class GaussMeasure:
    """Density 1 / (log 2 (1 + x))."""

    name: str = "gauss"
    a_max: int = 1000


MeasureModel = Union[Bernoulli, FinitePotential, Lebesgue, GaussMeasure]


def minkowski(a_max: int = 40) -> Bernoulli:
    """The ?-measure: Bernoulli with p_a = 2^-a."""
    return Bernoulli((), GeometricTail(1.0, 0.5), a_max=a_max, name="minkowski")


def bernoulli(*probs: float) -> Bernoulli:
    if len(probs) == 1 and not isinstance(probs[0], (int, float, Fraction)):
        probs = tuple(probs[0])
    return Bernoulli(tuple(probs))


def geometric_bernoulli(ratio: float, a_max: int = 40) -> Bernoulli:
    """p_a = (1 - r) r^(a-1) over all digits."""
    return Bernoulli((), GeometricTail((1.0 - ratio) / ratio, ratio), a_max=a_max,
                     name="bernoulli-tail")


def lebesgue() -> Lebesgue:
    return Lebesgue()


def gauss() -> GaussMeasure:
    return GaussMeasure()


def from_potential(potential: Potential, alphabet: Alphabet, depth: int = 8,
                   budget: Optional[int] = None) -> FinitePotential:
    """Build a FinitePotential model, estimating pressure and Gibbs constant."""
    from .thermo import pressure_estimate

    est = pressure_estimate(potential, alphabet, depth, budget=budget)
    model = FinitePotential(potential, alphabet, est.value, 1.0)
    return FinitePotential(potential, alphabet, est.value,
                           _gibbs_constant(model, min(depth, 6)))


def _gibbs_constant(model: FinitePotential, depth: int) -> float:
    from .thermo import enumerate_words, word_continuants

    words = enumerate_words(model.alphabet.digits, depth)
    pp, qp, p, q = word_continuants(words)
    G = model.log_weights[words].sum(axis=1)
    t = model.t

    def logw(x):
        return G + t * (-2.0 * np.log(qp * x + q)) - depth * model.pressure

    mid = logw(0.5)
    spread = np.maximum(np.abs(logw(0.0) - mid), np.abs(logw(1.0) - mid))
    z = float(np.exp(mid).sum())
    return float(np.exp(spread.max())) * max(z, 1.0 / z)


# ---------------------------------------------------------------------------
# kernel encoding

@dataclass(frozen=True)
class KernelModel:
    kind: int
    probs: np.ndarray
    suffix: np.ndarray
    tail_c: float
    tail_r: float
    gvals: np.ndarray
    pot_t: float
    pot_p: float
    dmax: int
    infinite: bool


_EMPTY = np.zeros(1)


def kernel_model(model: MeasureModel) -> KernelModel:
    if isinstance(model, Bernoulli):
        probs = np.concatenate([[0.0], np.asarray(model.probs, dtype=float)])
        suffix = np.zeros(len(probs) + 1)
        suffix[:-1] = np.cumsum(probs[::-1])[::-1]
        suffix[0] = 0.0
        if model.tail is not None:
            c, r = model.tail.coef, model.tail.ratio
            dmax, infinite = DIGIT_CAP, True
        else:
            c, r = 0.0, 0.5
            dmax, infinite = model.support_max, False
        return KernelModel(K.BERNOULLI, probs, suffix, c, r, _EMPTY, 0.0, 0.0, dmax, infinite)
    if isinstance(model, Lebesgue):
        return KernelModel(K.LEBESGUE, _EMPTY, _EMPTY, 0.0, 0.5, _EMPTY, 0.0, 0.0, DIGIT_CAP, True)
    if isinstance(model, GaussMeasure):
        return KernelModel(K.GAUSS, _EMPTY, _EMPTY, 0.0, 0.5, _EMPTY, 0.0, 0.0, DIGIT_CAP, True)
    if isinstance(model, FinitePotential):
        return KernelModel(K.POTENTIAL, _EMPTY, _EMPTY, 0.0, 0.5, model.log_weights,
                           model.t, model.pressure, model.alphabet.max_digit, False)
    raise TypeError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# masses

def _check_word_in_model(model: MeasureModel, word: Word) -> None:
    if isinstance(model, Bernoulli):
        bad = [a for a in word if model.p(a) <= 0]
    elif isinstance(model, FinitePotential):
        bad = [a for a in word if a not in model.alphabet]
    else:
        bad = []
    if bad:
        raise DomainError(f"digit(s) {bad} outside the model's alphabet")


def gauss_interval_mass(lo, hi) -> float:
    lo, hi = Fraction(lo), Fraction(hi)
    return math.log1p(float((hi - lo) / (1 + lo))) / LOG2


def cylinder_mass(model: MeasureModel, word: Sequence[int]) -> float:
    word = as_word(word)
    _check_word_in_model(model, word)
    if not word:
        return 1.0
    if isinstance(model, Bernoulli):
        return math.prod(model.p(a) for a in word)
    if isinstance(model, Lebesgue):
        return float(cylinder(word).length)
    if isinstance(model, GaussMeasure):
        c = cylinder(word)
        return gauss_interval_mass(c.low, c.high)
    c = continuants(word)
    g = model.log_weights
    logw = sum(g[a] for a in word) + model.t * (-2.0 * math.log(c.q_prev * 0.5 + c.q))
    return math.exp(logw - len(word) * model.pressure)


def tail_mass(model: MeasureModel, n: int) -> float:
    """mu({a_1(x) >= n})."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if n == 1:
        return 1.0 if not isinstance(model, Bernoulli) else model.total_mass
    if isinstance(model, Bernoulli):
        return model.tail_sum(n)
    if isinstance(model, Lebesgue):
        return 1.0 / n
    if isinstance(model, GaussMeasure):
        return math.log1p(1.0 / n) / LOG2
    return math.fsum(cylinder_mass(model, (a,)) for a in model.alphabet.digits if a >= n)


def mass_weights(model: MeasureModel, words: np.ndarray) -> np.ndarray:
    """Vectorised cylinder masses for an (N, n) array of words."""
    from .thermo import word_continuants

    n = words.shape[1]
    if isinstance(model, Bernoulli):
        top = int(words.max()) if words.size else 1
        table = np.array([model.p(a) for a in range(top + 1)])
        return table[words].prod(axis=1)
    pp, qp, p, q = word_continuants(words)
    if isinstance(model, FinitePotential):
        G = model.log_weights[words].sum(axis=1)
        return np.exp(G + model.t * (-2.0 * np.log(0.5 * qp + q)) - n * model.pressure)
    e0 = p / q
    e1 = (p + pp) / (q + qp)
    lo = np.minimum(e0, e1)
    length = 1.0 / (q * (q + qp))
    if isinstance(model, Lebesgue):
        return length
    return np.log1p(length / (1.0 + lo)) / LOG2


# ---------------------------------------------------------------------------
# question mark and box function

@dataclass(frozen=True)
class DyadicRational:
    """numerator / 2**exponent, normalised so the numerator is odd (or 0)."""

    numerator: int
    exponent: int

    def __post_init__(self):
        num, exp = self.numerator, self.exponent
        if exp < 0:
            raise DomainError("exponent must be nonnegative")
        if num == 0:
            exp = 0
        else:
            while exp > 0 and num % 2 == 0:
                num //= 2
                exp -= 1
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "exponent", exp)

    @classmethod
    def from_fraction(cls, value) -> "DyadicRational":
        value = Fraction(value)
        den = value.denominator
        exp = den.bit_length() - 1
        if den != 1 << exp:
            raise DomainError(f"{value} is not dyadic")
        return cls(value.numerator, exp)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __float__(self) -> float:
        return float(self.fraction)

    def __str__(self) -> str:
        f = self.fraction
        return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def question_mark(x: Union[Fraction, int, str, Sequence[int]]) -> DyadicRational:
    """Exact ?(x) for a rational x in [0, 1] or a finite digit word."""
    if isinstance(x, float):
        raise DomainError("question_mark needs an exact rational or a word")
    if isinstance(x, (tuple, list)):
        digits = as_word(x)
    else:
        r = Fraction(x)
        if not 0 <= r <= 1:
            raise DomainError(f"?(x) is defined on [0, 1], got {r}")
        if r == 0:
            return DyadicRational(0, 0)
        if r == 1:
            return DyadicRational(1, 0)
        digits = cf_digits(r, r.denominator.bit_length() * 2 + 2)
    if not digits:
        return DyadicRational(0, 0)
    # 2 * sum (-1)^{k+1} 2^{-(a_1+...+a_k)}, over the common denominator 2^S
    total = sum(digits)
    num = 0
    partial = 0
    for k, a in enumerate(digits):
        partial += a
        term = 1 << (total - partial)
        num += term if k % 2 == 0 else -term
    return DyadicRational(2 * num, total)


def _canonical(digits: list[int]) -> Word:
    if len(digits) > 1 and digits[-1] == 1:
        digits = digits[:-2] + [digits[-2] + 1]
    return tuple(digits)


def box_inverse(t, max_digits: int = 64) -> Word:
    """CF digits of ?^{-1}(t), read off the binary run lengths of t."""
    if isinstance(t, DyadicRational):
        t = t.fraction
    if isinstance(t, str):
        t = Fraction(t)
    if isinstance(t, float):
        t = Fraction(t)
    t = Fraction(t)
    if not 0 < t <= 1:
        raise DomainError(f"box_inverse needs 0 < t < 1, got {t}")
    # ?(1) = 1 with canonical word (1)
    if t == 1:
        return (1,)
    den = t.denominator
    if den & (den - 1) == 0:
        return _box_inverse_dyadic(t.numerator, den.bit_length() - 1, max_digits)
    runs: list[int] = []
    current_bit = 0
    run = 0
    x = t
    # enough to decode max_digits runs, plus one to detect termination
    while x != 0 and len(runs) < max_digits + 1:
        x *= 2
        bit = 1 if x >= 1 else 0
        if bit:
            x -= 1
        if bit == current_bit:
            run += 1
        else:
            runs.append(run)
            current_bit, run = bit, 1
    terminated = x == 0
    if terminated:
        runs.append(run)
    digits = [runs[0] + 1] + runs[1:]
    if terminated and len(digits) <= max_digits:
        return _canonical(digits)
    return tuple(digits[:max_digits])


def _box_inverse_dyadic(num: int, exponent: int, max_digits: int) -> Word:
    bits = format(num, f"0{exponent}b").rstrip("0")
    runs = [len(list(g)) for _, g in itertools.groupby(bits)]
    if bits[0] == "1":
        runs.insert(0, 0)
    digits = [runs[0] + 1] + runs[1:]
    if len(digits) <= max_digits:
        return _canonical(digits)
    return tuple(digits[:max_digits])


QM_EXPONENT = 62


def question_mark_array(words) -> np.ndarray:
    """?(w) * 2^62 as int64 for each row of a zero-padded word array.

    Exact as long as every digit sum is at most 62."""
    words = np.ascontiguousarray(words, dtype=np.int64)
    if words.ndim != 2:
        raise DomainError("words must be a 2-d array")
    if words.size and (words.min() < 0):
        raise DomainError("digits must be positive (0 pads)")
    out = np.empty(words.shape[0], dtype=np.int64)
    if K.question_mark_numerators(words, QM_EXPONENT, out):
        raise DomainError(f"digit sums above {QM_EXPONENT} do not fit the int64 path")
    return out


def box_inverse_array(numerators, width: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Canonical digit rows of ?^{-1}(num / 2^62) and their lengths.

    Inverse of question_mark_array; rows needing more than `width` digits
    get length -1."""
    nums = np.ascontiguousarray(numerators, dtype=np.int64)
    if nums.size and (nums.min() <= 0 or nums.max() > (1 << QM_EXPONENT)):
        raise DomainError("numerators must lie in (0, 2^62]")
    out = np.zeros((nums.size, width), dtype=np.int64)
    lengths = np.empty(nums.size, dtype=np.int64)
    K.box_runs(nums, QM_EXPONENT, out, lengths)
    return out, lengths


# ---------------------------------------------------------------------------
# sampling

_UNIFORM_SLOTS = 4  # Philox4x64 yields four 64-bit words per counter step


def _generator(seed: int, start: int, per_sample: int) -> np.random.Generator:
    bit_gen = np.random.Philox(key=seed & (2 ** 64 - 1))
    if start:
        bit_gen.advance(start * per_sample // _UNIFORM_SLOTS)
    return np.random.Generator(bit_gen)


def _padded(n: int) -> int:
    return -(-n // _UNIFORM_SLOTS) * _UNIFORM_SLOTS


def _bernoulli_digits(model: Bernoulli, u: np.ndarray) -> np.ndarray:
    total = model.total_mass
    u = u * total
    probs = np.asarray(model.probs, dtype=float)
    cum = np.cumsum(probs)
    k = len(probs)
    digits = np.searchsorted(cum, u, side="right") + 1
    if model.tail is None:
        return np.minimum(digits, max(k, 1)).astype(np.int64)
    over = u >= (cum[-1] if k else 0.0)
    if over.any():
        c, r = model.tail.coef, model.tail.ratio
        rest = u[over] - (cum[-1] if k else 0.0)
        head = c * r ** (k + 1) / (1.0 - r)
        frac = np.clip(1.0 - rest / head, 1e-300, 1.0)
        extra = np.ceil(np.log(frac) / math.log(r))
        extra = np.maximum(extra, 1.0)
        digits = digits.astype(np.float64)
        digits[over] = k + extra
    return digits.astype(np.int64)


def _cylinder_midpoints(digits: np.ndarray) -> np.ndarray:
    y0 = np.zeros(digits.shape[0])
    y1 = np.ones(digits.shape[0])
    for col in range(digits.shape[1] - 1, -1, -1):
        a = digits[:, col]
        y0 = 1.0 / (a + y0)
        y1 = 1.0 / (a + y1)
    return 0.5 * (y0 + y1)


def sample(model: MeasureModel, seed: int, depth: int = 64, size: Optional[int] = None,
           start: int = 0):
    """Deterministic draws from the model.

    Draw j (counting from 0) depends only on (seed, j); ``start`` offsets the
    counter so batches can be generated independently.  Bernoulli and
    potential models return the midpoint of a depth-``depth`` cylinder.
    """
    if depth < 8:
        raise DomainError("sampling depth must be >= 8")
    n = 1 if size is None else int(size)
    if isinstance(model, (Lebesgue, GaussMeasure)):
        gen = _generator(seed, start, _UNIFORM_SLOTS)
        u = gen.random((n, _UNIFORM_SLOTS))[:, 0]
        x = u if isinstance(model, Lebesgue) else np.expm1(u * LOG2)
    elif isinstance(model, Bernoulli):
        per = _padded(depth)
        gen = _generator(seed, start, per)
        u = gen.random((n, per))
        x = np.empty(n)
        tail_c, tail_r = (model.tail.coef, model.tail.ratio) if model.tail is not None else (0.0, 0.5)
        K.bernoulli_midpoints(u, depth, np.cumsum(np.asarray(model.probs, dtype=float)),
                              model.total_mass, tail_c, tail_r, x)
    elif isinstance(model, FinitePotential):
        x = _sample_potential(model, seed, depth, n, start)
    else:
        raise TypeError(f"unknown model {model!r}")
    return float(x[0]) if size is None else x


def _sample_potential(model: FinitePotential, seed, depth, n, start):
    # digit-by-digit: the conditional law of the next digit is proportional
    # to the midpoint weights of the child cylinders
    per = _padded(depth)
    gen = _generator(seed, start, per)
    u = gen.random((n, per))[:, :depth]
    digits_avail = np.array(model.alphabet.digits)
    out = np.empty((n, depth), dtype=np.int64)
    pp = np.ones(n)
    qp = np.zeros(n)
    p = np.zeros(n)
    q = np.ones(n)
    G = np.zeros(n)
    g = model.log_weights
    for k in range(depth):
        cp = digits_avail[None, :] * p[:, None] + pp[:, None]
        cq = digits_avail[None, :] * q[:, None] + qp[:, None]
        logw = G[:, None] + g[digits_avail][None, :] + model.t * (-2.0 * np.log(0.5 * q[:, None] + cq))
        w = np.exp(logw - logw.max(axis=1, keepdims=True))
        cum = np.cumsum(w, axis=1)
        cum /= cum[:, -1:]
        choice = (u[:, k:k + 1] >= cum).sum(axis=1)
        choice = np.minimum(choice, len(digits_avail) - 1)
        rows = np.arange(n)
        out[:, k] = digits_avail[choice]
        pp, qp, p, q = p, q, cp[rows, choice], cq[rows, choice]
        G = G + g[out[:, k]]
    return _cylinder_midpoints(out)


def sample_exact(model: MeasureModel, seed: int, bits: int, index: int = 0) -> Fraction:
    """One draw as an exact rational accurate to about ``bits`` binary digits.

    Used where orbits x -> b^k x mod 1 are followed far beyond double
    precision.  Independent of float samples from :func:`sample`.
    """
    words = -(-(bits + 64) // 64)
    gen = np.random.Generator(np.random.Philox(key=[seed & (2 ** 64 - 1), index + 1]))
    if isinstance(model, Lebesgue):
        raw = gen.integers(0, 2 ** 63, size=words, dtype=np.int64, endpoint=False)
        val = 0
        for w in raw:
            val = (val << 63) | int(w)
        return Fraction(val, 1 << (63 * words))
    if isinstance(model, GaussMeasure):
        import mpmath

        raw = gen.integers(0, 2 ** 63, size=words, dtype=np.int64, endpoint=False)
        val = 0
        for w in raw:
            val = (val << 63) | int(w)
        with mpmath.workprec(63 * words + 32):
            u = mpmath.mpf(val) / mpmath.mpf(2) ** (63 * words)
            x = mpmath.expm1(u * mpmath.log(2))
            man, exp = mpmath.frexp(x)
            scaled = int(mpmath.floor(man * mpmath.mpf(2) ** (63 * words)))
        return Fraction(scaled) * Fraction(2) ** (exp - 63 * words)
    if not isinstance(model, Bernoulli):
        raise DomainError("exact sampling supports Bernoulli, Lebesgue and Gauss models")
    target = 1 << (bits + 8)
    pp, qp, p, q = 1, 0, 0, 1
    while True:
        u = gen.random(256)
        for a in _bernoulli_digits(model, u):
            a = int(a)
            pp, p = p, a * p + pp
            qp, q = q, a * q + qp
            if q * q > target:
                return (Fraction(p, q) + Fraction(p + pp, q + qp)) / 2


# ---------------------------------------------------------------------------
# distribution function

def cdf(model: MeasureModel, x, depth: int = 64) -> tuple[float, float]:
    """mu([0, x]) and an error bound (mass of the last straddling cylinder)."""
    if not 0 <= x <= 1:
        raise DomainError("x must lie in [0, 1]")
    if isinstance(model, Lebesgue):
        return float(x), 0.0
    if isinstance(model, GaussMeasure):
        return math.log1p(float(x)) / LOG2, 0.0
    if x == 0:
        return 0.0, 0.0
    if x == 1:
        return 1.0, 0.0
    exact = not isinstance(x, float)
    if exact:
        x = Fraction(x)
    digits = cf_digits(x, depth)
    left = 0.0
    word: list[int] = []
    mass_w = 1.0
    for a in digits:
        n = len(word)
        increasing = n % 2 == 0
        if isinstance(model, Bernoulli):
            if increasing:
                left += mass_w * model.tail_sum(a + 1)
            else:
                left += mass_w * (model.total_mass - model.tail_sum(a))
        else:
            sib = [d for d in model.alphabet.digits if (d > a if increasing else d < a)]
            left += math.fsum(cylinder_mass(model, tuple(word) + (d,)) for d in sib)
        word.append(a)
        mass_w = cylinder_mass(model, word)
        if mass_w == 0.0:
            return left, 0.0
    terminated = value_of(word) == x if exact else float(value_of(word)) == x
    if terminated:
        # x is the endpoint T_w(0); it is the right end iff T_w reverses order
        if len(word) % 2 == 1:
            left += mass_w
        return left, 0.0
    return left + 0.5 * mass_w, 0.5 * mass_w
