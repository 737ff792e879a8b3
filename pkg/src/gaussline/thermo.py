"""Birkhoff sums, pressure, dimension, entropy and Lyapunov estimators,
and the Ruelle transfer operator for potentials of the Gauss map.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels as K
from .config import enumeration_budget
from .contfrac import THETA, as_word, continuants, cylinder
from .errors import BracketError, BudgetError, DivergentPressureError, DomainError, GausslineError, PrecisionError
from .measure import (
    Bernoulli,
    FinitePotential,
    GaussMeasure,
    Lebesgue,
    MeasureModel,
    kernel_model,
    mass_weights,
)
from .potentials import Alphabet, Potential, TruncatedNaturals, normal_form

LOG_THETA = math.log(THETA)
FLOAT32_ABOVE = 2 ** 26  # cached log-derivative arrays switch to float32 above this size
QUAD_ETA = 1e-12
DEFAULT_TAIL_BOUND = 1e-6


# ---------------------------------------------------------------------------
# words

def enumerate_words(digits: Sequence[int], depth: int) -> np.ndarray:
    """All words of the given length over ``digits``, lexicographic, shape (m**depth, depth)."""
    digits = np.asarray(sorted(digits), dtype=np.int64)
    m = len(digits)
    idx = np.arange(m ** depth, dtype=np.int64)
    out = np.empty((idx.size, depth), dtype=np.int64)
    for col in range(depth - 1, -1, -1):
        out[:, col] = digits[idx % m]
        idx //= m
    return out


def word_continuants(words: np.ndarray):
    """Float continuants (p_prev, q_prev, p, q) for every row of ``words``."""
    n = words.shape[0]
    pp = np.ones(n)
    qp = np.zeros(n)
    p = np.zeros(n)
    q = np.ones(n)
    for col in range(words.shape[1]):
        a = words[:, col]
        pp, p = p, a * p + pp
        qp, q = q, a * q + qp
    return pp, qp, p, q


def _check_budget(count: int, budget: Optional[int], what: str) -> int:
    limit = enumeration_budget(budget)
    if count > limit:
        raise BudgetError(f"{what} needs {count} words, budget is {limit}")
    return limit


# ---------------------------------------------------------------------------
# Birkhoff sums and periodic points

def birkhoff_sum(potential: Potential, word: Sequence[int], x) -> float:
    """S_n phi(T_word(x)) = sum g(a_k) + t log|T_word'(x)|."""
    word = as_word(word)
    if not word:
        raise DomainError("word must be nonempty")
    if not 0 <= x <= 1:
        raise DomainError("x must lie in [0, 1]")
    nf = normal_form(potential)
    total = math.fsum(nf.digit_weight(a) for a in word)
    if nf.t != 0.0:
        c = continuants(word)
        total += nf.t * (-2.0 * math.log(c.q_prev * float(x) + c.q))
    return total


def periodic_point(word: Sequence[int]) -> float:
    """Fixed point of T_word, by iteration from the cylinder midpoint."""
    word = as_word(word)
    if not word:
        raise DomainError("word must be nonempty")
    c = continuants(word)
    x = float(cylinder(word).midpoint)
    for _ in range(200):
        nx = (c.p_prev * x + c.p) / (c.q_prev * x + c.q)
        if abs(nx - x) < 1e-15:
            return nx
        x = nx
    return x


def _digit_fixed_point(a):
    return (-a + np.sqrt(a * a + 4.0)) / 2.0


# ---------------------------------------------------------------------------
# pressure

@dataclass(frozen=True)
class PressureEstimate:
    depth: int
    value: float
    sequence: dict
    alphabet: Alphabet
    tail_bound: float = 0.0
    at_zero_value: Optional[float] = None
    partitions: int = 1


def _partition_bounds(m: int, depth: int, partitions: int) -> list[tuple[int, int]]:
    """Index ranges grouping consecutive leading digits."""
    block = m ** (depth - 1)
    partitions = max(1, min(partitions, m))
    cuts = np.linspace(0, m, partitions + 1).round().astype(int)
    return [(int(cuts[i]) * block, int(cuts[i + 1]) * block) for i in range(partitions)]


def _logsumexp_partitioned(values: np.ndarray, scale: float, bounds, vrange=None) -> float:
    if vrange is None:
        lo, hi = K.value_range(values)
    else:
        lo, hi = vrange
    shift = scale * (hi if scale >= 0 else lo)
    if not math.isfinite(shift):
        return -math.inf
    total = 0.0
    for a, b in bounds:
        total += K.shifted_sum_exp(values, scale, shift, a, b)
    return shift + math.log(total) if total > 0 else -math.inf


def _gvals(nf, digits) -> np.ndarray:
    return np.array([nf.digit_weight(a) for a in digits], dtype=np.float64)


def _depth_pressure(nf, digits, depth, at_zero, partitions) -> float:
    m = len(digits)
    out = np.empty(m ** depth)
    K.word_values(np.asarray(digits, dtype=np.float64), _gvals(nf, digits), nf.t, depth, at_zero, out)
    finite = out[np.isfinite(out)]
    if finite.size == 0:
        return -math.inf
    return _logsumexp_partitioned(out, 1.0, _partition_bounds(m, depth, partitions)) / depth


def criterion_tail(potential: Potential, a_max: int, blocks: int = 6) -> float:
    """Estimate of sum_{a > a_max} exp(phi((a)^inf)) from doubling blocks.

    Raises DivergentPressureError when successive blocks stop shrinking.
    """
    nf = normal_form(potential)

    def block(lo, hi):
        a = np.arange(lo, hi + 1, dtype=np.float64)
        g = np.array([nf.digit_weight(int(d)) for d in a])
        return float(np.exp(g + 2.0 * nf.t * np.log(_digit_fixed_point(a))).sum())

    lo = a_max + 1
    s_prev = block(lo, 2 * a_max)
    total = s_prev
    ratio = 0.0
    for _ in range(blocks):
        lo, hi = 2 * lo - 1, 2 * (2 * lo - 1) - 2
        s = block(lo, hi)
        if s_prev > 0:
            ratio = s / s_prev
            if ratio >= 1.0:
                raise DivergentPressureError(
                    f"infinite pressure suspected: tail blocks grow by {ratio:.3g} under doubling")
        total += s
        s_prev = s
    if s_prev == 0:
        return total
    return total + s_prev * ratio / (1.0 - ratio)


def pressure_estimate(potential: Potential, alphabet: Alphabet, depth: int,
                      budget: Optional[int] = None, partitions: int = 1,
                      diagnostics: bool = False) -> PressureEstimate:
    """(1/n) log sum over words a of length n of exp(S_n phi(a^inf))."""
    if depth < 1:
        raise DomainError("depth must be >= 1")
    digits = alphabet.digits
    _check_budget(len(digits) ** depth, budget, "pressure enumeration")
    nf = normal_form(potential)
    tail = 0.0
    if isinstance(alphabet, TruncatedNaturals):
        tail = criterion_tail(potential, alphabet.a_max)
    seq = {}
    for n in range(max(1, depth // 2), depth + 1):
        seq[n] = _depth_pressure(nf, digits, n, False, partitions)
    at_zero = _depth_pressure(nf, digits, depth, True, partitions) if diagnostics else None
    return PressureEstimate(depth, seq[depth], seq, alphabet, tail, at_zero, partitions)


@lru_cache(maxsize=4)
def _log_derivatives(digits: tuple[int, ...], depth: int) -> tuple[np.ndarray, tuple[float, float]]:
    """log|T_a'(x_a)| over all words, cached per (alphabet, depth)."""
    count = len(digits) ** depth
    out = np.empty(count)
    K.word_values(np.asarray(digits, dtype=np.float64), np.zeros(len(digits)), 1.0, depth, False, out)
    if count > FLOAT32_ABOVE:
        out = out.astype(np.float32)
    return out, K.value_range(out)


@dataclass
class _PressureCurve:
    digits: tuple[int, ...]
    depth: int
    partitions: int
    seen: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values, self.vrange = _log_derivatives(self.digits, self.depth)
        self.bounds = _partition_bounds(len(self.digits), self.depth, self.partitions)

    def __call__(self, s: float) -> float:
        if s not in self.seen:
            p = _logsumexp_partitioned(self.values, s, self.bounds, self.vrange) / self.depth
            self._check_monotone(s, p)
            self.seen[s] = p
        return self.seen[s]

    def _check_monotone(self, s, p):
        for s2, p2 in self.seen.items():
            if (s2 - s) * (p2 - p) > 0:
                raise GausslineError(f"pressure not decreasing in s: P({s2})={p2}, P({s})={p}")


def pressure_root(alphabet: Alphabet, s_lo: float = 0.0, s_hi: float = 1.0, depth: int = 12,
                  tol: float = 1e-4, budget: Optional[int] = None, partitions: int = 1,
                  warm_start: bool = True) -> float:
    """Root in s of P(-s log|T'|) restricted to the alphabet, by bisection.

    With ``warm_start`` the bracket is first narrowed using a shallower
    depth; the narrowed bracket is re-verified at the requested depth and
    widened back to (s_lo, s_hi) if it does not straddle the root.
    """
    if not s_lo < s_hi:
        raise DomainError("need s_lo < s_hi")
    if tol <= 0:
        raise DomainError("tol must be positive")
    digits = tuple(alphabet.digits)
    _check_budget(len(digits) ** depth, budget, "pressure root")
    curve = _PressureCurve(digits, depth, partitions)
    p_lo, p_hi = curve(s_lo), curve(s_hi)
    if not (p_lo > 0 > p_hi):
        raise BracketError(f"bracket [{s_lo}, {s_hi}] does not straddle the root: "
                           f"P(s_lo)={p_lo:.6g}, P(s_hi)={p_hi:.6g}", p_lo, p_hi)
    lo, hi = s_lo, s_hi
    shallow = min(depth - 2, 8)
    if warm_start and shallow >= 4 and len(digits) ** depth > 2 ** 16:
        guess = pressure_root(alphabet, s_lo, s_hi, shallow, tol=tol / 4, budget=budget,
                              partitions=partitions, warm_start=False)
        width = 0.01
        a, b = max(s_lo, guess - width), min(s_hi, guess + width)
        if curve(a) > 0 > curve(b):
            lo, hi = a, b
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if curve(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# entropy, Lyapunov exponent, dimension

def _tail_limit(bound):
    return DEFAULT_TAIL_BOUND if bound is None else bound


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    truncated_mass: float
    method: str


def entropy_detail(model: MeasureModel, depth: int, budget: Optional[int] = None,
                   tail_bound: Optional[float] = None) -> EntropyEstimate:
    if depth < 1:
        raise DomainError("depth must be >= 1")
    if isinstance(model, Bernoulli):
        digits = model.enumeration_digits
        p = np.array([model.p(a) for a in digits])
        S = float(math.fsum(p))
        H = float(math.fsum(-x * math.log(x) for x in p if x > 0))
        truncated = max(model.total_mass ** depth - S ** depth, 0.0)
        if truncated > _tail_limit(tail_bound):
            raise PrecisionError(f"truncated mass {truncated:.3g} exceeds the tail bound")
        # the n-fold product splits: sum -mu log mu = n S^(n-1) H
        return EntropyEstimate(S ** (depth - 1) * H, truncated, "bernoulli-product")
    if isinstance(model, FinitePotential):
        words = enumerate_words(model.alphabet.digits, depth)
        _check_budget(words.shape[0], budget, "entropy enumeration")
        w = mass_weights(model, words)
        w = w / w.sum()
        w = w[w > 0]
        return EntropyEstimate(float(-(w * np.log(w)).sum()) / depth, 0.0, "enumeration")
    if isinstance(model, (GaussMeasure, Lebesgue)):
        # absolutely continuous class: Rokhlin's formula h = lambda
        return EntropyEstimate(lyapunov_detail(model, depth).value, 0.0, "rokhlin")
    raise TypeError(f"unknown model {model!r}")


def entropy_estimate(model: MeasureModel, depth: int, budget: Optional[int] = None) -> float:
    """(1/n) sum -mu(I_a) log mu(I_a) over depth-n cylinders (nats)."""
    return entropy_detail(model, depth, budget).value


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    distortion_bound: float
    quadrature_error: float
    method: str


def _branch_log_integral(model: MeasureModel, depth: int, eta: float = QUAD_ETA,
                         budget: Optional[int] = None):
    """sum over |b| = depth of mu(I_b) * (-log T_b(1/2)), with its error."""
    km = kernel_model(model)
    limit = max(enumeration_budget(budget), 2 ** 26)
    val, cerr, _, uncounted, nodes, status = K.cylinder_quadrature(
        km.kind, km.probs, km.suffix, km.tail_c, km.tail_r, km.dmax, km.infinite,
        K.FUNC_NEG_LOG, depth, True, eta, limit)
    if status:
        raise BudgetError("cylinder quadrature exceeded its node budget")
    err = cerr
    if uncounted > 0:
        # mass at digits >= dmax sits on [0, h]; -log x integrates to h(1 - log h) there
        h = 1.0 / km.dmax
        extra = h * (1.0 - math.log(h))
        if isinstance(model, GaussMeasure):
            extra /= K.LOG2
        val += extra
        err += extra
    return val, err


def lyapunov_detail(model: MeasureModel, depth: int, budget: Optional[int] = None) -> LyapunovEstimate:
    if depth < 1:
        raise DomainError("depth must be >= 1")
    if isinstance(model, FinitePotential):
        words = enumerate_words(model.alphabet.digits, depth)
        _check_budget(words.shape[0], budget, "Lyapunov enumeration")
        w = mass_weights(model, words)
        w = w / w.sum()
        pp, qp, p, q = word_continuants(words)
        x0 = 0.5
        minus_log_deriv = 2.0 * np.log(qp * x0 + q)
        return LyapunovEstimate(float((w * minus_log_deriv).sum()) / depth,
                                math.log(4.0) / depth, 0.0, "enumeration")
    # invariant product measures: the block a_m..a_n of a random word has the
    # law of mu restricted to depth n-m+1 (times S^(m-1) of leading mass), and
    # q_prev x + q = prod_m 1 / T_{a_m..a_n}(x)
    if isinstance(model, Bernoulli):
        S = model.total_mass
    elif isinstance(model, (GaussMeasure, Lebesgue)):
        # Lebesgue is not invariant: report the invariant measure in its class
        model = GaussMeasure()
        S = 1.0
    else:
        raise TypeError(f"unknown model {model!r}")
    total = 0.0
    qerr = 0.0
    for k in range(1, depth + 1):
        F, e = _branch_log_integral(model, k, budget=budget)
        total += 2.0 * S ** (depth - k) * F
        qerr += 2.0 * S ** (depth - k) * e
    method = "cylinder-quadrature" if isinstance(model, Bernoulli) else "cylinder-quadrature(gauss)"
    return LyapunovEstimate(total / depth, math.log(4.0) / depth, qerr / depth, method)


def lyapunov_estimate(model: MeasureModel, depth: int, budget: Optional[int] = None) -> float:
    """(1/n) sum mu(I_a) (-log|T_a'(1/2)|) over depth-n words (nats)."""
    return lyapunov_detail(model, depth, budget).value


@dataclass(frozen=True)
class MeasureStats:
    entropy_h: float
    lyapunov_lambda: float
    dimension_s: float
    depth: int
    method: str
    lyapunov_error: float = 0.0
    flags: tuple[str, ...] = ()


def measure_stats(model: MeasureModel, depth: int, budget: Optional[int] = None) -> MeasureStats:
    h = entropy_detail(model, depth, budget)
    lam = lyapunov_detail(model, depth, budget)
    flags = []
    if lam.value <= 1.0:
        flags.append("lambda<=1")
    dim = h.value / lam.value if lam.value > 0 else math.nan
    return MeasureStats(h.value, lam.value, dim, depth, f"{h.method}/{lam.method}",
                        lam.distortion_bound + lam.quadrature_error, tuple(flags))


def is_minkowski(model) -> bool:
    if not isinstance(model, Bernoulli):
        return False
    return all(model.p(a) == 2.0 ** -a for a in range(1, 80))


@dataclass(frozen=True)
class KinneyEstimate:
    value: float
    error: float
    integral: float


def kinney_detail(model: MeasureModel, depth: int, eta: float = QUAD_ETA,
                  budget: Optional[int] = None) -> KinneyEstimate:
    if not is_minkowski(model):
        raise DomainError("the Kinney formula applies to the Minkowski model only")
    km = kernel_model(model)
    limit = max(enumeration_budget(budget), 2 ** 26)
    val, cerr, lerr, uncounted, nodes, status = K.cylinder_quadrature(
        km.kind, km.probs, km.suffix, km.tail_c, km.tail_r, km.dmax, km.infinite,
        K.FUNC_LOG1P, depth, False, eta, limit)
    if status:
        raise BudgetError("cylinder quadrature exceeded its node budget")
    err_i = cerr + lerr
    dim = K.LOG2 / (2.0 * val)
    return KinneyEstimate(dim, dim * err_i / max(val - err_i, 1e-300), val)


def kinney_dimension(model: MeasureModel, depth: int) -> float:
    """log 2 / (2 int log(1+x) dmu) for the Minkowski measure."""
    return kinney_detail(model, depth).value


# ---------------------------------------------------------------------------
# transfer operator

def _sup_weight(nf, a: np.ndarray) -> np.ndarray:
    g = np.array([nf.digit_weight(int(d)) for d in a])
    # |T_a'(x)| ranges over [(a+1)^-2, a^-2]
    edge = a if nf.t >= 0 else a + 1.0
    return np.exp(g - 2.0 * nf.t * np.log(edge))


def _transfer_tail(nf, alphabet: TruncatedNaturals, depth: int) -> float:
    kept = float(_sup_weight(nf, np.arange(1, alphabet.a_max + 1, dtype=np.float64)).sum())
    rest = 0.0
    only_bernoulli = nf.t == 0.0 and len(nf.bernoulli) == 1 and nf.bernoulli[0][0] == 1.0
    b = nf.bernoulli[0][1] if only_bernoulli else None
    if b is not None and b.tail is not None and (not b.weights or max(b.weights) <= alphabet.a_max):
        rest = b.tail.tail_sum(alphabet.a_max + 1)
    else:
        lo = alphabet.a_max + 1
        prev = None
        for _ in range(40):
            hi = 2 * lo
            s = float(_sup_weight(nf, np.arange(lo, hi, dtype=np.float64)).sum())
            rest += s
            if prev is not None and prev > 0:
                r = s / prev
                if r >= 1.0:
                    raise DivergentPressureError("transfer operator tail does not converge")
                if s <= 1e-17 * max(rest, 1e-300):
                    break
            prev = s
            lo = hi
        else:
            if prev:
                rest += prev * r / (1.0 - r)
    return (kept + rest) ** depth - kept ** depth


def transfer_apply(potential: Potential, alphabet: Alphabet, f: Callable, x: float, depth: int,
                   budget: Optional[int] = None, with_tail: bool = False):
    """(L^n f)(x) = sum over |a| = n of exp(S_n phi(T_a x)) f(T_a x)."""
    if depth < 1:
        raise DomainError("depth must be >= 1")
    if not 0 <= x <= 1:
        raise DomainError("x must lie in [0, 1]")
    digits = alphabet.digits
    _check_budget(len(digits) ** depth, budget, "transfer operator")
    nf = normal_form(potential)
    words = enumerate_words(digits, depth)
    pp, qp, p, q = word_continuants(words)
    denom = qp * x + q
    y = (pp * x + p) / denom
    table = np.full(max(digits) + 1, -np.inf)
    for a in digits:
        table[a] = nf.digit_weight(a)
    logw = table[words].sum(axis=1) + nf.t * (-2.0 * np.log(denom))
    w = np.exp(logw)
    try:
        fy = np.asarray(f(y), dtype=complex)
        if fy.shape != y.shape:
            fy = np.broadcast_to(fy, y.shape)
    except (TypeError, ValueError):
        fy = np.array([f(v) for v in y], dtype=complex)
    value = complex(math.fsum((w * fy.real).tolist()), math.fsum((w * fy.imag).tolist()))
    if not with_tail:
        return value
    tail = _transfer_tail(nf, alphabet, depth) if isinstance(alphabet, TruncatedNaturals) else 0.0
    return value, tail
