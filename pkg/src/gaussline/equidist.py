"""Weyl sums, star discrepancy, Davenport-Erdos-LeVeque partial sums, the
Erdos-Turan bound and normality experiments.

Orbit points s_k x mod 1 are reduced exactly: x is held as a rational
P/Q and only the residues s_k P mod Q are tracked, so no precision is
lost however large s_k gets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import DomainError
from .measure import Bernoulli, GaussMeasure, Lebesgue, MeasureModel, sample_exact

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class OrbitSpec:
    """s_k = base**k (k = 1..length) or an explicit increasing sequence."""

    kind: str
    length: int
    base: int = 2
    sequence: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind == "power":
            if self.base < 2:
                raise DomainError("base must be >= 2")
        elif self.kind == "explicit":
            seq = tuple(int(v) for v in self.sequence)
            if any(v <= 0 for v in seq) or any(b <= a for a, b in zip(seq, seq[1:])):
                raise DomainError("explicit sequences must be strictly increasing positive integers")
            object.__setattr__(self, "sequence", seq)
            object.__setattr__(self, "length", len(seq))
        else:
            raise DomainError(f"unknown orbit kind {self.kind!r}")
        if self.length < 1:
            raise DomainError("orbit length must be >= 1")

    def terms(self, N: Optional[int] = None) -> list[int]:
        N = self.length if N is None else N
        if N > self.length:
            raise DomainError(f"N={N} exceeds the orbit length {self.length}")
        if self.kind == "power":
            return [self.base ** k for k in range(1, N + 1)]
        return list(self.sequence[:N])


def power_base(base: int, length: int) -> OrbitSpec:
    return OrbitSpec("power", length, base=base)


def explicit_sequence(seq: Sequence[int]) -> OrbitSpec:
    return OrbitSpec("explicit", len(seq), sequence=tuple(seq))


def _unit_float(num: int, den: int, shift: int) -> float:
    """num / den for 0 <= num < den from the leading bits (relative error < 2^-60)."""
    if shift <= 0:
        return num / den
    return (num >> shift) / (den >> shift)


def orbit_points(x, spec: OrbitSpec, N: Optional[int] = None) -> np.ndarray:
    """s_k x mod 1 for k = 1..N, reduced exactly."""
    N = spec.length if N is None else N
    if N < 1:
        raise DomainError("N must be >= 1")
    if N > spec.length:
        raise DomainError(f"N={N} exceeds the orbit length {spec.length}")
    r = Fraction(x)
    P, Q = r.numerator % r.denominator, r.denominator
    out = np.empty(N)
    shift = Q.bit_length() - 64
    if spec.kind == "power":
        b = spec.base
        res = P
        for k in range(N):
            res = (res * b) % Q
            out[k] = _unit_float(res, Q, shift)
    else:
        for k, s in enumerate(spec.sequence[:N]):
            out[k] = _unit_float((s * P) % Q, Q, shift)
    return out


def weyl_sum(x, spec: OrbitSpec, p: int, N: Optional[int] = None) -> complex:
    """(1/N) sum_{k=1..N} exp(2 pi i p s_k x)."""
    if p == 0:
        raise DomainError("p must be nonzero")
    u = orbit_points(x, spec, N)
    return _weyl_from_points(u, p)


def _weyl_from_points(u: np.ndarray, p: int) -> complex:
    ph = TWO_PI * np.mod(p * u, 1.0)
    return complex(np.cos(ph).mean(), np.sin(ph).mean())


def star_discrepancy(points) -> float:
    """D*_N = max_i max(i/N - u_(i), u_(i) - (i-1)/N) over the sorted sample."""
    u = np.sort(np.mod(np.asarray(points, dtype=float), 1.0))
    N = u.size
    if N == 0:
        raise DomainError("need at least one point")
    i = np.arange(1, N + 1)
    return float(max((i / N - u).max(), (u - (i - 1) / N).max()))


def erdos_turan_bound(weyl_values: Mapping[int, complex]) -> float:
    """3 (1/(K+1) + sum_{k<=K} |W_k| / k), an upper bound on the discrepancy."""
    if not weyl_values:
        raise DomainError("need Weyl values for k = 1..K")
    K = max(weyl_values)
    if K < 1 or set(weyl_values) != set(range(1, K + 1)):
        raise DomainError("Weyl values must be given for every k = 1..K")
    return 3.0 * (1.0 / (K + 1) + math.fsum(abs(weyl_values[k]) / k for k in range(1, K + 1)))


def lebesgue_fourier(xi: float) -> complex:
    """Transform of Lebesgue measure on [0, 1]; exactly 0 at nonzero integers."""
    if xi == 0:
        return complex(1.0, 0.0)
    if float(xi).is_integer():
        return complex(0.0, 0.0)
    w = -TWO_PI * xi
    return complex(math.sin(w), 1.0 - math.cos(w)) / w


def dirac_fourier(xi: float) -> complex:
    return complex(1.0, 0.0)


@dataclass(frozen=True)
class DelSums:
    terms: list
    partial: list
    evaluations: int


def del_partial_sums(mu_hat: Callable[[float], complex], spec: OrbitSpec, p: int,
                     N_max: int, budget: Optional[int] = None) -> DelSums:
    """Terms N^-3 sum_{k,m<=N} mu^(p(s_k - s_m)) for N = 1..N_max and their partial sums.

    mu^ is called once per distinct frequency difference.  Imaginary parts
    cancel in pairs and are checked to stay below 1e-9.
    """
    if p == 0:
        raise DomainError("p must be nonzero")
    s = spec.terms(N_max)
    cache: dict[int, complex] = {}

    def mh(d: int) -> complex:
        if d not in cache:
            if budget is not None and len(cache) >= budget:
                from .errors import BudgetError

                raise BudgetError(f"more than {budget} distinct frequencies")
            cache[d] = complex(mu_hat(float(p * d)))
        return cache[d]

    re_acc = 0.0
    im_acc = 0.0
    terms = []
    partial = []
    running: list[float] = []
    for N in range(1, N_max + 1):
        new = mh(0)
        for m in range(N - 1):
            d = s[N - 1] - s[m]
            new += mh(d) + mh(-d)
        re_acc += new.real
        im_acc += new.imag
        if abs(im_acc) >= 1e-9 * max(1.0, abs(re_acc)):
            raise AssertionError(f"imaginary part {im_acc} did not cancel at N={N}")
        t = re_acc / float(N) ** 3
        terms.append(t)
        running.append(t)
        partial.append(math.fsum(running))
    return DelSums(terms, partial, len(cache))


@dataclass(frozen=True)
class EquidistReport:
    weyl: dict
    discrepancy: float
    del_partial: list
    n_points: int


def equidist_report(x, spec: OrbitSpec, ps: Sequence[int] = (1,), N: Optional[int] = None,
                    mu_hat: Optional[Callable] = None, del_N: int = 0) -> EquidistReport:
    u = orbit_points(x, spec, N)
    weyl = {(p, u.size): _weyl_from_points(u, p) for p in ps}
    dels = del_partial_sums(mu_hat, spec, ps[0], del_N).partial if mu_hat and del_N else []
    return EquidistReport(weyl, star_discrepancy(u), dels, int(u.size))


@dataclass(frozen=True)
class NormalityReport:
    base: int
    N: int
    n_samples: int
    mean: float
    quantiles: dict
    discrepancies: list
    calibration_flag: str = "finite-N threshold is a calibration choice"


def normality_experiment(model: MeasureModel, base: int, n_samples: int, N: int,
                         seed: int = 0) -> NormalityReport:
    """Star discrepancy of (base^k x mod 1)_{k<=N} for exact samples x of the model."""
    if base < 2:
        raise DomainError("base must be >= 2")
    if N < 1:
        raise DomainError("N must be >= 1")
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    if not isinstance(model, (Bernoulli, Lebesgue, GaussMeasure)):
        raise DomainError("normality experiments need an exactly samplable model")
    bits = int(math.ceil(N * math.log2(base))) + 64
    spec = power_base(base, N)
    discs = []
    for j in range(n_samples):
        x = sample_exact(model, seed, bits, index=j)
        discs.append(star_discrepancy(orbit_points(x, spec, N)))
    arr = np.array(discs)
    q = {str(k): float(np.quantile(arr, k)) for k in (0.1, 0.5, 0.9)}
    return NormalityReport(base, N, n_samples, float(arr.mean()), q, discs)
