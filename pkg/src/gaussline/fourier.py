"""Fourier transforms of measure models with certified error bounds,
frequency scans, decay fits and the stationary-phase audit.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import _kernels as K
from .contfrac import Word, as_word, continuants, mirror
from .errors import BudgetError, DomainError, FitError
from .measure import (
    Bernoulli,
    FinitePotential,
    MeasureModel,
    kernel_model,
    mass_weights,
    sample,
)
from .potentials import Alphabet, Finite, Potential

TWO_PI = 2.0 * math.pi
DEFAULT_FOURIER_BUDGET = 2 ** 31  # leaves per frequency
SCAN_PER_DECADE = 16


@dataclass(frozen=True)
class FourierPoint:
    xi: float
    value: complex
    error_bound: float
    method: str
    work: int

    @property
    def ok(self) -> bool:
        return math.isfinite(self.error_bound)


@dataclass(frozen=True)
class DecayFit:
    eta_hat: float
    log_c: float
    r_squared: float
    window: tuple[float, float]
    points_used: int
    points_excluded: int = 0
    ci95: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class StationaryPhaseReport:
    word_a: Word
    word_b: Word
    xi: float
    alpha1: int
    alpha2: int
    a: float
    b: float
    integral_abs: float
    integral_error: float
    bound_case1: Optional[float]
    bound_case2: Optional[float]
    case1_applies: bool
    case2_applies: bool
    case1_holds: Optional[bool]
    case2_holds: Optional[bool]

    @property
    def violated(self) -> bool:
        return self.case1_holds is False or self.case2_holds is False


# ---------------------------------------------------------------------------
# single-frequency transforms

def _root_cylinder_sum(model: MeasureModel, xi: float, tol: float, budget: int):
    km = kernel_model(model)
    thr = tol / budget
    return K.fourier_cylinders(km.kind, km.probs, km.suffix, km.tail_c, km.tail_r, km.gvals,
                               km.pot_t, km.pot_p, km.dmax, km.infinite, float(xi), tol, thr,
                               budget, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0)


def transform_cylinder(model: MeasureModel, xi: float, tol: float = 1e-3,
                       budget: Optional[int] = None) -> FourierPoint:
    """mu^(xi) = int exp(-2 pi i xi x) dmu by adaptive cylinder refinement.

    Leaves satisfy 2 pi |xi| |I| <= tol or carry mass below tol / budget;
    the error bound sums mass * min(2, 2 pi |xi| |I|) over leaves, plus the
    model's missing mass.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if xi == 0:
        return FourierPoint(0.0, complex(1.0, 0.0), 0.0, "cylinder", 0)
    budget = DEFAULT_FOURIER_BUDGET if budget is None else int(budget)
    re, im, err, leaves, status, msum = _root_cylinder_sum(model, xi, tol, budget)
    if status:
        raise BudgetError(f"cylinder refinement at xi={xi} exceeded {budget} leaves",
                          partial=FourierPoint(float(xi), complex(re, im), math.inf, "cylinder", int(leaves)))
    # unit mass minus what the leaves carried (truncation, or Gibbs slack)
    err += abs(1.0 - msum)
    return FourierPoint(float(xi), complex(re, im), float(err), "cylinder", int(leaves))


def transform_mc(model: MeasureModel, xi: float, n_samples: int = 10 ** 6, seed: int = 0,
                 batch: int = 2 ** 16) -> FourierPoint:
    """Monte Carlo average of exp(-2 pi i xi X); error radius 3 / sqrt(n)."""
    if n_samples < 100:
        raise DomainError("n_samples must be >= 100")
    if xi == 0:
        return FourierPoint(0.0, complex(1.0, 0.0), 0.0, "montecarlo", n_samples)
    re = 0.0
    im = 0.0
    for start in range(0, n_samples, batch):
        size = min(batch, n_samples - start)
        x = sample(model, seed, size=size, start=start)
        ph = -TWO_PI * xi * x
        re += float(np.cos(ph).sum())
        im += float(np.sin(ph).sum())
    value = complex(re, im) / n_samples
    return FourierPoint(float(xi), value, 3.0 / math.sqrt(n_samples), "montecarlo", n_samples)


def transform_quadrature(density: Callable[[float], float], xi: float, limit: int = 400) -> FourierPoint:
    """Direct adaptive quadrature for absolutely continuous models."""
    from scipy.integrate import quad

    if xi == 0:
        return FourierPoint(0.0, complex(1.0, 0.0), 0.0, "quadrature", 0)
    w = TWO_PI * xi
    re, e1 = quad(density, 0.0, 1.0, weight="cos", wvar=w, limit=limit)
    im, e2 = quad(density, 0.0, 1.0, weight="sin", wvar=w, limit=limit)
    return FourierPoint(float(xi), complex(re, -im), e1 + e2, "quadrature", limit)


def gauss_density(x: float) -> float:
    return 1.0 / (math.log(2.0) * (1.0 + x))


# ---------------------------------------------------------------------------
# frequency grids and scans

def log_frequencies(lo: float, hi: float, per_decade: int = SCAN_PER_DECADE) -> np.ndarray:
    if not 0 < lo <= hi:
        raise DomainError("log grid needs 0 < lo <= hi")
    count = int(math.floor(per_decade * math.log10(hi / lo) + 1e-9)) + 1
    grid = lo * 10.0 ** (np.arange(count) / per_decade)
    if grid[-1] < hi * (1 - 1e-12):
        grid = np.append(grid, hi)
    return grid


def scan(model: MeasureModel, frequencies: Iterable[float], tol: float = 1e-3,
         budget: Optional[int] = None, workers: int = 1) -> list[FourierPoint]:
    """transform_cylinder at each frequency, results in input order.

    Points that run out of budget come back tagged ``budget-exceeded``
    with an infinite error bound instead of aborting the scan.
    """
    freqs = [float(f) for f in frequencies]
    if not freqs:
        raise DomainError("no frequencies to scan")

    def one(xi):
        try:
            return transform_cylinder(model, xi, tol, budget)
        except BudgetError as exc:
            part = exc.partial
            work = part.work if part is not None else 0
            return FourierPoint(xi, complex(math.nan, math.nan), math.inf, "budget-exceeded", work)

    if workers <= 1:
        return [one(xi) for xi in freqs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, freqs))


# ---------------------------------------------------------------------------
# decay fits

def _line_fit(x: np.ndarray, y: np.ndarray):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def fit_decay(points: Sequence[FourierPoint], window: Optional[tuple[float, float]] = None,
              bootstrap: int = 0, seed: int = 0) -> DecayFit:
    """Least-squares line through (log xi, log |mu^|); eta_hat = -slope.

    Points whose magnitude does not exceed their error bound are dropped.
    ``bootstrap`` > 0 adds a percentile 95% interval from that many
    resamples of the usable points.
    """
    if window is None:
        xs = [abs(p.xi) for p in points if p.xi != 0]
        if not xs:
            raise FitError("no nonzero frequencies")
        window = (min(xs), max(xs))
    lo, hi = window
    inside = [p for p in points if lo <= abs(p.xi) <= hi and p.xi != 0]
    usable = [p for p in inside if p.ok and abs(p.value) > p.error_bound]
    excluded = len(inside) - len(usable)
    if len(usable) < 8:
        raise FitError(f"only {len(usable)} usable points in window (need 8)")
    x = np.log(np.array([abs(p.xi) for p in usable]))
    y = np.log(np.array([abs(p.value) for p in usable]))
    if (x.max() - x.min()) / math.log(10.0) < 2.0 - 1e-9:
        raise FitError("usable points span fewer than two decades")
    slope, intercept, r2 = _line_fit(x, y)
    ci = None
    if bootstrap > 0:
        rng = np.random.default_rng(seed)
        etas = []
        for _ in range(bootstrap):
            idx = rng.integers(0, len(x), len(x))
            if np.ptp(x[idx]) == 0:
                continue
            etas.append(-np.polyfit(x[idx], y[idx], 1)[0])
        ci = (float(np.percentile(etas, 2.5)), float(np.percentile(etas, 97.5)))
    return DecayFit(-slope, intercept, r2, (float(lo), float(hi)), len(usable), excluded, ci)


# ---------------------------------------------------------------------------
# constants of the decay theorem

def eta_constants(s: float) -> dict:
    """eta_s = (2s^2 - s)/((4 - s)(1 + 2s)), rho_s = (8s^3 + 10s^2 - s)/((4 - s)(1 + 2s))."""
    if not 0.5 < s <= 1.0:
        raise DomainError("eta constants need 1/2 < s <= 1")
    den = (4.0 - s) * (1.0 + 2.0 * s)
    eta = (2.0 * s * s - s) / den
    rho = (8.0 * s ** 3 + 10.0 * s * s - s) / den
    assert rho > eta > 0
    return {"eta_s": eta, "rho_s": rho}


def depth_for_frequency(u: float, lam: float, s: float) -> int:
    """The n with exp((1+2s) lambda n) <= u < exp((1+2s) lambda (n+1))."""
    if u < 1 or lam <= 0:
        raise DomainError("need u >= 1 and lambda > 0")
    return int(math.floor(math.log(u) / ((1.0 + 2.0 * s) * lam)))


# ---------------------------------------------------------------------------
# stationary phase

def _simpson(f, n):
    x = np.linspace(0.0, 1.0, n + 1)
    y = f(x)
    return (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()) / (3.0 * n)


def stationary_phase_check(word_a: Sequence[int], word_b: Sequence[int], xi: float,
                           quad_points: int = 4096) -> StationaryPhaseReport:
    """Compare |int_0^1 exp(2 pi i xi (T_a - T_b))| with both stationary-phase bounds.

    a = min|phi| and b = max(max|phi|, max|phi'|) are the exact envelopes:
    |phi| and every term of |phi'| decrease on [0, 1], so they sit at the
    endpoints.  The integral uses composite Simpson at N and 2N points with
    Richardson extrapolation; its error estimate is added in the bound
    comparison.
    """
    word_a, word_b = as_word(word_a), as_word(word_b)
    if len(word_a) != len(word_b):
        raise DomainError("words must have the same length")
    if len(word_a) < 2:
        raise DomainError("words must have length >= 2")
    if quad_points < 1000:
        raise DomainError("quad_points must be >= 1000")
    ca, cb = continuants(word_a), continuants(word_b)
    alpha1 = ca.q_prev - cb.q_prev
    alpha2 = ca.q - cb.q
    # the same integers from the mirrored words: q_prev(w) = p(mirror w), q(w) = q(mirror w)
    ma, mb = continuants(mirror(word_a)), continuants(mirror(word_b))
    assert (ma.p - mb.p, ma.q - mb.q) == (alpha1, alpha2)
    qa1, qa, qb1, qb = float(ca.q_prev), float(ca.q), float(cb.q_prev), float(cb.q)
    axi = abs(xi)

    def phi_abs(x):
        A, B = qa1 * x + qa, qb1 * x + qb
        return axi * (1.0 / (A * B * B) + 1.0 / (A * A * B))

    def dphi_abs(x):
        A, B = qa1 * x + qa, qb1 * x + qb
        return axi * (qa1 / (A * A * B * B) + 2.0 * qb1 / (A * B ** 3)
                      + 2.0 * qa1 / (A ** 3 * B) + qb1 / (A * A * B * B))

    a_env = phi_abs(1.0)
    b_env = max(phi_abs(0.0), dphi_abs(0.0))

    pa1, pa, pb1, pb = float(ca.p_prev), float(ca.p), float(cb.p_prev), float(cb.p)

    def integrand(x):
        ta = (pa1 * x + pa) / (qa1 * x + qa)
        tb = (pb1 * x + pb) / (qb1 * x + qb)
        return np.exp(2j * math.pi * xi * (ta - tb))

    n = quad_points + (quad_points % 2)
    coarse = _simpson(integrand, n)
    fine = _simpson(integrand, 2 * n)
    value = fine + (fine - coarse) / 15.0
    qerr = abs(fine - coarse) / 15.0
    integral = abs(value)

    case1 = alpha1 != 0
    case2 = alpha2 != 0 and abs(alpha1) <= abs(alpha2) / 2
    bound1 = 6.0 * b_env * a_env ** -1.5 * abs(alpha1) ** -0.5 if case1 else None
    bound2 = 8.0 / abs(alpha2) * (1.0 / a_env + b_env / a_env ** 2) if case2 else None
    holds1 = (integral - qerr <= bound1) if case1 else None
    holds2 = (integral - qerr <= bound2) if case2 else None
    return StationaryPhaseReport(word_a, word_b, float(xi), alpha1, alpha2, a_env, b_env,
                                 integral, qerr, bound1, bound2, case1, case2, holds1, holds2)


def stationary_phase_audit(alphabet: Sequence[int], n: int, xis: Sequence[float], trials: int,
                           seed: int = 0, quad_points: int = 4096) -> dict:
    """Random same-length word pairs; counts applicable cases and violations."""
    rng = np.random.default_rng(seed)
    digits = np.asarray(sorted(alphabet))
    summary = {"trials": 0, "case1_applicable": 0, "case2_applicable": 0,
               "violations": 0, "worst_ratio": 0.0, "violating_pairs": []}
    for _ in range(trials):
        a = tuple(int(d) for d in rng.choice(digits, n))
        b = tuple(int(d) for d in rng.choice(digits, n))
        for xi in xis:
            rep = stationary_phase_check(a, b, xi, quad_points)
            summary["trials"] += 1
            for applies, bound in ((rep.case1_applies, rep.bound_case1),
                                   (rep.case2_applies, rep.bound_case2)):
                if applies:
                    summary["worst_ratio"] = max(summary["worst_ratio"], rep.integral_abs / bound)
            summary["case1_applicable"] += rep.case1_applies
            summary["case2_applicable"] += rep.case2_applies
            if rep.violated:
                summary["violations"] += 1
                summary["violating_pairs"].append((a, b, xi))
    return summary


# ---------------------------------------------------------------------------
# regular / irregular split of the transfer-operator sum

@dataclass(frozen=True)
class OperatorSplit:
    full: complex
    regular: complex
    irregular_mass: float
    error_bound: float
    n: int
    words: int


def transform_operator_split(model: MeasureModel, potential: Potential, alphabet: Alphabet,
                             xi: float, n: int, epsilon: float, lam: float, s: float,
                             budget: Optional[int] = None) -> OperatorSplit:
    """Depth-n operator form of mu^(xi), split over regular words.

    The full sum is sum_a mu(I_a) exp(-2 pi i xi x_a) with x_a the cylinder
    midpoint; each term is off by at most mu(I_a) min(2, 2 pi |xi| |I_a|),
    accumulated in ``error_bound``.  ``regular`` restricts the sum to R_n,
    ``irregular_mass`` is the mass of the remaining words.
    """
    from .deviation import RegularParams, regular_mask
    from .thermo import enumerate_words, word_continuants, _check_budget

    if not isinstance(alphabet, Finite):
        raise DomainError("the operator split needs a finite alphabet")
    if not isinstance(model, (Bernoulli, FinitePotential)):
        raise DomainError("the operator split needs a Bernoulli or potential model")
    _check_budget(alphabet.size ** n, budget, "operator split")
    words = enumerate_words(alphabet.digits, n)
    mass = mass_weights(model, words)
    pp, qp, p, q = word_continuants(words)
    mid = 0.5 * (p / q + (p + pp) / (q + qp))
    length = 1.0 / (q * (q + qp))
    terms = mass * np.exp(-2j * math.pi * xi * mid)
    err = float((mass * np.minimum(2.0, TWO_PI * abs(xi) * length)).sum())
    err += abs(1.0 - float(mass.sum()))
    mask = regular_mask(potential, words, RegularParams(epsilon, lam, s, n))
    full = complex(terms.sum())
    regular = complex(terms[mask].sum())
    irregular = float(mass[~mask].sum())
    return OperatorSplit(full, regular, irregular, err, n, int(words.shape[0]))
