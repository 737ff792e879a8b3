"""Regular sets A_k(eps), regular words R_n and their audits, irregular-mass
decay, and tail exponents of measure models.

For a word w and y in [0, 1] the Birkhoff sums at T_w(y) are
S_k psi = -2 log(q_{k-1} y + q_k) and S_k phi = G_k + t S_k psi, both
monotone in y.  Testing the endpoints y = 0 and y = 1 therefore decides
whether a whole cylinder lies in A_k(eps).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import enumeration_budget
from .contfrac import GOLDEN, THETA, as_word, continuants
from .errors import BudgetError, DomainError, FitError
from .measure import Bernoulli, FinitePotential, MeasureModel, mass_weights, tail_mass
from .potentials import Alphabet, BernoulliLog, Finite, Potential, normal_form

LOG_THETA = math.log(THETA)


@dataclass(frozen=True)
class RegularParams:
    epsilon: float
    lam: float
    s: float
    n: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if not 0 < self.s <= 1:
            raise DomainError("s must lie in (0, 1]")
        if self.lam < 2 * LOG_THETA - 1e-9:
            raise DomainError("lambda is below the minimal Lyapunov exponent 2 log theta")
        if self.n < 1:
            raise DomainError("n must be >= 1")

    @property
    def k_range(self) -> range:
        return range(max(1, self.n // 2), self.n + 1)


def _prefix_sums(potential: Potential, words: np.ndarray):
    """Per prefix length k: (q_prev, q, G) arrays of shape (N, n)."""
    nf = normal_form(potential)
    N, n = words.shape
    top = int(words.max()) if words.size else 1
    table = np.array([nf.digit_weight(a) if a >= 1 else 0.0 for a in range(top + 1)])
    qp_all = np.empty((N, n))
    q_all = np.empty((N, n))
    qp = np.zeros(N)
    q = np.ones(N)
    for col in range(n):
        qp, q = q, words[:, col] * q + qp
        qp_all[:, col] = qp
        q_all[:, col] = q
    G = np.cumsum(table[words], axis=1)
    return qp_all, q_all, G, nf.t


def _in_A(Spsi, Sphi, k, params):
    with np.errstate(divide="ignore", invalid="ignore"):
        ok_psi = np.abs(Spsi / k + params.lam) < params.epsilon
        ok_phi = np.abs(Sphi / Spsi - params.s) < params.epsilon
    return ok_psi & ok_phi


def membership_trace(potential: Potential, words: np.ndarray, params: RegularParams) -> np.ndarray:
    """Boolean array (N, len(k_range)): cylinder of w|k inside A_k(eps)."""
    words = np.asarray(words, dtype=np.int64)
    if words.ndim == 1:
        words = words[None, :]
    if words.shape[1] != params.n:
        raise DomainError(f"word length {words.shape[1]} differs from n={params.n}")
    qp_all, q_all, G, t = _prefix_sums(potential, words)
    out = np.empty((words.shape[0], len(params.k_range)), dtype=bool)
    for j, k in enumerate(params.k_range):
        qp, q, g = qp_all[:, k - 1], q_all[:, k - 1], G[:, k - 1]
        ok = np.ones(words.shape[0], dtype=bool)
        for y in (0.0, 1.0):
            Spsi = -2.0 * np.log(qp * y + q)
            ok &= _in_A(Spsi, g + t * Spsi, k, params)
        out[:, j] = ok
    return out


def regular_mask(potential: Potential, words: np.ndarray, params: RegularParams) -> np.ndarray:
    return membership_trace(potential, words, params).all(axis=1)


def regular_membership(potential: Potential, word: Sequence[int], params: RegularParams) -> bool:
    """True iff I_{w|k} lies in A_k(eps) for every k from floor(n/2) to n."""
    word = as_word(word)
    if len(word) != params.n:
        raise DomainError(f"word length {len(word)} differs from n={params.n}")
    return bool(regular_mask(potential, np.array([word]), params)[0])


# ---------------------------------------------------------------------------
# the four comparisons for regular words

BOUND_NAMES = ("continuant", "length", "derivative", "weight", "measure")


@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    worst_slack: float  # smallest log-margin over k and both sides


@dataclass(frozen=True)
class RegularAudit:
    word: tuple[int, ...]
    checks: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())


def _margin(lo_log, val_log, hi_log):
    return min(val_log - lo_log, hi_log - val_log)


def lemma_regular_check(word: Sequence[int], params: RegularParams,
                        potential: Optional[Potential] = None,
                        model: Optional[MeasureModel] = None,
                        gibbs_constant: float = 1.0) -> RegularAudit:
    """Check the continuant, length, derivative, weight and measure bounds.

    Every k from floor(n/2) to n is checked with exact continuants; the
    result records pass/fail per bound and the worst log-margin.  The
    weight bound needs ``potential`` and the measure bound ``model``.
    """
    word = as_word(word)
    if len(word) != params.n:
        raise DomainError(f"word length {len(word)} differs from n={params.n}")
    lam, eps, s = params.lam, params.epsilon, params.s
    nf = normal_form(potential) if potential is not None else None
    worst = {name: math.inf for name in BOUND_NAMES}
    for k in params.k_range:
        prefix = word[:k]
        c = continuants(prefix)
        # (1) e^{(lam-eps)k} <= q_k^2 <= 4 e^{(lam+eps)k}
        worst["continuant"] = min(worst["continuant"], _margin(
            (lam - eps) * k, 2.0 * math.log(c.q), math.log(4.0) + (lam + eps) * k))
        # (2) (1/16) e^{(-lam-eps)k} <= |I|, |T'| <= e^{(-lam+eps)k}
        lo2, hi2 = -math.log(16.0) - (lam + eps) * k, (-lam + eps) * k
        log_len = -math.log(c.q) - math.log(c.q + c.q_prev)
        worst["length"] = min(worst["length"], _margin(lo2, log_len, hi2))
        for y in (0.0, 1.0):
            log_der = -2.0 * math.log(c.q_prev * y + c.q)
            worst["derivative"] = min(worst["derivative"], _margin(lo2, log_der, hi2))
            if nf is not None:
                log_w = math.fsum(nf.digit_weight(a) for a in prefix) + nf.t * log_der
                # (3) e^{(-s lam - 3 lam eps)k} <= w <= e^{(-s lam + 3 lam eps)k}
                worst["weight"] = min(worst["weight"], _margin(
                    (-s * lam - 3 * lam * eps) * k, log_w, (-s * lam + 3 * lam * eps) * k))
        if model is not None:
            from .measure import cylinder_mass

            m = cylinder_mass(model, prefix)
            logC = math.log(gibbs_constant)
            worst["measure"] = min(worst["measure"], _margin(
                -logC + (-s * lam - 3 * lam * eps) * k, math.log(m) if m > 0 else -math.inf,
                logC + (-s * lam + 3 * lam * eps) * k))
    checks = {name: BoundCheck(v >= 0, v) for name, v in worst.items() if v != math.inf}
    return RegularAudit(word, checks)


# ---------------------------------------------------------------------------
# enumeration

@dataclass
class RegularWordSet:
    params: RegularParams
    words: np.ndarray
    complement_mass: float
    accepted_mass: float
    audit: dict = field(default_factory=dict)

    @property
    def audit_failures(self) -> int:
        return sum(v["failed"] for v in self.audit.values())

    def __len__(self):
        return self.words.shape[0]


def default_model(potential: Potential, alphabet: Alphabet) -> MeasureModel:
    if isinstance(potential, BernoulliLog) and potential.tail is None:
        top = max(potential.weights)
        probs = [math.exp(potential.log_weight(a)) for a in range(1, top + 1)]
        return Bernoulli(tuple(probs))
    from .measure import from_potential

    return from_potential(potential, alphabet)


def _gibbs_constant(model) -> float:
    return model.gibbs_constant if isinstance(model, FinitePotential) else 1.0


def enumerate_regular(potential: Potential, alphabet: Alphabet, params: RegularParams,
                      model: Optional[MeasureModel] = None, budget: Optional[int] = None,
                      audit: bool = True) -> RegularWordSet:
    """Filter alphabet^n by regular membership and audit every accepted word."""
    from .thermo import enumerate_words

    if not isinstance(alphabet, Finite):
        raise DomainError("regular-word enumeration needs a finite alphabet")
    count = alphabet.size ** params.n
    limit = enumeration_budget(budget)
    if count > limit:
        raise BudgetError(f"regular enumeration needs {count} words, budget is {limit}")
    if model is None:
        model = default_model(potential, alphabet)
    words = enumerate_words(alphabet.digits, params.n)
    mask = regular_mask(potential, words, params)
    mass = mass_weights(model, words)
    accepted = words[mask]
    report = {}
    if audit:
        C = _gibbs_constant(model)
        report = {name: {"passed": 0, "failed": 0, "worst_slack": math.inf} for name in BOUND_NAMES}
        for w in accepted:
            rec = lemma_regular_check(tuple(int(d) for d in w), params, potential, model, C)
            for name, chk in rec.checks.items():
                slot = report[name]
                slot["passed" if chk.passed else "failed"] += 1
                slot["worst_slack"] = min(slot["worst_slack"], chk.worst_slack)
        report = {k: v for k, v in report.items() if v["passed"] + v["failed"] > 0}
    return RegularWordSet(params, accepted, float(mass[~mask].sum()), float(mass[mask].sum()), report)


@dataclass(frozen=True)
class IrregularCurve:
    points: list
    slope: float
    delta_hat: float
    lam: float
    s: float
    audit_failures: int


def irregular_mass_curve(model: MeasureModel, potential: Potential, alphabet: Alphabet,
                         epsilon: float, n_range: Sequence[int], lam: Optional[float] = None,
                         s: Optional[float] = None, stats_depth: Optional[int] = None,
                         budget: Optional[int] = None) -> IrregularCurve:
    """Complement mass of R_n for each n, with delta_hat = -4 * slope of log mass.

    Missing (lam, s) come from the thermo estimators at depth
    ``stats_depth`` (default: the largest n).
    """
    n_range = sorted(int(n) for n in n_range)
    if not n_range:
        raise DomainError("n_range is empty")
    if lam is None or s is None:
        from .thermo import measure_stats

        st = measure_stats(model, stats_depth or n_range[-1], budget)
        lam = st.lyapunov_lambda if lam is None else lam
        s = st.dimension_s if s is None else s
    points = []
    failures = 0
    for n in n_range:
        rs = enumerate_regular(potential, alphabet, RegularParams(epsilon, lam, s, n), model, budget)
        points.append((n, rs.complement_mass))
        failures += rs.audit_failures
    slope = math.nan
    positive = [(n, m) for n, m in points if m > 0]
    if len(positive) >= 2:
        x = np.array([n for n, _ in positive], dtype=float)
        y = np.log([m for _, m in positive])
        slope = float(np.polyfit(x, y, 1)[0])
    return IrregularCurve(points, slope, -4.0 * slope, lam, s, failures)


# ---------------------------------------------------------------------------
# tails

@dataclass(frozen=True)
class TailExponent:
    kind: str  # "polynomial", "exponential" or "finite support"
    delta_hat: float
    rate: Optional[float] = None
    r_squared: Optional[float] = None


def tail_exponent(model: MeasureModel, n_range: Sequence[int]) -> TailExponent:
    """Tail law of mu({a_1 >= n}): polynomial exponent, exponential rate or finite support."""
    if isinstance(model, Bernoulli):
        if model.tail is not None:
            return TailExponent("exponential", math.inf, -math.log(model.tail.ratio))
        if model.support_max is not None and any(n > model.support_max for n in n_range):
            return TailExponent("finite support", math.inf, None)
    if isinstance(model, FinitePotential) and any(n > model.alphabet.max_digit for n in n_range):
        return TailExponent("finite support", math.inf, None)
    ns = np.array(sorted(set(int(n) for n in n_range)), dtype=float)
    if ns.size < 2:
        raise FitError("need at least two tail points")
    masses = np.array([tail_mass(model, int(n)) for n in ns])
    if (masses <= 0).any():
        raise FitError("nonpositive tail masses")
    x, y = np.log(ns), np.log(masses)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss if ss > 0 else 1.0
    return TailExponent("polynomial", float(-slope), None, r2)


# ---------------------------------------------------------------------------
# proof thresholds (documentation only)

def n0_threshold(epsilon: float, lam: float, s: float, gibbs_constant: float = 1.0,
                 delta: float = 0.1, n1: int = 0, n_max: int = 10 ** 6) -> int:
    """Smallest even n0 meeting the four threshold conditions on n0.

    Purely informational: these are worst-case proof constants and no
    runtime path depends on them.
    """
    C = gibbs_constant
    c0, theta = GOLDEN.c0, GOLDEN.theta
    for n0 in range(2, n_max + 1, 2):
        if not n0 / 2 > n1:
            continue
        if not math.log(4.0) / (n0 / 2) < epsilon / 2:
            continue
        if not math.log(4.0 * C * C) / (2 * math.log(c0) + n0 * math.log(theta)) < epsilon / 2 \
                or 2 * math.log(c0) + n0 * math.log(theta) <= 0:
            continue
        if not math.exp(-delta * n0 / 2) / (1.0 - math.exp(-delta)) < math.exp(-delta * n0 / 4):
            continue
        if not n0 / 2 >= math.log(2 * math.pi) + lam + 2 * lam * epsilon:
            continue
        if not epsilon * lam * n0 >= math.log(2 * C * math.pi) + (1 + 2 * s) * lam:
            continue
        if not (lam / 2 - 2 * epsilon) * n0 >= math.log(192.0):
            continue
        return n0
    raise DomainError("no admissible n0 below n_max")
