"""numba inner loops.  Callers in the public modules validate inputs."""
from __future__ import annotations

import math

import numpy as np
from numba import njit

# model kinds understood by the cylinder kernels
BERNOULLI = 0
LEBESGUE = 1
GAUSS = 2
POTENTIAL = 3

TWO_PI = 2.0 * math.pi
LOG2 = math.log(2.0)
MAX_STACK = 4096

FUNC_NEG_LOG = 0   # f(x) = -log x
FUNC_LOG1P = 1     # f(x) = log(1 + x)


@njit(cache=True)
def word_values(digits, gvals, t, depth, at_zero, out):
    """Fill out[i] = sum_k g(a_k) + t*log|T_a'(x_a)| for the i-th word of
    digits^depth in lexicographic order.

    x_a is the fixed point of T_a (at_zero=False) or 0 (at_zero=True).
    """
    m = digits.shape[0]
    pp = np.empty(depth + 1)
    qp = np.empty(depth + 1)
    p = np.empty(depth + 1)
    q = np.empty(depth + 1)
    G = np.empty(depth + 1)
    pp[0] = 1.0
    p[0] = 0.0
    qp[0] = 0.0
    q[0] = 1.0
    G[0] = 0.0
    idx = np.zeros(depth, np.int64)
    for j in range(1, depth + 1):
        a = digits[0]
        pp[j] = p[j - 1]
        qp[j] = q[j - 1]
        p[j] = a * p[j - 1] + pp[j - 1]
        q[j] = a * q[j - 1] + qp[j - 1]
        G[j] = G[j - 1] + gvals[0]
    count = 0
    while True:
        P1 = pp[depth]
        Q1 = qp[depth]
        P0 = p[depth]
        Q0 = q[depth]
        if at_zero:
            x = 0.0
        else:
            x = 0.5 * (P0 / Q0 + (P0 + P1) / (Q0 + Q1))
            for _ in range(200):
                nx = (P1 * x + P0) / (Q1 * x + Q0)
                if abs(nx - x) < 1e-15:
                    x = nx
                    break
                x = nx
        out[count] = G[depth] + t * (-2.0 * math.log(Q1 * x + Q0))
        count += 1
        lvl = depth - 1
        while lvl >= 0 and idx[lvl] == m - 1:
            idx[lvl] = 0
            lvl -= 1
        if lvl < 0:
            break
        idx[lvl] += 1
        for j in range(lvl + 1, depth + 1):
            k = idx[j - 1]
            a = digits[k]
            pp[j] = p[j - 1]
            qp[j] = q[j - 1]
            p[j] = a * p[j - 1] + pp[j - 1]
            q[j] = a * q[j - 1] + qp[j - 1]
            G[j] = G[j - 1] + gvals[k]
    return count


@njit(cache=True)
def scaled_logsumexp(values, scale, lo, hi):
    """log sum exp(scale * values[lo:hi]), accumulated in index order."""
    mx = -np.inf
    for i in range(lo, hi):
        v = scale * values[i]
        if v > mx:
            mx = v
    if mx == -np.inf:
        return -np.inf
    acc = 0.0
    for i in range(lo, hi):
        acc += math.exp(scale * values[i] - mx)
    return mx + math.log(acc)


@njit(cache=True)
def _digit_prob(d, probs, tail_c, tail_r):
    k = probs.shape[0] - 1
    if d <= k:
        return probs[d]
    return tail_c * tail_r ** d


@njit(cache=True)
def _tail_prob(d, probs, suffix, tail_c, tail_r):
    """sum_{e >= d} p_e."""
    k = probs.shape[0] - 1
    if d <= k:
        return suffix[d] + tail_c * tail_r ** (k + 1) / (1.0 - tail_r)
    return tail_c * tail_r ** d / (1.0 - tail_r)


@njit(cache=True)
def _interval_mass(kind, lo, hi):
    if kind == LEBESGUE:
        return hi - lo
    # Gauss measure
    return math.log1p((hi - lo) / (1.0 + lo)) / LOG2


@njit(cache=True, nogil=True)
def fourier_cylinders(kind, probs, suffix, tail_c, tail_r, gvals, pot_t, pot_p,
                      dmax, infinite, xi, tol, thr, budget,
                      r_pp, r_qp, r_p, r_q, r_mass, r_G, r_depth):
    """Adaptive cylinder sum of exp(-2 pi i xi x) d mu over the subtree at a
    root cylinder.  Returns (re, im, err, leaves, status, mass); status 1 means
    the leaf budget ran out and the sums are partial.
    """
    spp = np.empty(MAX_STACK)
    sqp = np.empty(MAX_STACK)
    sp = np.empty(MAX_STACK)
    sq = np.empty(MAX_STACK)
    smass = np.empty(MAX_STACK)
    sG = np.empty(MAX_STACK)
    sdepth = np.empty(MAX_STACK, np.int64)
    snext = np.empty(MAX_STACK, np.int64)
    top = 0
    spp[0] = r_pp
    sqp[0] = r_qp
    sp[0] = r_p
    sq[0] = r_q
    smass[0] = r_mass
    sG[0] = r_G
    sdepth[0] = r_depth
    snext[0] = 1
    w = TWO_PI * abs(xi)
    re = 0.0
    im = 0.0
    err = 0.0
    leaves = 0
    msum = 0.0
    lumpable = kind != POTENTIAL
    while top >= 0:
        d = snext[top]
        PP = spp[top]
        QP = sqp[top]
        P = sp[top]
        Q = sq[top]
        M = smass[top]
        if d > dmax:
            top -= 1
            continue
        if lumpable:
            # union of children e >= d is T_w([0, 1/d])
            e0 = P / Q
            e1 = (PP + d * P) / (QP + d * Q)
            lo = min(e0, e1)
            hi = max(e0, e1)
            if kind == BERNOULLI:
                lm = M * _tail_prob(d, probs, suffix, tail_c, tail_r)
            else:
                lm = _interval_mass(kind, lo, hi)
            if lm <= 0.0:
                top -= 1
                continue
            ln = hi - lo
            if w * ln <= tol or lm < thr or (infinite and d >= dmax):
                ph = -TWO_PI * xi * 0.5 * (lo + hi)
                re += lm * math.cos(ph)
                im += lm * math.sin(ph)
                err += lm * min(2.0, w * ln)
                msum += lm
                leaves += 1
                top -= 1
                if leaves > budget:
                    return re, im, err, leaves, 1, msum
                continue
        snext[top] = d + 1
        cpp = P
        cqp = Q
        cp = d * P + PP
        cq = d * Q + QP
        e0 = cp / cq
        e1 = (cp + cpp) / (cq + cqp)
        lo = min(e0, e1)
        hi = max(e0, e1)
        ln = hi - lo
        cG = 0.0
        if kind == BERNOULLI:
            cm = M * _digit_prob(d, probs, tail_c, tail_r)
        elif kind == POTENTIAL:
            if d >= gvals.shape[0] or gvals[d] == -np.inf:
                continue
            cG = sG[top] + gvals[d]
            cm = math.exp(cG + pot_t * (-2.0 * math.log(0.5 * cqp + cq))
                          - (sdepth[top] + 1) * pot_p)
        else:
            cm = _interval_mass(kind, lo, hi)
        if cm <= 0.0:
            continue
        if w * ln <= tol or cm < thr or top + 1 >= MAX_STACK:
            ph = -TWO_PI * xi * 0.5 * (lo + hi)
            re += cm * math.cos(ph)
            im += cm * math.sin(ph)
            err += cm * min(2.0, w * ln)
            msum += cm
            leaves += 1
            if leaves > budget:
                return re, im, err, leaves, 1, msum
            continue
        top += 1
        spp[top] = cpp
        sqp[top] = cqp
        sp[top] = cp
        sq[top] = cq
        smass[top] = cm
        sG[top] = cG
        sdepth[top] = sdepth[top - 1] + 1
        snext[top] = 1
    return re, im, err, leaves, 0, msum


@njit(cache=True)
def _func(code, x):
    if code == FUNC_NEG_LOG:
        if x <= 0.0:
            return np.inf
        return -math.log(x)
    return math.log1p(x)


@njit(cache=True)
def cylinder_quadrature(kind, probs, suffix, tail_c, tail_r, dmax, infinite,
                        func, depth, at_branch, eta, budget):
    """sum over depth-`depth` cylinders b of mu(I_b) * f(point_b).

    point_b is T_b(1/2) when at_branch, else the midpoint of I_b.  Subtrees
    whose mass times the oscillation of f over their hull is at most eta are
    collapsed to one evaluation at the hull midpoint.  Returns
    (value, collapse_err, leaf_err, uncounted, nodes, status): collapse_err
    bounds the collapsing, leaf_err is the mass * oscillation of f over the
    full-depth cylinders (the quadrature error against the integral) and
    uncounted is mass dropped where f is unbounded on the hull.
    """
    spp = np.empty(MAX_STACK)
    sqp = np.empty(MAX_STACK)
    sp = np.empty(MAX_STACK)
    sq = np.empty(MAX_STACK)
    smass = np.empty(MAX_STACK)
    sdepth = np.empty(MAX_STACK, np.int64)
    snext = np.empty(MAX_STACK, np.int64)
    top = 0
    spp[0] = 1.0
    sqp[0] = 0.0
    sp[0] = 0.0
    sq[0] = 1.0
    smass[0] = 1.0
    sdepth[0] = 0
    snext[0] = 1
    total = 0.0
    err = 0.0
    leaf_err = 0.0
    uncounted = 0.0
    nodes = 0
    while top >= 0:
        d = snext[top]
        PP = spp[top]
        QP = sqp[top]
        P = sp[top]
        Q = sq[top]
        M = smass[top]
        if d > dmax:
            top -= 1
            continue
        # try to collapse the remaining children e >= d
        e0 = P / Q
        e1 = (PP + d * P) / (QP + d * Q)
        lo = min(e0, e1)
        hi = max(e0, e1)
        if kind == BERNOULLI:
            lm = M * _tail_prob(d, probs, suffix, tail_c, tail_r)
        else:
            lm = _interval_mass(kind, lo, hi)
        if lm <= 0.0:
            top -= 1
            continue
        osc = abs(_func(func, hi) - _func(func, lo))
        if lm * osc <= eta or (infinite and d >= dmax):
            if osc == np.inf:
                uncounted += lm
            else:
                total += lm * _func(func, 0.5 * (lo + hi))
                err += lm * osc
            nodes += 1
            top -= 1
            if nodes > budget:
                return total, err, leaf_err, uncounted, nodes, 1
            continue
        snext[top] = d + 1
        cpp = P
        cqp = Q
        cp = d * P + PP
        cq = d * Q + QP
        e0 = cp / cq
        e1 = (cp + cpp) / (cq + cqp)
        lo = min(e0, e1)
        hi = max(e0, e1)
        if kind == BERNOULLI:
            cm = M * _digit_prob(d, probs, tail_c, tail_r)
        else:
            cm = _interval_mass(kind, lo, hi)
        if cm <= 0.0:
            continue
        cdepth = sdepth[top] + 1
        osc = abs(_func(func, hi) - _func(func, lo))
        if cdepth >= depth:
            if at_branch:
                x = (0.5 * cpp + cp) / (0.5 * cqp + cq)
            else:
                x = 0.5 * (lo + hi)
            total += cm * _func(func, x)
            leaf_err += cm * osc
            nodes += 1
            if nodes > budget:
                return total, err, leaf_err, uncounted, nodes, 1
            continue
        if cm * osc <= eta or top + 1 >= MAX_STACK:
            total += cm * _func(func, 0.5 * (lo + hi))
            err += cm * osc
            nodes += 1
            if nodes > budget:
                return total, err, leaf_err, uncounted, nodes, 1
            continue
        top += 1
        spp[top] = cpp
        sqp[top] = cqp
        sp[top] = cp
        sq[top] = cq
        smass[top] = cm
        sdepth[top] = cdepth
        snext[top] = 1
    return total, err, leaf_err, uncounted, nodes, 0


@njit(cache=True)
def value_range(values):
    lo = np.inf
    hi = -np.inf
    for i in range(values.shape[0]):
        v = values[i]
        if v < lo:
            lo = v
        if v > hi:
            hi = v
    return lo, hi


@njit(cache=True)
def shifted_sum_exp(values, scale, shift, lo, hi):
    """sum exp(scale * values[lo:hi] - shift), accumulated in index order."""
    acc = 0.0
    for i in range(lo, hi):
        acc += math.exp(scale * values[i] - shift)
    return acc


@njit(cache=True)
def question_mark_numerators(words, exponent, out):
    """out[i] = ?(word_i) * 2^exponent for zero-padded rows; returns the
    number of rows whose digit sum exceeds the exponent (left as -1)."""
    bad = 0
    for i in range(words.shape[0]):
        total = 0
        num = 0
        sign = 1
        ok = True
        for k in range(words.shape[1]):
            a = words[i, k]
            if a == 0:
                break
            total += a
            if total > exponent:
                ok = False
                break
            num += sign * (np.int64(1) << (exponent + 1 - total))
            sign = -sign
        if ok:
            out[i] = num
        else:
            out[i] = -1
            bad += 1
    return bad


@njit(cache=True)
def box_runs(nums, exponent, out, lengths):
    """Canonical CF digits of ?^{-1}(num / 2^exponent) from binary run lengths.

    Rows that need more than out.shape[1] digits get length -1."""
    width = out.shape[1]
    for i in range(nums.shape[0]):
        num = nums[i]
        n = 0
        current = 0
        run = 0
        j = exponent - 1
        overflow = False
        while j >= 0 and (num & ((np.int64(1) << (j + 1)) - 1)) != 0:
            bit = (num >> j) & 1
            if bit == current:
                run += 1
            else:
                if n >= width:
                    overflow = True
                    break
                out[i, n] = run + 1 if n == 0 else run
                n += 1
                current = bit
                run = 1
            j -= 1
        if not overflow:
            if n >= width:
                overflow = True
            else:
                out[i, n] = run + 1 if n == 0 else run
                n += 1
        if overflow:
            lengths[i] = -1
            continue
        if n > 1 and out[i, n - 1] == 1:
            out[i, n - 2] += 1
            out[i, n - 1] = 0
            n -= 1
        for k in range(n, width):
            out[i, k] = 0
        lengths[i] = n


@njit(cache=True)
def bernoulli_midpoints(u, depth, cum, total, tail_c, tail_r, out):
    """Midpoints of depth-`depth` cylinders with i.i.d. inverse-CDF digits.

    cum holds cumulative explicit weights; digits beyond them follow the
    geometric tail tail_c * tail_r**a (tail_c = 0 when there is none)."""
    k = cum.shape[0]
    top = cum[k - 1] if k > 0 else 0.0
    head = tail_c * tail_r ** (k + 1) / (1.0 - tail_r) if tail_c > 0 else 0.0
    log_r = math.log(tail_r) if tail_c > 0 else 0.0
    digits = np.empty(depth, dtype=np.int64)
    for i in range(u.shape[0]):
        for j in range(depth):
            v = u[i, j] * total
            if v < top:
                lo = 0
                hi = k
                while lo < hi:
                    mid = (lo + hi) // 2
                    if cum[mid] <= v:
                        lo = mid + 1
                    else:
                        hi = mid
                digits[j] = lo + 1
            elif tail_c > 0:
                frac = 1.0 - (v - top) / head
                if frac < 1e-300:
                    frac = 1e-300
                if frac > 1.0:
                    frac = 1.0
                extra = math.ceil(math.log(frac) / log_r)
                if extra < 1.0:
                    extra = 1.0
                digits[j] = k + np.int64(extra)
            else:
                digits[j] = max(k, 1)
        y0 = 0.0
        y1 = 1.0
        for j in range(depth - 1, -1, -1):
            a = digits[j]
            y0 = 1.0 / (a + y0)
            y1 = 1.0 / (a + y1)
        out[i] = 0.5 * (y0 + y1)
