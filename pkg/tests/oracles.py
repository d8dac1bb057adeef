"""Independent reference computations: plain loops, stdlib math, no scipy."""

import math

import numpy as np


def tvd_loop(r, s):
    return 1.0 - 0.5 * math.fsum(abs(a - b) for a, b in zip(r, s))


def kl_loop(p, q, delta=0.0):
    total = math.fsum(q) + delta * len(q)
    qs = [(x + delta) / total for x in q]
    return math.fsum(a * math.log(a / b) for a, b in zip(p, qs) if a > 0)


def entropy_loop(p):
    return -math.fsum(x * math.log2(x) for x in p if x > 0)


def mi_loop(joint):
    total = math.fsum(v for row in joint for v in row)
    p = [[v / total for v in row] for row in joint]
    px = [math.fsum(row) for row in p]
    py = [math.fsum(p[i][j] for i in range(len(p))) for j in range(len(p[0]))]
    return math.fsum(
        p[i][j] * math.log2(p[i][j] / (px[i] * py[j]))
        for i in range(len(p))
        for j in range(len(p[0]))
        if p[i][j] > 0
    )


def chi2_pdf(x, k):
    return np.exp((k / 2 - 1) * np.log(x) - x / 2 - (k / 2) * math.log(2) - math.lgamma(k / 2))


def chi2_upper_tail(stat, k, tol=1e-8):
    """Trapezoid integration of the chi-square density over [stat, stat + span],
    doubling the panel count until successive estimates agree within ``tol``."""
    if stat <= 0:
        return 1.0
    span = 40.0 + 20.0 * k + stat
    a, b = stat, stat + span
    n = 1024
    prev = None
    while True:
        x = np.linspace(a, b, n + 1)
        y = chi2_pdf(x, k)
        h = (b - a) / n
        est = h * (y.sum() - 0.5 * (y[0] + y[-1]))
        if prev is not None and abs(est - prev) < tol:
            return est
        prev = est
        n *= 2


def normal_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def inverse_normal_bisection(p, tol=1e-14):
    """Solve Phi(x) = p by bisection on the lower tail (uses symmetry for p > 0.5)."""
    if p > 0.5:
        return -inverse_normal_bisection(1.0 - p, tol)
    lo, hi = -40.0, 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
