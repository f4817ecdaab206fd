"""Products of consecutive partial quotients, the Dirichlet criterion and
the combinatorial estimates used as oracles.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .cf_core import QuotientSequence, convergents, log_int
from .errors import DomainError, InsufficientQuotientsError, PreconditionError

# log-domain comparisons closer than this are reported as undecided
GUARD_BAND = 1e-12

COMPOSITION_LIMIT = 10**7


@dataclass(frozen=True)
class ProductStats:
    n: int
    L_n: int
    S_n: int
    argmax_index: int
    T_n: int
    log_L: float


def _quotients(qs):
    return qs.quotients if isinstance(qs, QuotientSequence) else tuple(qs)


def _need(quotients, count):
    if len(quotients) < count:
        raise InsufficientQuotientsError(
            f"need {count} partial quotients, have {len(quotients)}")


def product_stats(qs, n: int) -> ProductStats:
    a = _quotients(qs)
    if n < 1:
        raise PreconditionError("n must be at least 1")
    _need(a, n + 1)
    best, where, total = 0, 0, 0
    for i in range(n):
        prod = a[i] * a[i + 1]
        total += prod
        if prod > best:
            best, where = prod, i + 1
    return ProductStats(n, best, total, where, max(a[:n]), log_int(best))


def stats_rows(qs, N: int, phi=None):
    """Per-n rows (n, L_n, S_n, argmax, ratio) for n = 1..N.

    ratio is L_n / phi(n) when phi is given, otherwise None.
    """
    a = _quotients(qs)
    _need(a, N + 1)
    rows = []
    best, where, total = 0, 0, 0
    for i in range(N):
        prod = a[i] * a[i + 1]
        total += prod
        if prod > best:
            best, where = prod, i + 1
        ratio = None
        if phi is not None and i + 1 >= phi.n_min:
            ratio = math.exp(log_int(best) - phi.log_eval(i + 1))
        rows.append((i + 1, best, total, where, ratio))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "L_n", "S_n", "argmax", "ratio"])
    for n, L, S, arg, ratio in rows:
        w.writerow([n, L, S, arg, "" if ratio is None else format(ratio, ".12g")])
    return buf.getvalue()


def ratio_track(qs, phi, N: int):
    """[(n, L_n / phi(n))] for n = 1..N, computed as exp(log L_n - log phi(n)).

    The ratio is nan below phi's domain.
    """
    a = _quotients(qs)
    _need(a, N + 1)
    out = []
    best = 0
    log_best = -math.inf
    for i in range(N):
        prod = a[i] * a[i + 1]
        if prod > best:
            best = prod
            log_best = log_int(best)
        if i + 1 < phi.n_min:
            out.append((i + 1, math.nan))
        else:
            out.append((i + 1, math.exp(log_best - phi.log_eval(i + 1))))
    return out


@dataclass(frozen=True)
class DirichletReport:
    indices: tuple      # n with a_n a_{n+1} >= threshold, ties included
    borderline: tuple   # subset of indices within the guard band
    outer: bool


def dirichlet_report(qs, psi, N: int, outer: bool = False) -> DirichletReport:
    """Indices n <= N where a_n a_{n+1} reaches the Kleinbock-Wadleigh threshold.

    The threshold is x/(1-x) with x = q_n psi(q_n), divided by 4 in the
    outer form. Psi is evaluated from log q_n so huge q_n never overflow.
    """
    a = _quotients(qs)
    _need(a, N + 1)
    hits, border = [], []
    for conv in convergents(a, N):
        n = conv.index
        log_x = conv.log_q + psi.log_eval_at_log(conv.log_q)
        if log_x >= 0:
            raise DomainError(f"q_n Psi(q_n) >= 1 at n={n}")
        log_thr = log_x - math.log1p(-math.exp(log_x))
        if outer:
            log_thr -= math.log(4.0)
        gap = log_int(a[n - 1] * a[n]) - log_thr
        band = GUARD_BAND * max(1.0, abs(log_thr))
        # ties count as hits (the test is >=) but are also flagged as uncertified
        if abs(gap) <= band:
            border.append(n)
        if gap >= -band:
            hits.append(n)
    return DirichletReport(tuple(hits), tuple(border), outer)


def divisor_count(n: int) -> int:
    """Number of ordered pairs (a, b) of positive integers with ab = n."""
    if n < 1:
        raise DomainError("divisor_count needs n >= 1")
    count = 1
    p = 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        count *= e + 1
        p += 1 if p == 2 else 2
    if n > 1:
        count *= 2
    return count


def composition_count(m: int, n: int) -> int:
    return math.comb(m - 1, n - 1)


def composition_sum(m: int, n: int, s: float) -> float:
    """Brute-force sum over compositions of m into n positive parts of prod i^(-2s)."""
    if not (m >= n >= 1):
        raise PreconditionError("composition_sum needs m >= n >= 1")
    count = composition_count(m, n)
    if count > COMPOSITION_LIMIT:
        raise PreconditionError(f"{count} compositions exceed the limit {COMPOSITION_LIMIT}")
    w = [0.0] + [i ** (-2.0 * s) for i in range(1, m + 1)]
    terms = []
    for cuts in itertools.combinations(range(1, m), n - 1):
        prod = 1.0
        prev = 0
        for c in cuts + (m,):
            prod *= w[c - prev]
            prev = c
        terms.append(prod)
    return math.fsum(terms)


def composition_bound(m: int, n: int, s: float) -> float:
    """The closed-form upper bound (9/2 (2 + zeta(2s)))^n m^(-2s)."""
    return (4.5 * (2.0 + float(zeta(2.0 * s)))) ** n * m ** (-2.0 * s)


def stirling_log_bounds(n):
    """Logs of sqrt(2 pi) n^(n+1/2) e^-n and e n^(n+1/2) e^-n; accepts arrays."""
    n = np.asarray(n, dtype=float)
    core = (n + 0.5) * np.log(n) - n
    return 0.5 * math.log(2 * math.pi) + core, 1.0 + core
