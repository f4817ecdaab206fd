"""Seeded sampling of typical points and the almost-everywhere trend checks.

A random point is a dyadic interval of width 2^-B drawn from a seeded bit
stream; every quotient it yields is shared by all reals in the interval,
so the quotients are exact for a uniform x. Sample i of a run with seed s
uses the stream SeedSequence([s, i]), which makes every sample independent
of how samples are distributed over worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cf_core import QuotientSequence, Source, expand_dyadic_pairs
from .errors import PrecisionExhausted, PreconditionError

TARGET = 1.0 / (2.0 * math.log(2.0))
MAX_DOUBLINGS = 5


def gauss_kuzmin_mass(k: int) -> float:
    return math.log2(1.0 + 1.0 / (k * (k + 2)))


def _rng(seed, index):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def _bits(rng, count):
    raw = int.from_bytes(rng.bytes((count + 7) // 8), "little")
    return raw & ((1 << count) - 1)


def default_bits(n_terms: int) -> int:
    # typical log q_n ~ 1.19 n, so cylinders have width ~ e^{-2.37 n} ~ 2^{-3.42 n}
    return 4 * n_terms + 64


def random_point(seed: int, n_terms: int, precision_bits=None, *, index: int = 0) -> QuotientSequence:
    """The first n_terms quotients of a uniformly random x, exactly.

    When the interval is too wide to determine n_terms quotients, more bits
    are appended from the same stream (doubling the precision), at most five
    times.
    """
    if n_terms < 1:
        raise PreconditionError("n_terms must be at least 1")
    rng = _rng(seed, index)
    bits = precision_bits or default_bits(n_terms)
    u = _bits(rng, bits)
    for _ in range(MAX_DOUBLINGS + 1):
        lo = max(u, 1)
        hi = min(u + 1, (1 << bits) - 1)
        seq = expand_dyadic_pairs((lo, 1 << bits), (hi, 1 << bits), n_terms)
        if len(seq) >= n_terms:
            src = Source("real-interval", {**seq.source.params, "seed": int(seed), "index": int(index)})
            return QuotientSequence(seq.quotients[:n_terms], src)
        u = (u << bits) | _bits(rng, bits)
        bits *= 2
    raise PrecisionExhausted(f"{n_terms} quotients not determined after {MAX_DOUBLINGS} doublings")


def iid_gauss_kuzmin(seed: int, n_terms: int, *, index: int = 0) -> QuotientSequence:
    """Approximate sampler: independent quotients with the Gauss-Kuzmin law.

    Real quotients are not independent, so this is only for quick looks.
    """
    rng = _rng(seed, index)
    u = rng.random(n_terms)
    x = np.expm1(u * math.log(2.0))          # Gauss-measure distributed
    x = np.maximum(x, np.finfo(float).tiny)
    a = np.floor(1.0 / x)
    quotients = tuple(int(v) for v in a)
    return QuotientSequence(quotients, Source("generated", {"construction": "iid-gauss-kuzmin",
                                                            "seed": int(seed), "index": int(index)}))


def _sample(seed, index, n_terms, iid, precision_bits=None):
    if iid:
        return iid_gauss_kuzmin(seed, n_terms, index=index)
    return random_point(seed, n_terms, precision_bits, index=index)


# ---------------------------------------------------------------- per-sample statistics

def _sample_stats(args):
    """(S_n - L_n)/(n ln^2 n) and min over m in [n/10, n] of L_m ln ln m/(m ln m)."""
    seed, index, n, iid, precision_bits = args
    a = _sample(seed, index, n + 1, iid, precision_bits).quotients
    prods = [x * y for x, y in zip(a[:-1], a[1:])]
    sll = (sum(prods) - max(prods)) / (n * math.log(n) ** 2)
    return float(sll), float(np.min(_liminf_window(prods, n)))


def _liminf_window(prods, n):
    L = np.maximum.accumulate(np.array([float(p) for p in prods[:n]]))
    lo = max(3, n // 10)
    m = np.arange(lo, n + 1, dtype=float)
    return L[lo - 1:n] * np.log(np.log(m)) / (m * np.log(m))


# both trends read the same per-sample pass; keep its results for the session
_STATS = {}


def _per_sample(seed, samples, n, iid, workers, precision_bits):
    jobs = [(int(seed), i, int(n), bool(iid), precision_bits) for i in range(samples)]
    todo = [j for j in jobs if j not in _STATS]
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sample_stats, todo))
    else:
        results = [_sample_stats(j) for j in todo]
    _STATS.update(zip(todo, results))
    return [_STATS[j] for j in jobs]


@dataclass(frozen=True)
class TrendSummary:
    statistic: str
    samples: int
    n: int
    median: float
    iqr: float
    q25: float
    q75: float
    target: float
    distance: float
    values: tuple

    def to_dict(self, include_values=False):
        d = {k: v for k, v in self.__dict__.items() if k != "values"}
        if include_values:
            d["values"] = list(self.values)
        return d


def _summary(name, values, n):
    v = np.asarray(values, dtype=float)
    q25, med, q75 = (float(x) for x in np.percentile(v, [25, 50, 75]))
    return TrendSummary(name, len(v), n, med, q75 - q25, q25, q75, TARGET, abs(med - TARGET),
                        tuple(float(x) for x in v))


def _check(samples, n):
    if samples < 1:
        raise PreconditionError("samples must be at least 1")
    if n < 10:
        raise PreconditionError("n must be at least 10")


def sll_trend(samples: int, n: int, seed: int, *, workers: int = 1, iid: bool = False,
              precision_bits=None) -> TrendSummary:
    """Median over samples of (S_n - L_n) / (n (ln n)^2); the a.e. limit is 1/(2 ln 2)."""
    _check(samples, n)
    rows = _per_sample(seed, samples, n, iid, workers, precision_bits)
    return _summary("sll", [r[0] for r in rows], n)


def liminf_L_trend(samples: int, n: int, seed: int, *, workers: int = 1, iid: bool = False,
                   precision_bits=None) -> TrendSummary:
    """Median over samples of min_{n/10 <= m <= n} L_m ln ln m / (m ln m)."""
    _check(samples, n)
    rows = _per_sample(seed, samples, n, iid, workers, precision_bits)
    return _summary("liminf-l", [r[1] for r in rows], n)


def running_min_trace(seed: int, index: int, n: int, iid: bool = False):
    """The per-sample running minimum over m in [n/10, n], for inspection."""
    a = _sample(seed, index, n + 1, iid).quotients
    prods = [x * y for x, y in zip(a[:-1], a[1:])]
    return np.minimum.accumulate(_liminf_window(prods, n))


# ---------------------------------------------------------------- digit frequencies

@dataclass(frozen=True)
class DigitFrequency:
    k: int
    count: int
    total: int
    frequency: float
    mass: float
    sigma: float
    within_3sigma: bool


def _digit_job(args):
    seed, index, n_terms, iid = args
    a = _sample(seed, index, n_terms, iid).quotients
    return [sum(1 for x in a if x == k) for k in (1, 2, 3)]


def digit_freq(samples: int, n_terms: int, seed: int, *, workers: int = 1,
               iid: bool = False, ks=(1, 2, 3)) -> list:
    """Empirical frequency of a_i = k against log2(1 + 1/(k(k+2)))."""
    if samples < 1 or n_terms < 1:
        raise PreconditionError("samples and n_terms must be positive")
    if any(k not in (1, 2, 3) for k in ks):
        raise PreconditionError("digit_freq reports k in {1, 2, 3}")
    jobs = [(int(seed), i, int(n_terms), bool(iid)) for i in range(samples)]
    if workers > 1 and samples > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_digit_job, jobs))
    else:
        counts = [_digit_job(j) for j in jobs]
    total = samples * n_terms
    out = []
    for k in ks:
        c = sum(row[k - 1] for row in counts)
        p = gauss_kuzmin_mass(k)
        sigma = math.sqrt(p * (1 - p) / total)
        f = c / total
        out.append(DigitFrequency(k, c, total, f, p, sigma, abs(f - p) <= 3 * sigma))
    return out
