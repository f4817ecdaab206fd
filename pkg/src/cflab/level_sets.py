"""Representative points of the Cantor-type constructions, as quotient sequences.

Each generator returns the canonical point of its construction: the lowest
admissible quotient at every constrained position and 1 elsewhere. Integer
parts of huge real quantities are taken with mpmath at a working precision
sized to the value, so they are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .cf_core import DIGIT_CAP, QuotientSequence, Source
from .errors import ConstructionError, DomainError, PreconditionError
from .growth_fn import as_growth_fn, estimate_rho

KINDS = ("e-sparse", "b-full", "upsilon", "d-rec", "psi-sqrt")

_LN10 = math.log(10.0)
_GUARD_DIGITS = 30


def _dps_for(log_value):
    """Decimal digits needed to hold exp(log_value) exactly past the point."""
    return max(50, int(max(log_value, 0.0) / _LN10) + _GUARD_DIGITS)


def _source(kind, **params):
    return Source("generated", {"construction": kind, **params})


# ---------------------------------------------------------------- E sparse

def gen_E_sparse(phi, K: int, bindings=None) -> QuotientSequence:
    """a_{k^2} = ceil(phi(k^2)) kept in [s_k, s_k + t_k], other quotients 1.

    s_k = floor(phi(k^2)) and t_k = s_k / k. The window is closed on the left
    so that integer-valued phi (where ceil = floor) stays admissible.
    Positions 1 .. (K+1)^2 - 1 are emitted, i.e. K full blocks. Blocks
    with k^2 below phi's domain are left at 1.
    """
    phi = as_growth_fn(phi, bindings)
    if K < 1:
        raise PreconditionError("K must be at least 1")
    length = (K + 1) ** 2 - 1
    out = [1] * length
    for k in range(1, K + 1):
        n = k * k
        if n < phi.n_min:
            continue      # phi undefined here; the block stays all ones
        with mpmath.workdps(_dps_for(phi.log_eval(n))):
            v = phi.eval_mp(n)
            s = int(mpmath.floor(v))
            a = int(mpmath.ceil(v))
        if s < 1:
            raise DomainError(f"floor(phi({n})) = {s} < 1")
        # a <= s + s/k  <=>  k a <= k s + s
        if k * a > k * s + s:
            a = s
        out[n - 1] = a
    return QuotientSequence(tuple(out), _source("e-sparse", phi=phi.source_text, K=K))


def gen_psi_sqrt(c: float, K: int) -> QuotientSequence:
    """gen_E_sparse for log psi(n) = c floor(sqrt(n))."""
    return gen_E_sparse("exp(c*floor(sqrt(n)))", K, {"c": c})


# ---------------------------------------------------------------- B full

def _check_phi_over_n_increasing(phi):
    pts = np.unique(np.concatenate([np.arange(max(phi.n_min, 1), 65),
                                    np.geomspace(64, 10**6, 60).round()]))
    vals = np.asarray(phi.log_eval(pts)) - np.log(pts)
    steps = np.diff(vals)
    if np.any(steps <= 0):
        n = int(pts[int(np.argmax(steps <= 0)) + 1])
        raise ConstructionError(f"phi(n)/n is not increasing at n={n}; the window "
                                "(sqrt(phi) - sqrt(phi/n), sqrt(phi) + sqrt(phi/n)] has width "
                                "2 sqrt(phi(n)/n) that does not grow", n)


B_RULES = ("lowest", "nearest")


def gen_B_full(phi, N: int, bindings=None, digit_cap: int = DIGIT_CAP,
               rule: str = "lowest") -> QuotientSequence:
    """One point of B: a_n in (s_n - t_n, s_n + t_n] for n = 1..N+1.

    s_n = sqrt(phi(n)), t_n = sqrt(phi(n)/n). ``rule="lowest"`` takes the
    smallest admissible integer, ``"nearest"`` the one closest to s_n. The
    lowest point keeps a_n a_{n+1} close to phi(n) at moderate n, where
    phi(n+1)/phi(n) is still well above 1. Terms whose size would exceed
    ``digit_cap`` decimal digits are not materialized.
    """
    if rule not in B_RULES:
        raise PreconditionError(f"rule must be one of {B_RULES}")
    phi = as_growth_fn(phi, bindings)
    if N < 1:
        raise PreconditionError("N must be at least 1")
    _check_phi_over_n_increasing(phi)
    out = []
    exhausted = None
    for n in range(max(1, phi.n_min), N + 2):
        lphi = phi.log_eval(n)
        if lphi / 2 / _LN10 > digit_cap:
            exhausted = len(out) + 1
            break
        with mpmath.workdps(_dps_for(lphi / 2)):
            v = phi.eval_mp(n)
            s = mpmath.sqrt(v)
            t = mpmath.sqrt(v / n)
            lo, hi = s - t, s + t
            a = int(mpmath.nint(s)) if rule == "nearest" else int(mpmath.floor(lo)) + 1
            if a <= lo:
                a = int(mpmath.floor(lo)) + 1
            if a > hi:
                a = int(mpmath.floor(hi))
            if not (lo < a <= hi) or a < 1:
                raise ConstructionError(f"no admissible integer in (s-t, s+t] at n={n}", n)
        out.append(a)
    if phi.n_min > 1:
        out = [1] * (phi.n_min - 1) + out
    return QuotientSequence(tuple(out), _source("b-full", phi=phi.source_text, N=N, rule=rule),
                            exhausted)


# ---------------------------------------------------------------- Upsilon

def upsilon_start(alpha: float) -> int:
    """Smallest n with e^{alpha n / 2} / n >= 2."""
    if not alpha > 0:
        raise PreconditionError("alpha must be positive")
    n = 1
    while alpha * n / 2 - math.log(n) < math.log(2):
        n += 1
    return n


def gen_upsilon(alpha: float, K: int, digit_cap: int = DIGIT_CAP) -> QuotientSequence:
    """a_n = ceil(e^{alpha n/2 - alpha/4}) from N_2 on, checked against the open
    window (e^{-alpha/4}, e^{-alpha/4} + 1/n) e^{alpha n/2}; n = 1..K+1."""
    N2 = upsilon_start(alpha)
    out = [1] * min(N2 - 1, K + 1)
    exhausted = None
    a_alpha = mpmath.mpf(alpha)
    for n in range(N2, K + 2):
        log_top = alpha * n / 2
        if log_top / _LN10 > digit_cap:
            exhausted = len(out) + 1
            break
        with mpmath.workdps(_dps_for(log_top)):
            scale = mpmath.exp(a_alpha * n / 2)
            lo = mpmath.exp(-a_alpha / 4) * scale
            hi = lo + scale / n
            a = int(mpmath.ceil(lo))
            if a == lo:
                a += 1
            if not (lo < a < hi):
                raise ConstructionError(f"open window has no integer at n={n}", n)
        out.append(a)
    return QuotientSequence(tuple(out), _source("upsilon", alpha=alpha, K=K), exhausted)


# ---------------------------------------------------------------- d recursion

@dataclass(frozen=True)
class DRecursion:
    sequence: QuotientSequence
    d_trace: tuple           # log d_n for n = 1..K+1
    start_index: int         # N_1
    extras: dict = field(default_factory=dict)


def _log_increments(lphi):
    """log(phi(n) - phi(n-1)) for n >= 2 from log phi values."""
    return lphi[1:] + np.log(-np.expm1(lphi[:-1] - lphi[1:]))


def _d_logs_float(lphi):
    count = len(lphi)
    ld = np.empty(count)
    ld[0] = 0.0
    ld[1] = lphi[0]
    inc = _log_increments(lphi)          # inc[i] = log(phi(i+2) - phi(i+1))
    for n in range(2, count):
        ld[n] = inc[n - 2] - ld[n - 1]
    return ld


def _start_index(ld, ltil):
    """First even n with d_m >= 2 and d_m / log phi(m-1) >= 3 for every m >= n."""
    ok = (ld >= math.log(2)) & np.concatenate(([False], ld[1:] - np.log(ltil[:-1]) >= math.log(3)))
    # ok[i] refers to n = i + 1; find the last failure
    bad = np.nonzero(~ok)[0]
    start = 1 if len(bad) == 0 else int(bad[-1]) + 2
    if start % 2:
        start += 1
    return start


def gen_d_recursion(phi, K: int, bindings=None, digit_cap: int = DIGIT_CAP) -> DRecursion:
    """Quotients a_n = ceil(d_n) past N_1 where d_n d_{n+1} = phi(n) - phi(n-1).

    d_1 = 1 and d_2 = phi(1). Exact quotients are produced while d_n has at
    most ``digit_cap`` digits; the trace of log d_n covers n = 1..K+1.
    """
    phi = as_growth_fn(phi, bindings)
    if K < 3:
        raise PreconditionError("K must be at least 3")
    rho = estimate_rho(phi, of_log=True).rho
    if not rho > 1:
        raise DomainError(f"index of log phi is {rho:.4g}; the recursion needs it above 1")
    ns = np.arange(1, K + 2, dtype=float)
    lphi = np.asarray(phi.log_eval(ns), dtype=float)
    if np.any(np.diff(lphi) <= 0):
        raise DomainError("phi must be strictly increasing")
    ld = _d_logs_float(lphi)
    ltil = lphi                       # log phi, the recursion's tilde-phi
    if np.any(ltil <= 0):
        raise DomainError("log phi must be positive")
    N1 = _start_index(ld, ltil)
    if N1 > K:
        raise ConstructionError(f"start conditions not met by n={K + 1}", K + 1)
    exact_last = int(np.max(np.nonzero(ld / _LN10 <= digit_cap)[0])) + 1
    exact_last = min(exact_last, K + 1)
    quotients = [1] * min(N1, exact_last)
    if exact_last > N1:
        with mpmath.workdps(_dps_for(float(np.max(ld[:exact_last])))):
            lp = [phi.log_eval_mp(n) for n in range(1, exact_last + 1)]
            L = [mpmath.mpf(0), lp[0]]
            # L[n] = log d_{n+1} = log(phi(n) - phi(n-1)) - log d_n
            for n in range(2, exact_last):
                inc = lp[n - 1] + mpmath.log(-mpmath.expm1(lp[n - 2] - lp[n - 1]))
                L.append(inc - L[n - 1])
            for n in range(N1 + 1, exact_last + 1):
                with mpmath.workdps(_dps_for(float(ld[n - 1]))):
                    quotients.append(int(mpmath.ceil(mpmath.exp(L[n - 1]))))
    exhausted = exact_last + 1 if exact_last < K + 1 else None
    seq = QuotientSequence(tuple(quotients), _source("d-rec", phi=phi.source_text, K=K), exhausted)
    return DRecursion(seq, tuple(float(v) for v in ld), N1, {"rho": rho})


def generate(kind: str, K: int, phi=None, *, alpha: float = 1.0, c: float = 1.0,
             bindings=None, digit_cap: int = DIGIT_CAP):
    """Dispatch by construction name; returns a QuotientSequence."""
    if kind == "e-sparse":
        return gen_E_sparse(phi, K, bindings)
    if kind == "b-full":
        return gen_B_full(phi, K, bindings, digit_cap)
    if kind == "upsilon":
        return gen_upsilon(alpha, K, digit_cap)
    if kind == "d-rec":
        return gen_d_recursion(phi, K, bindings, digit_cap).sequence
    if kind == "psi-sqrt":
        return gen_psi_sqrt(c, K)
    raise PreconditionError(f"unknown construction {kind!r}; expected one of {KINDS}")
