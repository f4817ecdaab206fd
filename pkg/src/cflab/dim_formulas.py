"""Closed-form dimension evaluators and the growth-function dispatch table."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import DomainError, PreconditionError
from .growth_fn import (CRITICAL_BAND, Bin, Call, GrowthFn, Name, Num, Pow, Var,
                        _with_n_min, as_growth_fn, beta, estimate_rho, pretty)

# liminf (s_n - t_n)/s_n > 0 is checked as "stays above this on the window"
LR_GAP_MIN = 1e-3

BETA_START = 1250
BETA_CAP = 10**4
BETA_STABLE = 1e-4


@dataclass(frozen=True)
class LogSequence:
    """A sequence given by its natural logs: an array (index k-1) or a callable of k."""
    logs: Union[Callable, np.ndarray, list, tuple]

    def values(self, count):
        if callable(self.logs):
            ks = np.arange(1, count + 1, dtype=float)
            out = np.asarray(self.logs(ks), dtype=float)
            return np.broadcast_to(out, ks.shape).copy()
        arr = np.asarray(self.logs, dtype=float)
        if len(arr) < count:
            raise PreconditionError(f"sequence has {len(arr)} terms, need {count}")
        return arr[:count].copy()


def log_terms(spec, count, bindings=None) -> np.ndarray:
    """log x_k for k = 1..count from an expression, GrowthFn, LogSequence,
    callable of k or an array of positive values."""
    if isinstance(spec, LogSequence):
        return spec.values(count)
    if isinstance(spec, (GrowthFn, str)):
        f = as_growth_fn(spec, bindings)
        return np.asarray(f.log_eval(np.arange(1, count + 1, dtype=float)), dtype=float)
    if isinstance(spec, (int, float)):
        if spec <= 0:
            raise DomainError("sequence terms must be positive")
        return np.full(count, math.log(spec))
    if callable(spec):
        vals = np.array([spec(k) for k in range(1, count + 1)], dtype=float)
    else:
        vals = np.asarray(spec, dtype=float)[:count]
        if len(vals) < count:
            raise PreconditionError(f"sequence has {len(vals)} terms, need {count}")
    if np.any(vals <= 0):
        raise DomainError("sequence terms must be positive")
    return np.log(vals)


def _window(N):
    return max(1, (N + 1) // 2), N


@dataclass(frozen=True)
class Estimate:
    value: float
    window: tuple
    trace: np.ndarray = field(repr=False, compare=False)

    def __float__(self):
        return float(self.value)


def liao_rams(s, t, N: int, bindings=None) -> Estimate:
    """liminf of sum_{k<=n} log t_k / (2 sum_{k<=n+1} log s_k - log t_{n+1}),
    estimated by the minimum over n in [N/2, N]."""
    ls = log_terms(s, N + 1, bindings)
    lt = log_terms(t, N + 1, bindings)
    lo, hi = _window(N)
    # the formula ignores finite prefixes, so equality is tolerated before the window
    bad = (lt > ls) | ((lt >= ls) & (np.arange(1, N + 2) >= lo))
    if np.any(bad):
        k = int(np.argmax(bad)) + 1
        raise DomainError(f"need s_k > t_k; fails at k={k}")
    gap = -np.expm1(lt - ls)      # (s - t)/s
    if np.min(gap[lo - 1:hi]) < LR_GAP_MIN:
        k = lo + int(np.argmin(gap[lo - 1:hi]))
        raise DomainError(f"(s_k - t_k)/s_k = {gap[k - 1]:.3g} at k={k}; it must stay bounded away from 0")
    num = np.cumsum(lt)[:N]
    den = 2 * np.cumsum(ls)[1:N + 1] - lt[1:N + 1]
    trace = num / den
    return Estimate(float(np.min(trace[lo - 1:hi])), (lo, hi), trace)


def falconer_lower(m, theta, N: int, bindings=None) -> Estimate:
    """liminf of log(m_1...m_{n-1}) / -log(m_n theta_n) over n in [N/2, N]."""
    lm = log_terms(m, N, bindings)
    lth = log_terms(theta, N, bindings)
    if np.any(lm < math.log(2) - 1e-12):
        k = int(np.argmax(lm < math.log(2) - 1e-12)) + 1
        raise DomainError(f"need m_n >= 2; fails at n={k}")
    if np.any(np.diff(lth) >= 0):
        k = int(np.argmax(np.diff(lth) >= 0)) + 2
        raise DomainError(f"theta_n must be strictly decreasing; fails at n={k}")
    num = np.concatenate(([0.0], np.cumsum(lm)[:-1]))
    den = -(lm + lth)
    with np.errstate(divide="ignore", invalid="ignore"):
        trace = num / den
    lo, hi = _window(N)
    if np.any(den[lo - 1:hi] <= 0):
        raise DomainError("m_n theta_n must be below 1 on the window")
    return Estimate(float(np.min(trace[lo - 1:hi])), (lo, hi), trace)


def covering_upper(counts, diameters, K: int, bindings=None) -> Estimate:
    """liminf of log n_k / -log delta_k over k in [K/2, K]."""
    ln = log_terms(counts, K, bindings)
    ld = log_terms(diameters, K, bindings)
    if np.any(np.diff(ld) >= 0):
        k = int(np.argmax(np.diff(ld) >= 0)) + 2
        raise DomainError(f"diameters must be strictly decreasing; fails at k={k}")
    lo, hi = _window(K)
    if np.any(ld[lo - 1:hi] >= 0):
        raise DomainError("diameters must be below 1 on the window")
    trace = ln / -ld
    return Estimate(float(np.min(trace[lo - 1:hi])), (lo, hi), trace)


# ---------------------------------------------------------------- dispatch

THEOREMS = ("T1.2-case1", "T1.2-case2", "T1.2-case3", "T1.3", "T1.4", "critical-unresolved")


@dataclass(frozen=True)
class DimReport:
    value: object                 # float, or (lo, hi) when unresolved
    theorem: str
    inputs_digest: dict
    candidates: tuple = ()
    warnings: tuple = ()

    def to_dict(self):
        value = list(self.value) if isinstance(self.value, tuple) else self.value
        return {"value": value, "theorem": self.theorem, "inputs_digest": dict(self.inputs_digest),
                "candidates": list(self.candidates), "warnings": list(self.warnings)}


def _aitken(a, b, c):
    d1, d2 = b - a, c - b
    denom = d2 - d1
    if d1 == 0 or denom == 0 or d2 / d1 <= 0 or d2 / d1 >= 1:
        return c
    return c - d2 * d2 / denom


def adaptive_beta(phi, start: int = BETA_START, cap: int = BETA_CAP):
    """beta with N doubled until two successive estimates agree to 1e-4.

    Returns (beta, N, notes). When the cap is hit first the last three
    estimates are Aitken-extrapolated and a staleness note is attached.
    """
    N = start
    history = []
    while True:
        b, _ = beta(phi, N)
        history.append((N, b))
        if math.isinf(b):
            return b, N, ()
        if len(history) >= 2 and abs(history[-1][1] - history[-2][1]) <= BETA_STABLE:
            return b, N, ()
        if N * 2 > cap:
            break
        N *= 2
    note = f"beta not stable to {BETA_STABLE} by N={N}"
    warnings.warn(note)
    if len(history) >= 3:
        ext = _aitken(history[-3][1], history[-2][1], history[-1][1])
        return max(1.0, ext), N, (note, "extrapolated over N doublings")
    return b, N, (note,)


def _const_value(node) -> Optional[float]:
    if isinstance(node, (Num, Name)):
        return node.value
    return None


def _is_sqrt_n(node) -> bool:
    if isinstance(node, Call) and node.fn == "sqrt" and isinstance(node.arg, Var):
        return True
    return isinstance(node, Pow) and isinstance(node.base, Var) and _const_value(node.exp) == 0.5


def _floor_sqrt_coefficient(phi: GrowthFn) -> Optional[float]:
    """c when phi is exp(c * floor(sqrt(n))), else None."""
    root = phi.ast
    if not (isinstance(root, Call) and root.fn == "exp"):
        return None
    body = root.arg

    def is_floor_sqrt(nd):
        return isinstance(nd, Call) and nd.fn == "floor" and _is_sqrt_n(nd.arg)
    if is_floor_sqrt(body):
        return 1.0
    if isinstance(body, Bin) and body.op == "*":
        for a, b in ((body.left, body.right), (body.right, body.left)):
            c = _const_value(a)
            if c is not None and is_floor_sqrt(b):
                return c
    return None


def _slowly_varying(node, bindings) -> bool:
    """True when the subexpression is increasing with index ~0."""
    try:
        f = _with_n_min(GrowthFn(node, pretty(node), bindings))
        rep = estimate_rho(f)
    except (PreconditionError, OverflowError):
        return False
    return abs(rep.rho) <= CRITICAL_BAND


def _critical_structure(phi: GrowthFn) -> Optional[tuple]:
    """Match log phi = sqrt(n) * R(n) or sqrt(n) / R(n) with R slowly varying."""
    root = phi.ast
    if not (isinstance(root, Call) and root.fn == "exp"):
        return None
    body = root.arg
    if not isinstance(body, Bin) or body.op not in "*/":
        return None
    pairs = [(body.left, body.right)]
    if body.op == "*":
        pairs.append((body.right, body.left))
    for s, r in pairs:
        if _is_sqrt_n(s) and _slowly_varying(r, phi.bindings):
            return (1.0, "sqrt(n)/R") if body.op == "/" else (0.5, "sqrt(n)*R")
    return None


def dispatch(phi, bindings=None, *, theta_tol: float = 5e-3, workers: int = 1) -> DimReport:
    """Hausdorff dimension of the level set of phi according to the main theorems."""
    phi = as_growth_fn(phi, bindings)
    if phi.has_floor:
        c = _floor_sqrt_coefficient(phi)
        if c is None:
            raise PreconditionError("floor-bearing functions are only supported as exp(c*floor(sqrt(n)))")
        from .pressure import solve_theta
        sol = solve_theta(c, theta_tol, workers=workers)
        return DimReport(sol.theta, "T1.4", {"c": c, "theta": sol.theta,
                                             "theta_operator": sol.theta_operator},
                         (), sol.warnings)
    rep = estimate_rho(phi, of_log=True)
    rho = rep.rho
    digest = {"rho": rho}
    if abs(rho - 0.5) <= CRITICAL_BAND:
        match = _critical_structure(phi)
        if match is not None:
            value, form = match
            digest["form"] = form
            return DimReport(value, "T1.3", digest)
        return DimReport((0.5, 1.0), "critical-unresolved", digest, (1.0, 0.5))
    if rho < 0.5:
        return DimReport(1.0, "T1.2-case1", digest)
    # rho = 1 up to grid error stays in the half-open case (1/2, 1]
    if rho <= 1.0 + 1e-6:
        return DimReport(0.5, "T1.2-case2", digest)
    b, N, notes = adaptive_beta(phi)
    digest.update({"beta": b, "beta_N": N})
    value = 0.0 if math.isinf(b) else 1.0 / (1.0 + b)
    return DimReport(value, "T1.2-case3", digest, (), notes)
