"""The Gauss-map pressure P(theta) and the root of P(theta) = c (theta - 1/2).

Two independent estimators:

* ``pressure_cylinder`` sums q_n^(-2 theta) over order-n cylinders. The
  cylinder tree is explored breadth first down to denominators ``q_cut``;
  every pruned subtree is replaced by Hurwitz-zeta bounds, so the sums are
  bracketed for the full alphabet (or the alphabet {1..M} when
  ``tail=False``).
* ``pressure_operator`` discretizes the transfer operator on a uniform grid
  and runs power iteration.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from collections import OrderedDict
from typing import Optional

import numpy as np
from scipy.special import zeta

from .errors import BudgetExceeded, NoSignChange, NonConvergence, PreconditionError

THETA_MIN = 0.5 + 1e-3
MAX_DEPTH = 12
DEFAULT_BUDGET = 10**8
DEFAULT_Q_CUT = 1000


@dataclass(frozen=True)
class PressureEstimate:
    theta: float
    lo: float
    hi: float
    value: float
    depth_n: Optional[int]
    alphabet_M: int
    method: str                  # "cylinder-sum" or "transfer-operator"
    bracket_width: float
    tail: bool = True
    grid: Optional[int] = None
    q_cut: Optional[int] = None
    nodes: Optional[int] = None

    def to_dict(self):
        return dict(self.__dict__)


def _tree_sum(x) -> float:
    """Sum with a fixed balanced reduction tree (independent of how x was built)."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return 0.0
    size = 1 << (x.size - 1).bit_length()
    buf = np.zeros(size)
    buf[: x.size] = x
    while size > 1:
        size //= 2
        buf = buf[:size] + buf[size:]
    return float(buf[0])


# ---------------------------------------------------------------- cylinder tree

def _grow(level, k, n, M, Q, budget):
    """Breadth-first expansion of live nodes at depth k; returns their levels."""
    q, qp, p, pp = level
    levels = []
    count = 0
    while True:
        if k == n - 1:
            amax = np.zeros_like(q)
        else:
            amax = np.maximum(np.minimum(M, (Q - qp) // q), 0)
        levels.append((q, qp, p, pp, amax))
        count += len(q)
        if count > budget:
            raise BudgetExceeded(f"cylinder tree exceeds {budget} nodes", count)
        total = int(amax.sum())
        if total == 0:
            return levels
        idx = np.repeat(np.arange(len(q)), amax)
        start = np.cumsum(amax) - amax
        a = np.arange(total, dtype=np.int64) - np.repeat(start, amax) + 1
        q, qp, p, pp = a * q[idx] + qp[idx], q[idx], a * p[idx] + pp[idx], p[idx]
        k += 1


def _grow_first_digits(args):
    a_lo, a_hi, n, M, Q, budget = args
    a = np.arange(a_lo, a_hi + 1, dtype=np.int64)
    ones = np.ones_like(a)
    # depth-1 nodes: q = a, q_prev = 1, p = 1, p_prev = 0
    return _grow((a, ones, ones, np.zeros_like(a)), 1, n, M, Q, budget)


def _pad(levels, count):
    empty = np.zeros(0, np.int64)
    return list(levels) + [(empty,) * 5] * (count - len(levels))


def _build_tree(n, M, Q, budget, workers):
    one, zero = np.ones(1, np.int64), np.zeros(1, np.int64)
    root = (one, zero, zero, one)
    if n == 1:
        return tuple(_grow(root, 0, n, M, Q, budget))
    top = min(M, Q)
    # contiguous a_1 blocks; concatenating them in block order reproduces the
    # serial breadth-first order, so the arrays do not depend on the split
    blocks = min(max(1, workers) * 4, top)
    edges = np.linspace(1, top + 1, blocks + 1).astype(int)
    jobs = [(int(edges[i]), int(edges[i + 1]) - 1, n, M, Q, budget)
            for i in range(blocks) if edges[i + 1] > edges[i]]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_grow_first_digits, jobs))
    else:
        parts = [_grow_first_digits(j) for j in jobs]
    parts = [_pad(pt, n - 1) for pt in parts]
    levels = [root + (np.array([top], np.int64),)]
    total = 1
    for depth in range(n - 1):
        cols = tuple(np.concatenate([pt[depth][c] for pt in parts]) for c in range(5))
        total += len(cols[0])
        levels.append(cols)
    if total > budget:
        raise BudgetExceeded(f"cylinder tree exceeds {budget} nodes", total)
    return tuple(levels)


_TREES = OrderedDict()
_TREE_CACHE_SIZE = 4


def _tree(n, M, Q, budget, workers):
    key = (n, M, Q, budget)
    if key in _TREES:
        _TREES.move_to_end(key)
        return _TREES[key]
    levels = _build_tree(n, M, Q, budget, workers)
    _TREES[key] = levels
    if len(_TREES) > _TREE_CACHE_SIZE:
        _TREES.popitem(last=False)
    return levels


def tree_size(n, M, Q=DEFAULT_Q_CUT, budget=DEFAULT_BUDGET, workers=1) -> int:
    return sum(len(lv[0]) for lv in _tree(n, M, Q, budget, workers))


# ---------------------------------------------------------------- cylinder evaluation

def _level_terms(level, s, M, tail):
    q, qp, p, pp, amax = level
    qf = q.astype(float)
    r = qp / qf
    a0 = amax + 1
    w = qf ** (-s)
    zf = zeta(s, 1 + r)
    z1 = zeta(s + 1, 1 + r)
    # nodes without explicit children prune from a = 1, where the sums coincide
    has = amax > 0
    z, zz = zf.copy(), z1.copy()
    z[has] = zeta(s, a0[has] + r[has])
    zz[has] = zeta(s + 1, a0[has] + r[has])
    if not tail:
        cut0, cut1 = zeta(s, M + 1 + r), zeta(s + 1, M + 1 + r)
        z, zz, zf, z1 = z - cut0, zz - cut1, zf - cut0, z1 - cut1
    sign = (pp * q - p * qp).astype(float)
    xl = p / qf
    xr = (a0 * p + pp) / (a0 * qf + qp)
    with np.errstate(invalid="ignore", divide="ignore"):
        ubar = np.where(z > 0, zz / np.where(z > 0, z, 1.0), 0.0)
    leaf0 = w * zf
    leaf1 = w * (xl * zf + sign * z1 / qf ** 2)
    return w * z, leaf0, leaf1, ubar, np.maximum(xl, xr), (xl + xr) / 2


def _evaluate(levels, n, theta, M, tail):
    """Brackets and a midpoint for G_m = sum over order-m cylinders, m = 1..n.

    Returns arrays (lo, hi, mid, rho_hi) indexed by m.
    """
    s = 2.0 * theta
    g_lo, g_hi, g_mid = [1.0] * (n + 1), [1.0] * (n + 1), [1.0] * (n + 1)
    rho_hi, rho_mid = [0.0] * (n + 1), [0.0] * (n + 1)
    terms = [_level_terms(lv, s, M, tail) if len(lv[0]) else None for lv in levels]
    for m in range(1, n + 1):
        lo_parts, hi_parts, mid_parts, g1h_parts, g1m_parts = [], [], [], [], []
        for k in range(m):
            t = terms[k]
            if t is None:
                continue
            bz, leaf0, leaf1, ubar, xmax, xmid = t
            j = m - k - 1
            if j == 0:
                val = _tree_sum(leaf0)
                one = _tree_sum(leaf1)
                lo_parts.append(val)
                hi_parts.append(val)
                mid_parts.append(val)
                g1h_parts.append(one)
                g1m_parts.append(one)
            else:
                low = bz * (1 + rho_hi[j] * ubar) ** (-s)
                mid = bz * (1 + rho_mid[j] * ubar) ** (-s)
                lo_parts.append(_tree_sum(low) * g_lo[j])
                hi_parts.append(_tree_sum(bz) * g_hi[j])
                mid_parts.append(_tree_sum(mid) * g_mid[j])
                g1h_parts.append(_tree_sum(bz * xmax) * g_hi[j])
                g1m_parts.append(_tree_sum(mid * xmid) * g_mid[j])
        g_lo[m], g_hi[m], g_mid[m] = _tree_sum(lo_parts), _tree_sum(hi_parts), _tree_sum(mid_parts)
        rho_hi[m] = min(1.0, _tree_sum(g1h_parts) / g_lo[m])
        rho_mid[m] = _tree_sum(g1m_parts) / g_mid[m]
    return g_lo, g_hi, g_mid, rho_hi


def _check_theta(theta):
    # the solver's left endpoint sits exactly on the standoff
    if not theta >= THETA_MIN:
        raise PreconditionError(f"theta must be at least {THETA_MIN}")


def pressure_cylinder(theta: float, n: int, M: int, *, q_cut: int = DEFAULT_Q_CUT,
                      tail: bool = True, budget: int = DEFAULT_BUDGET,
                      workers: int = 1) -> PressureEstimate:
    """Cylinder-sum estimate of P(theta) at depth n.

    ``lo``/``hi`` bracket the pressure: hi = (1/n) log G_n is an upper bound by
    sub-multiplicativity of the sums, and lo subtracts the worst-case
    concatenation distortion. ``value`` is log(G_n / G_{n-1}), which converges
    much faster than either bound.
    """
    _check_theta(theta)
    if not 1 <= n <= MAX_DEPTH:
        raise PreconditionError(f"depth must be in 1..{MAX_DEPTH}")
    if M < 1 or q_cut < 1:
        raise PreconditionError("alphabet and q_cut must be positive")
    levels = _tree(n, M, q_cut, budget, workers)
    nodes = sum(len(lv[0]) for lv in levels)
    g_lo, g_hi, g_mid, rho_hi = _evaluate(levels, n, theta, M, tail)
    s = 2.0 * theta
    hi = math.log(g_hi[n]) / n
    lo = (math.log(g_lo[n]) - s * math.log1p(rho_hi[n])) / n
    value = math.log(g_mid[n] / g_mid[n - 1])
    return PressureEstimate(theta, lo, hi, value, n, M, "cylinder-sum", hi - lo, tail,
                            None, q_cut, nodes)


# ---------------------------------------------------------------- transfer operator

_BLOCK = 2000


def _operator_matrix(s, M, N, tail):
    x = np.linspace(0.0, 1.0, N)
    h = 1.0 / (N - 1)
    # with the exact tail, branches a > N map into the first grid cell and are
    # folded in analytically; explicit branches only go up to max(M, N)
    top = max(M, N) if tail else M
    K = np.zeros(N * N)
    rows_all = np.arange(N)[:, None]
    for a_lo in range(1, top + 1, _BLOCK):
        a = np.arange(a_lo, min(top, a_lo + _BLOCK - 1) + 1, dtype=float)[None, :]
        u = a + x[:, None]
        w = u ** (-s)
        y = 1.0 / u
        j = np.minimum((y / h).astype(np.int64), N - 2)
        t = y / h - j
        rows = np.broadcast_to(rows_all, j.shape)
        K += np.bincount((rows * N + j).ravel(), (w * (1 - t)).ravel(), N * N)
        K += np.bincount((rows * N + j + 1).ravel(), (w * t).ravel(), N * N)
    K = K.reshape(N, N)
    if tail:
        z0 = zeta(s, top + 1 + x)
        z1 = zeta(s + 1, top + 1 + x)
        K[:, 0] += z0 - z1 / h
        K[:, 1] += z1 / h
    return K


def pressure_operator(theta: float, M: int, grid: int, iters: int = 500, *,
                      tail: bool = True) -> PressureEstimate:
    """Leading eigenvalue of the discretized transfer operator, as log lambda."""
    _check_theta(theta)
    if M < 1 or grid < 3:
        raise PreconditionError("need M >= 1 and grid >= 3")
    K = _operator_matrix(2.0 * theta, M, grid, tail)
    f = np.ones(grid)
    spread = math.inf
    for _ in range(iters):
        g = K @ f
        ratio = g / f
        spread = math.log(ratio.max()) - math.log(ratio.min())
        f = g / g.max()
        if spread <= 1e-12:
            break
    if spread > 1e-6:
        raise NonConvergence(f"power iteration spread {spread:.3g} after {iters} iterations")
    lam = math.log(ratio.max()) - spread / 2
    return PressureEstimate(theta, lam, lam, lam, None, M, "transfer-operator", spread, tail, grid)


# ---------------------------------------------------------------- theta(c)

CYLINDER_LADDER = ((6, 50, 300), (8, 100, 1000), (10, 200, 2000))
OPERATOR_LADDER = ((500, 128), (2000, 256), (10000, 512))


@dataclass(frozen=True)
class ThetaSolution:
    c: float
    theta: float
    residual: float
    bracket_width: float
    bracket: tuple
    theta_cylinder: float
    theta_operator: float
    levels: dict = field(default_factory=dict)
    warnings: tuple = ()

    def to_dict(self):
        d = dict(self.__dict__)
        d["bracket"] = list(self.bracket)
        return d


def _bisect(F, lo, hi, width):
    f_lo, f_hi = F(lo), F(hi)
    if not (f_lo > 0 > f_hi):
        return None
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if F(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _root(F, guess, tol):
    """Sign-change bracket of F on [THETA_MIN, 1] of width <= tol/4."""
    width = tol / 4
    if guess is not None:
        got = _bisect(F, max(THETA_MIN, guess - 4 * tol), min(1.0, guess + 4 * tol), width)
        if got is not None:
            return got
    if F(1.0) >= 0:
        raise NoSignChange("F(1) >= 0: estimator not decreasing at this resolution")
    if F(THETA_MIN) <= 0:
        return None
    return _bisect(F, THETA_MIN, 1.0, width)


def _solve_with(estimate, ladder, c, tol):
    prev = None
    history = []
    for params in ladder:
        def F(t, params=params):
            return estimate(t, params) - c * (t - 0.5)
        got = _root(F, prev, tol)
        if got is None:
            return None, history
        theta = 0.5 * (got[0] + got[1])
        history.append((params, theta, got))
        if prev is not None and abs(theta - prev) < tol:
            return got, history
        prev = theta
    raise NonConvergence(f"theta did not settle to {tol} along the refinement ladder")


def solve_theta(c: float, tol: float = 5e-3, *, workers: int = 1,
                cylinder_ladder=CYLINDER_LADDER, operator_ladder=OPERATOR_LADDER) -> ThetaSolution:
    """Root of P(theta) = c (theta - 1/2) in (1/2, 1), cross-checked by both estimators."""
    if not c > 0:
        raise PreconditionError("c must be positive")
    if tol < 1e-4:
        raise PreconditionError("tol must be at least 1e-4")

    def cyl(t, params):
        n, M, Q = params
        return pressure_cylinder(t, n, M, q_cut=Q, workers=workers).value

    def op(t, params):
        M, N = params
        return pressure_operator(t, M, N).value

    cyl_br, cyl_hist = _solve_with(cyl, cylinder_ladder, c, tol)
    op_br, op_hist = _solve_with(op, operator_ladder, c, tol)
    if cyl_br is None or op_br is None:
        msg = f"root lies below {THETA_MIN}; reporting the standoff point"
        warnings.warn(msg)
        return ThetaSolution(c, THETA_MIN, math.nan, 0.0, (THETA_MIN, THETA_MIN),
                             THETA_MIN, THETA_MIN, {}, ("near-singularity",))
    t_cyl = 0.5 * (cyl_br[0] + cyl_br[1])
    t_op = 0.5 * (op_br[0] + op_br[1])
    if abs(t_cyl - t_op) > 2 * tol:
        raise NonConvergence(f"estimators disagree: cylinder {t_cyl:.6f}, operator {t_op:.6f}")
    n, M, Q = cyl_hist[-1][0]
    residual = pressure_cylinder(t_cyl, n, M, q_cut=Q, workers=workers).value - c * (t_cyl - 0.5)
    levels = {
        "cylinder": [{"n": p[0], "M": p[1], "q_cut": p[2], "theta": t} for p, t, _ in cyl_hist],
        "operator": [{"M": p[0], "grid": p[1], "theta": t} for p, t, _ in op_hist],
    }
    return ThetaSolution(c, t_cyl, residual, cyl_br[1] - cyl_br[0], tuple(cyl_br), t_cyl, t_op, levels)
