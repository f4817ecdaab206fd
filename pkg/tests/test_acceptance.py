"""Acceptance criteria 1-13; each test prints one PASS/FAIL line with its runtime."""

import itertools
import json
import math
import random
import subprocess
import sys
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from scipy.special import zeta

from cflab import montecarlo
from cflab.cf_core import cylinder, distortion_ratio
from cflab.dim_formulas import LogSequence, dispatch, liao_rams
from cflab.growth_fn import beta, beta_simplified, parse
from cflab.level_sets import gen_B_full, gen_d_recursion, gen_E_sparse, gen_upsilon
from cflab.pressure import pressure_cylinder, pressure_operator, solve_theta
from cflab.quotient_stats import (composition_bound, composition_sum, divisor_count,
                                  ratio_track, stirling_log_bounds)

OSC = "exp(n^a * (log(2) + (log(3) - log(2)) * (1 + cos(pi * n)) / 2))"
TARGET = 1 / (2 * math.log(2))


@pytest.fixture
def criterion(capsys):
    """Run a check, print its PASS/FAIL line, then assert on it."""
    def run(number, title, limit_s, check):
        start = time.perf_counter()
        failures = []
        try:
            failures = list(check())
        except Exception as exc:          # a crash is a failure of the criterion
            failures = [f"{type(exc).__name__}: {exc}"]
        elapsed = time.perf_counter() - start
        if elapsed > limit_s:
            failures.append(f"took {elapsed:.1f}s, limit {limit_s}s")
        status = "FAIL" if failures else "PASS"
        with capsys.disabled():
            print(f"\n{status} criterion {number:2d}: {title} ({elapsed:.2f}s)")
            for msg in failures:
                print(f"     - {msg}")
        assert not failures, "; ".join(failures)
    return run


# ---------------------------------------------------------------- checks

def check_conservation():
    total = sum((cylinder([a]).length for a in range(1, 10**4 + 1)), Fraction(0))
    if total != 1 - Fraction(1, 10001):
        yield f"sum is {total}"


def check_length_sandwich():
    rng = random.Random(20240601)
    for _ in range(10**4):
        qs = [rng.randint(1, 9) for _ in range(rng.randint(1, 12))]
        c = cylinder(qs)
        lo, hi = c.length_bounds()
        if not lo <= c.length <= hi:
            yield f"sandwich fails for {qs}"
            return


def check_distortion():
    rng = random.Random(7)
    for _ in range(10**3):
        total = rng.randint(2, 10)
        k = rng.randint(1, total - 1)
        qs = [rng.randint(1, 20) for _ in range(total)]
        r = distortion_ratio(qs[:k], qs[k:])
        if not 0.5 <= r <= 2:
            yield f"ratio {r} for {qs[:k]} | {qs[k:]}"
            return


def check_anchor():
    est = pressure_cylinder(1.0, 8, 100)
    if not est.lo <= 0 <= est.hi:
        yield f"bracket [{est.lo:.4f}, {est.hi:.4f}] misses 0"
    if est.hi - est.lo > 0.15:
        yield f"width {est.hi - est.lo:.4f} > 0.15"


def check_shape():
    thetas = np.round(np.arange(0.55, 1.2001, 0.05), 2)
    vals = np.array([pressure_cylinder(t, 6, 200).value for t in thetas])
    if not np.all(np.diff(vals) < 0):
        yield "not strictly decreasing"
    second = vals[2:] - 2 * vals[1:-1] + vals[:-2]
    if np.min(second) < -1e-9:
        yield f"second difference {np.min(second):.3g} < -1e-9"


def check_cross_validation():
    for t in (0.6, 0.75, 0.9, 1.0):
        cyl = pressure_cylinder(t, 10, 200, q_cut=2000).value
        op = pressure_operator(t, 10**4, 512).value
        if abs(cyl - op) >= 0.05:
            yield f"theta={t}: cylinder {cyl:.4f} vs operator {op:.4f}"


def check_theta_curve():
    tol = 5e-3
    cs = (0.01, 0.1, 0.5, 1, 2, 5, 10, 100)
    sols = {c: solve_theta(c, tol) for c in cs}
    if sols[0.01].theta < 0.97:
        yield f"theta(0.01) = {sols[0.01].theta:.4f} < 0.97"
    if sols[100].theta > 0.53:
        yield f"theta(100) = {sols[100].theta:.4f} > 0.53"
    thetas = [sols[c].theta for c in cs[1:]]
    if any(b > a for a, b in zip(thetas, thetas[1:])):
        yield f"not non-increasing: {thetas}"
    for c, s in sols.items():
        if abs(s.theta_cylinder - s.theta_operator) > 2 * tol:
            yield f"c={c}: estimators differ by {abs(s.theta_cylinder - s.theta_operator):.4f}"


def check_dispatch_table():
    cases = [
        ("exp(n^2*log(n))", None, 0.5),
        ("exp(2^(n^0.5))", None, 0.5),
        ("exp(2^n)", None, 1 / 3),
        ("exp(2^(n^2))", None, 0.0),
        ("exp(sqrt(n)/log(n))", None, 1.0),
        ("exp(sqrt(n)*log(n))", None, 0.5),
    ]
    for phi, b, want in cases:
        got = dispatch(phi, b).value
        if not isinstance(got, float) or abs(got - want) > 1e-3:
            yield f"{phi}: {got} != {want}"
    osc = parse(OSC, {"a": 2})
    b, _ = beta(osc, 20000)
    if abs(b - math.log(3) / math.log(2)) > 1e-3:
        yield f"oscillating beta {b:.6f}"
    bs = beta_simplified(osc, 20000)
    if abs(bs - 1) > 1e-3:
        yield f"oscillating simplified beta {bs:.6f}"


def check_liao_rams():
    v = liao_rams("exp(2*n)", "exp(n)", 10**4).value
    if abs(v - 0.25) > 1e-3:
        yield f"closed form {v:.6f}"
    n = np.arange(1, 10**5 + 2, dtype=float)
    ls, lt = n ** 0.8 / 2, (n ** 0.8 - np.log(n)) / 2
    base = liao_rams(LogSequence(ls), LogSequence(lt), 10**5).value
    if abs(base - 0.5) > 5e-3:
        yield f"exp(n^0.8) case {base:.6f}"
    ls2, lt2 = ls.copy(), lt.copy()
    ls2[:10] += 2.5
    lt2[:10] += 0.5
    moved = liao_rams(LogSequence(ls2), LogSequence(lt2), 10**5).value
    if abs(moved - base) >= 1e-3:
        yield f"prefix change moved the estimate by {abs(moved - base):.2e}"


def _ratio(seq, phi, n):
    return ratio_track(seq, phi, n)[n - 1][1]


def check_generators():
    phi = parse("exp(sqrt(n)/log(n))")
    r = _ratio(gen_E_sparse(phi, 20), phi, 400)
    if abs(r - 1) > 0.1:
        yield f"E-sparse ratio {r:.4f} at 400"
    phi = parse("exp(n^0.8)")
    r = _ratio(gen_B_full(phi, 200), phi, 200)
    if abs(r - 1) > 0.1:
        yield f"B-full ratio {r:.4f} at 200"
    r = _ratio(gen_upsilon(1.0, 100), parse("exp(n)"), 100)
    if abs(r - 1) > 0.05:
        yield f"Upsilon ratio {r:.4f} at 100"
    phi = parse("exp(2^n)")
    seq = gen_d_recursion(phi, 40).sequence
    last = len(seq) - 1
    r = _ratio(seq, phi, last)
    if abs(r - 1) > 0.1:
        yield f"d-recursion ratio {r:.4f} at {last}"


def _composition_dp(m, n, s):
    # coefficient of x^m in (sum_i i^(-2s) x^i)^n, an independent oracle
    w = [0.0] + [i ** (-2.0 * s) for i in range(1, m + 1)]
    poly = [1.0] + [0.0] * m
    for _ in range(n):
        poly = [math.fsum(poly[j] * w[k - j] for j in range(k)) for k in range(m + 1)]
    return poly[m]


def check_combinatorics():
    for s in (0.6, 0.75, 0.9):
        for n in range(1, 6):
            for m in range(n, 31):
                brute = composition_sum(m, n, s)
                if not math.isclose(brute, _composition_dp(m, n, s), rel_tol=1e-12):
                    yield f"brute force mismatch at m={m}, n={n}, s={s}"
                bound = (4.5 * (2 + float(zeta(2 * s)))) ** n * m ** (-2 * s)
                if not brute <= bound or not math.isclose(bound, composition_bound(m, n, s)):
                    yield f"bound fails at m={m}, n={n}, s={s}"
    with mpmath.workdps(400):
        for n in range(1, 171):
            core = mpmath.mpf(n) ** (n + mpmath.mpf(1) / 2) * mpmath.exp(-n)
            f = mpmath.mpf(math.factorial(n))
            if not mpmath.sqrt(2 * mpmath.pi) * core <= f <= mpmath.e * core:
                yield f"Stirling sandwich fails at n={n}"
    ns = np.arange(1, 10**6 + 1, dtype=float)
    lo, hi = stirling_log_bounds(ns)
    from scipy.special import gammaln
    lf = gammaln(ns + 1)
    if not (np.all(lo <= lf + 1e-9 * lf) and np.all(lf <= hi + 1e-9 * lf)):
        yield "log-domain Stirling sandwich fails below 1e6"
    for n in range(1, 10**4 + 1):
        naive = sum(1 if d * d == n else 2 for d in range(1, math.isqrt(n) + 1) if n % d == 0)
        if divisor_count(n) != naive:
            yield f"divisor_count({n})"
            return


def check_monte_carlo():
    rows = montecarlo.digit_freq(100, 1000, 0)
    for r in rows:
        if not r.within_3sigma:
            yield f"digit {r.k}: frequency {r.frequency:.5f} vs mass {r.mass:.5f}"
    if rows != montecarlo.digit_freq(100, 1000, 0):
        yield "digit frequencies not deterministic"
    sll = montecarlo.sll_trend(100, 10**5, 0)
    if not TARGET / 2 <= sll.median <= 2 * TARGET:
        yield f"sll median {sll.median:.4f} outside factor 2"
    lim = montecarlo.liminf_L_trend(100, 10**5, 0)
    if not TARGET / 3 <= lim.median <= 3 * TARGET:
        yield f"liminf median {lim.median:.4f} outside factor 3"
    # recompute a few samples from scratch
    fresh = [montecarlo._sample_stats((0, i, 10**5, False, None)) for i in range(3)]
    if fresh != [(sll.values[i], lim.values[i]) for i in range(3)]:
        yield "samples differ on recomputation"


# one representative command per criterion family that takes --workers
WORKER_RUNS = [
    ["expand", "--terms", "500", "--seed", "1"],
    ["stats", "--terms", "300", "--N", "200", "--seed", "2", "--out", "csv"],
    ["pressure", "--theta", "1", "--depth", "8", "--alphabet", "100"],
    ["pressure", "--theta", "0.6", "--depth", "6", "--alphabet", "200"],
    ["pressure", "--theta", "0.75", "--method", "op", "--alphabet", "10000", "--grid", "512"],
    ["theta", "--c", "1"],
    ["dim", "--phi", "exp(2^n)"],
    ["formula", "liao-rams", "--s", "exp(2*n)", "--t", "exp(n)", "--N", "10000"],
    ["generate", "--kind", "e-sparse", "--phi", "exp(sqrt(n)/log(n))", "--terms", "20"],
    ["generate", "--kind", "b-full", "--phi", "exp(n^0.8)", "--terms", "200"],
    ["generate", "--kind", "upsilon", "--terms", "100"],
    ["generate", "--kind", "d-rec", "--phi", "exp(2^n)", "--terms", "30"],
    ["montecarlo", "digit-freq", "--samples", "100", "--terms", "1000", "--seed", "0", "--out", "csv"],
    ["montecarlo", "sll", "--samples", "30", "--n", "10000", "--seed", "0", "--values"],
    ["montecarlo", "liminf-l", "--samples", "30", "--n", "10000", "--seed", "0", "--values"],
]


def check_worker_determinism():
    for argv in WORKER_RUNS:
        outs = []
        for w in ("1", "8"):
            proc = subprocess.run([sys.executable, "-m", "cflab", *argv, "--workers", w],
                                  capture_output=True)
            if proc.returncode != 0:
                yield f"{' '.join(argv)} exited {proc.returncode}: {proc.stderr.decode()[-200:]}"
                break
            outs.append(proc.stdout)
        if len(outs) == 2 and outs[0] != outs[1]:
            yield f"{' '.join(argv)}: outputs differ between 1 and 8 workers"


# ---------------------------------------------------------------- tests

def test_c01_cylinder_conservation(criterion):
    criterion(1, "order-1 cylinder lengths sum to 1 - 1/10001", 1, check_conservation)


def test_c02_length_sandwich(criterion):
    criterion(2, "exact length sandwich on 10^4 random cylinders", 10, check_length_sandwich)


def test_c03_bounded_distortion(criterion):
    criterion(3, "distortion ratio in [1/2, 2] on 10^3 pairs", 10, check_distortion)


def test_c04_pressure_anchor(criterion):
    criterion(4, "P(1) bracket at n=8, M=100 contains 0, width <= 0.15", 60, check_anchor)


def test_c05_pressure_shape(criterion):
    criterion(5, "pressure strictly decreasing and convex on 0.55..1.2", 60, check_shape)


def test_c06_estimator_cross_validation(criterion):
    criterion(6, "cylinder vs operator pressure within 0.05", 120, check_cross_validation)


def test_c07_theta_curve(criterion):
    criterion(7, "theta(c) endpoints, monotonicity, estimator agreement", 600, check_theta_curve)


def test_c08_dispatch_table(criterion):
    criterion(8, "dispatch table and beta exponents", 60, check_dispatch_table)


def test_c09_liao_rams(criterion):
    criterion(9, "Liao-Rams evaluator: closed form, B-full case, prefix invariance", 30,
              check_liao_rams)


def test_c10_generator_envelopes(criterion):
    criterion(10, "generator envelopes at their checkpoints", 60, check_generators)


def test_c11_combinatorial_oracles(criterion):
    criterion(11, "composition bound, Stirling sandwich, divisor counts", 30, check_combinatorics)


def test_c12_monte_carlo_trends(criterion):
    criterion(12, "digit frequencies, sll and liminf trends at n=10^5", 600, check_monte_carlo)


def test_c13_worker_determinism(criterion):
    criterion(13, "CLI outputs identical with 1 and 8 workers", 600, check_worker_determinism)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
