"""Exact continued-fraction expansion, convergents and cylinder geometry."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import DigitCapOverflow, DomainError, PreconditionError

# Exact integers are kept while q_n has at most this many decimal digits.
DIGIT_CAP = 10**5

_LOG10_2 = math.log10(2.0)

SOURCE_KINDS = ("rational", "real-interval", "generated")


def decimal_digits_upper(x: int) -> int:
    """Cheap upper bound on the number of decimal digits of |x|."""
    return int(abs(x).bit_length() * _LOG10_2) + 1


def log_int(x: int) -> float:
    """Natural log of a positive integer of any size."""
    if x <= 0:
        raise DomainError(f"log of non-positive integer {x}")
    return math.log(x)


def log_add(la: float, lb: float) -> float:
    """log(e^la + e^lb) without overflow."""
    if la < lb:
        la, lb = lb, la
    if lb == -math.inf:
        return la
    return la + math.log1p(math.exp(lb - la))


@dataclass(frozen=True)
class Source:
    kind: str
    params: dict = field(default_factory=dict, compare=True, hash=False)

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise PreconditionError(f"unknown source kind {self.kind!r}")

    def to_dict(self):
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind")
        return cls(kind, d)


@dataclass(frozen=True)
class QuotientSequence:
    quotients: tuple
    source: Source
    exhausted_at: Optional[int] = None

    def __post_init__(self):
        qs = tuple(int(a) for a in self.quotients)
        object.__setattr__(self, "quotients", qs)
        for i, a in enumerate(qs, 1):
            if a < 1:
                raise DomainError(f"partial quotient a_{i} = {a} is not positive")
        if self.source.kind == "rational" and len(qs) > 1 and qs[-1] < 2:
            raise DomainError("rational expansion must end with a quotient >= 2")

    def __len__(self):
        return len(self.quotients)

    def __getitem__(self, i):
        return self.quotients[i]

    def __iter__(self):
        return iter(self.quotients)

    def to_dict(self):
        return {
            "quotients": list(self.quotients),
            "source": self.source.to_dict(),
            "exhausted_at": self.exhausted_at,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["quotients"]), Source.from_dict(d["source"]), d.get("exhausted_at"))

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Convergent:
    p: Optional[int]
    q: Optional[int]
    log_q: float
    index: int


@dataclass(frozen=True)
class Cylinder:
    quotients: tuple
    endpoint_a: Fraction  # p_n / q_n
    endpoint_b: Fraction  # (p_n + p_{n-1}) / (q_n + q_{n-1})
    left: Fraction
    right: Fraction
    left_closed: bool
    right_closed: bool
    length: Fraction
    log_length: float

    def length_bounds(self):
        """The product sandwich 2^-(2n+1) prod a^-2 <= |I_n| <= prod a^-2."""
        prod = 1
        for a in self.quotients:
            prod *= a * a
        n = len(self.quotients)
        return Fraction(1, prod * 2 ** (2 * n + 1)), Fraction(1, prod)

    def contains(self, x) -> bool:
        x = Fraction(x)
        above = x >= self.left if self.left_closed else x > self.left
        below = x <= self.right if self.right_closed else x < self.right
        return above and below


def _check_quotients(quotients):
    for i, a in enumerate(quotients, 1):
        if int(a) != a or a < 1:
            raise DomainError(f"partial quotient a_{i} = {a!r} is not a positive integer")


def continuants(quotients):
    """Return (p_n, q_n, p_{n-1}, q_{n-1}) for the given quotients."""
    p, q, pp, qp = 0, 1, 1, 0
    for a in quotients:
        p, pp = a * p + pp, p
        q, qp = a * q + qp, q
    return p, q, pp, qp


def reconstruct(quotients) -> Fraction:
    """The rational [0; a_1, ..., a_n]."""
    _check_quotients(quotients)
    p, q, _, _ = continuants(quotients)
    return Fraction(p, q)


def expand_rational(p: int, q: int) -> QuotientSequence:
    x = Fraction(p, q)
    if not 0 < x < 1:
        raise DomainError(f"{p}/{q} is not in (0, 1)")
    num, den = x.numerator, x.denominator
    out = []
    while num:
        a, r = divmod(den, num)
        out.append(a)
        den, num = num, r
    return QuotientSequence(tuple(out), Source("rational", {"p": x.numerator, "q": x.denominator}))


def _lockstep(lo, hi, limit):
    """Digits shared by every real in [lo, hi], both given as (num, den).

    Returns (digits, lo, hi, status) where status is "open" if the limit was
    reached or the endpoints are still positive and disagree ("split"), or
    "end" if the interval collapsed to a single terminating rational.
    """
    ln, ld = lo
    hn, hd = hi
    digits = []
    while len(digits) < limit:
        if ln == 0:
            return digits, (ln, ld), (hn, hd), "end" if hn == 0 else "split"
        a = ld // ln
        if hd // hn != a:
            return digits, (ln, ld), (hn, hd), "split"
        digits.append(a)
        # 1/x - a reverses the order of the endpoints
        ln, ld, hn, hd = hd - a * hn, hn, ld - a * ln, ln
    return digits, (ln, ld), (hn, hd), "open"


def _apply_digits(x, digits):
    """Gauss-map image T^j(x) for x = num/den whose expansion starts with digits."""
    num, den = x
    p, q, pp, qp = continuants(digits)
    tn = p * den - q * num
    td = qp * num - pp * den
    if td < 0:
        tn, td = -tn, -td
    return tn, td


def expand_real(lo, hi, max_terms: int, chunk_bits: int = 8192) -> QuotientSequence:
    """Quotients shared by every real in [lo, hi].

    Long intervals are processed in chunks: a slightly wider interval with
    short endpoints is expanded first, and the digits it yields are then
    applied to the exact endpoints in one matrix step.
    """
    lo, hi = Fraction(lo), Fraction(hi)
    if not (0 < lo <= hi < 1):
        raise DomainError("expand_real needs 0 < lo <= hi < 1")
    return expand_dyadic_pairs((lo.numerator, lo.denominator), (hi.numerator, hi.denominator),
                               max_terms, chunk_bits)


_BASE_CHUNK = 1024


def _ratio_float(num, den):
    shift = max(den.bit_length() - 64, 0)
    return (num >> shift) / (den >> shift)


def expand_dyadic_pairs(lo, hi, max_terms: int, chunk_bits: int = 8192) -> QuotientSequence:
    """expand_real on endpoints given as unreduced (num, den) pairs."""
    if not (0 < lo[0] < lo[1] and 0 < hi[0] < hi[1] and lo[0] * hi[1] <= hi[0] * lo[1]):
        raise DomainError("expand_real needs 0 < lo <= hi < 1")
    # endpoints are recorded as floats; the exact values can be huge
    src = Source("real-interval", {"lo": _ratio_float(*lo), "hi": _ratio_float(*hi),
                                   "bits": max(lo[1].bit_length(), hi[1].bit_length())})
    digits, exhausted = _expand_pairs(lo, hi, max_terms, chunk_bits)
    return QuotientSequence(tuple(digits), src, exhausted)


def _expand_pairs(u, v, max_terms, chunk_bits):
    out = []
    exhausted = None
    scale = 1 << chunk_bits
    while len(out) < max_terms:
        if u[0] == 0:
            if v[0] != 0:
                exhausted = len(out) + 1
            break
        remaining = max_terms - len(out)
        digits = []
        shift = min(u[1].bit_length(), v[1].bit_length()) - 2 * chunk_bits
        if shift > 0:
            # outward-rounded short endpoints: a superset of [u, v]
            ua = ((u[0] >> shift) << chunk_bits) // ((u[1] >> shift) + 1)
            vn, vd = ((v[0] >> shift) + 1) << chunk_bits, v[1] >> shift
            va = -(-vn // vd)
            if ua > 0 and va < scale:
                if chunk_bits > 4 * _BASE_CHUNK:
                    # expand the short interval the same way, one level down
                    digits, _ = _expand_pairs((ua, scale), (va, scale), remaining, chunk_bits // 8)
                else:
                    digits, _, _, _ = _lockstep((ua, scale), (va, scale), remaining)
        if digits:
            nu, nv = _apply_digits(u, digits), _apply_digits(v, digits)
            u, v = (nu, nv) if len(digits) % 2 == 0 else (nv, nu)
            out.extend(digits)
            continue
        digits, u, v, status = _lockstep(u, v, min(remaining, 64))
        out.extend(digits)
        if status == "end":
            break
        if status == "split":
            exhausted = len(out) + 1
            break
    return out, exhausted


def convergents(qs, n: Optional[int] = None, digit_cap: int = DIGIT_CAP) -> list:
    """Convergents p_k/q_k for k = 1..n.

    Exact integers are dropped once q_k exceeds ``digit_cap`` decimal digits;
    from then on only log q_k is carried by the two-term log recursion.
    """
    quotients = qs.quotients if isinstance(qs, QuotientSequence) else tuple(qs)
    if n is None:
        n = len(quotients)
    if n > len(quotients):
        raise PreconditionError(f"asked for {n} convergents but only {len(quotients)} quotients")
    out = []
    p, q, pp, qp = 0, 1, 1, 0
    lq, lqp = 0.0, -math.inf
    exact = True
    for k in range(n):
        a = quotients[k]
        if exact:
            p, pp = a * p + pp, p
            q, qp = a * q + qp, q
            lqp, lq = lq, log_int(q)
            if decimal_digits_upper(q) > digit_cap:
                exact = False
                out.append(Convergent(None, None, lq, k + 1))
                continue
            out.append(Convergent(p, q, lq, k + 1))
        else:
            la = log_int(a)
            lqp, lq = lq, la + lq + math.log1p(math.exp(lqp - la - lq))
            out.append(Convergent(None, None, lq, k + 1))
    return out


def cylinder(quotients: Sequence[int]) -> Cylinder:
    quotients = tuple(quotients)
    _check_quotients(quotients)
    p, q, pp, qp = continuants(quotients)
    ea = Fraction(p, q)
    eb = Fraction(p + pp, q + qp)
    n = len(quotients)
    length = Fraction(1, q * (q + qp))
    if n % 2 == 0:
        left, right, lc, rc = ea, eb, True, False
    else:
        left, right, lc, rc = eb, ea, False, True
    log_length = -(log_int(q) + log_int(q + qp))
    return Cylinder(quotients, ea, eb, left, right, lc, rc, length, log_length)


def distortion_ratio(prefix, suffix, digit_cap: int = DIGIT_CAP) -> float:
    """|I_{n+k}(prefix, suffix)| / (|I_n(prefix)| |I_k(suffix)|)."""
    prefix, suffix = tuple(prefix), tuple(suffix)
    if not prefix or not suffix:
        raise PreconditionError("prefix and suffix must both be nonempty")
    _check_quotients(prefix + suffix)
    _, q, _, qp = continuants(prefix + suffix)
    if decimal_digits_upper(q) > digit_cap:
        raise DigitCapOverflow(f"q has more than {digit_cap} digits")
    joint = Fraction(1, q * (q + qp))
    return float(joint / (cylinder(prefix).length * cylinder(suffix).length))
