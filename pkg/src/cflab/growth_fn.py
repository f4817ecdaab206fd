"""Growth-function expressions in one variable ``n``.

The grammar is the usual arithmetic one with ``^`` binding tighter than
unary minus::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | atom ('^' atom)?
    atom   := number | 'n' | name | fn '(' expr ')' | '(' expr ')'
    fn     := exp | log | sqrt | floor | cos

Names other than ``n`` are constants: ``pi``, ``e`` or anything supplied in
``bindings``. Evaluation keeps a float while it is in range and falls back
to a (sign, log|x|) pair otherwise, so ``exp(n^2)`` at ``n = 1e4`` has a
finite logarithm even though the value itself does not fit in a double.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

import mpmath
import numpy as np

from .errors import DomainError, ExprSyntaxError, NonMonotoneError, PreconditionError

FUNCTIONS = ("exp", "log", "sqrt", "floor", "cos")
BUILTIN_CONSTANTS = {"pi": math.pi, "e": math.e}

CRITICAL_BAND = 0.02
RHO_INFINITE_AT = 1e6


# ---------------------------------------------------------------- AST

@dataclass(frozen=True)
class Num:
    value: float
    text: str


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Name:
    name: str
    value: float


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exp: object


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object
    pos: int = field(default=0, compare=False)


def _walk(node):
    yield node
    for child in _children(node):
        yield from _walk(child)


def _children(node):
    if isinstance(node, Bin):
        return (node.left, node.right)
    if isinstance(node, Pow):
        return (node.base, node.exp)
    if isinstance(node, (Neg, Call)):
        return (node.arg,)
    return ()


# ---------------------------------------------------------------- parser

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))")


def _tokenize(text):
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, bindings):
        self.tokens = _tokenize(text)
        self.i = 0
        self.bindings = bindings

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.peek()
        if text != value or kind != "op":
            raise ExprSyntaxError(f"expected {value!r}", pos)
        self.take()

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.factor())
        return node

    def factor(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.factor())
        node = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            node = Pow(node, self.atom())
        return node

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text), text)
        if kind == "name":
            if text == "n":
                return Var()
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg, pos)
            if text in self.bindings:
                return Name(text, float(self.bindings[text]))
            if text in BUILTIN_CONSTANTS:
                return Name(text, BUILTIN_CONSTANTS[text])
            raise ExprSyntaxError(f"unbound name {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected {text!r}", pos)


def _check_floor_cos(root):
    """floor and cos may sit at the root or anywhere under an exp/pow root,
    but never inside one another."""
    def nested(node):
        for child in _children(node):
            for sub in _walk(child):
                if isinstance(sub, Call) and sub.fn in ("floor", "cos"):
                    raise ExprSyntaxError(f"{sub.fn} may not be nested inside {node.fn}", sub.pos)

    special = [nd for nd in _walk(root) if isinstance(nd, Call) and nd.fn in ("floor", "cos")]
    if not special:
        return
    for nd in special:
        nested(nd)
    root_ok = isinstance(root, Pow) or (isinstance(root, Call) and root.fn in ("exp", "floor", "cos"))
    if not root_ok:
        raise ExprSyntaxError(f"{special[0].fn} is only allowed under an exp or power root",
                              special[0].pos)


# ---------------------------------------------------------------- printer

def _prec(node):
    if isinstance(node, Bin):
        return 1 if node.op in "+-" else 2
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def pretty(node) -> str:
    if isinstance(node, Num):
        return node.text
    if isinstance(node, Var):
        return "n"
    if isinstance(node, Name):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({pretty(node.arg)})"
    if isinstance(node, Neg):
        inner = pretty(node.arg)
        return "-" + (inner if _prec(node.arg) >= 3 else f"({inner})")
    if isinstance(node, Pow):
        b, x = pretty(node.base), pretty(node.exp)
        if _prec(node.base) < 5:
            b = f"({b})"
        if _prec(node.exp) < 5:
            x = f"({x})"
        return f"{b}^{x}"
    p = _prec(node)
    left, right = pretty(node.left), pretty(node.right)
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


# ---------------------------------------------------------------- hybrid numbers

_BIG = 1e300
_TINY = 1e-300
_LOG_BIG = math.log(_BIG)
_LOG_TINY = math.log(_TINY)


class _H:
    """Elementwise number that is either a float (lin) or sign * exp(lg)."""

    __slots__ = ("val", "sgn", "lg", "lin", "bad")

    def __init__(self, val, sgn, lg, lin, bad):
        self.val, self.sgn, self.lg, self.lin, self.bad = val, sgn, lg, lin, bad

    @classmethod
    def from_float(cls, v, bad=None):
        v = np.asarray(v, dtype=float)
        a = np.abs(v)
        with np.errstate(all="ignore"):
            lg = np.log(a)
        lin = np.isfinite(v) & (a <= _BIG) & ((a == 0) | (a >= _TINY))
        nan = np.isnan(v)
        if bad is None:
            bad = nan
        else:
            bad = bad | nan
        return cls(v, np.sign(v), lg, lin, bad)

    @classmethod
    def from_log(cls, sgn, lg, bad):
        sgn = np.asarray(sgn, dtype=float)
        lg = np.asarray(lg, dtype=float)
        in_range = (lg <= _LOG_BIG) & (lg >= _LOG_TINY)
        with np.errstate(all="ignore"):
            val = np.where(in_range, sgn * np.exp(np.where(in_range, lg, 0.0)), np.nan)
        lin = in_range | (sgn == 0)
        val = np.where(sgn == 0, 0.0, val)
        lg = np.where(sgn == 0, -np.inf, lg)
        return cls(val, sgn, lg, lin, bad | np.isnan(lg))

    def merge(self, mask, other):
        """Take self where mask, other elsewhere."""
        return _H(np.where(mask, self.val, other.val), np.where(mask, self.sgn, other.sgn),
                  np.where(mask, self.lg, other.lg), np.where(mask, self.lin, other.lin),
                  np.where(mask, self.bad, other.bad))

    def real(self):
        """Float value; non-finite where the number is out of float range."""
        with np.errstate(all="ignore"):
            return np.where(self.lin, self.val, self.sgn * np.inf)


def _linear_or(op_lin, x, y, log_result):
    both = x.lin & y.lin
    with np.errstate(all="ignore"):
        r = op_lin(np.where(both, x.val, 1.0), np.where(both, y.val, 1.0))
    lin = _H.from_float(r, x.bad | y.bad)
    ok = both & lin.lin & ~np.isnan(r)
    if np.all(ok):
        return lin
    return lin.merge(ok, log_result())


def _add(x, y):
    def log_form():
        with np.errstate(all="ignore"):
            bx = x.lg >= y.lg
            big = np.where(bx, x.lg, y.lg)
            small = np.where(bx, y.lg, x.lg)
            sbig = np.where(bx, x.sgn, y.sgn)
            ssmall = np.where(bx, y.sgn, x.sgn)
            same = (sbig * ssmall) >= 0
            d = np.exp(small - big)
            lg = big + np.where(same, np.log1p(d), np.log1p(-d))
            sgn = np.where(np.isneginf(lg) | (sbig == 0), np.where(sbig == 0, ssmall, 0.0), sbig)
            lg = np.where(sbig == 0, small, lg)
        return _H.from_log(sgn, lg, x.bad | y.bad)
    return _linear_or(np.add, x, y, log_form)


def _neg(x):
    return _H(-x.val, -x.sgn, x.lg, x.lin, x.bad)


def _mul(x, y):
    def log_form():
        with np.errstate(all="ignore"):
            sgn = x.sgn * y.sgn
            lg = x.lg + y.lg
        return _H.from_log(sgn, lg, x.bad | y.bad)
    return _linear_or(np.multiply, x, y, log_form)


def _div(x, y):
    zero = y.sgn == 0

    def log_form():
        with np.errstate(all="ignore"):
            return _H.from_log(x.sgn * y.sgn, x.lg - y.lg, x.bad | y.bad | zero)
    out = _linear_or(np.divide, x, y, log_form)
    out.bad = out.bad | zero
    return out


def _exp(x):
    with np.errstate(all="ignore"):
        small = x.lin & (x.val <= _LOG_BIG) & (x.val >= _LOG_TINY)
        lin = _H.from_float(np.exp(np.where(small, x.val, 0.0)), x.bad)
        # out of range: exp(x) = e^x with log exactly x
        lg = np.where(x.lin, x.val, x.sgn * np.inf)
        logf = _H.from_log(np.ones_like(lg), lg, x.bad)
    return lin.merge(small, logf)


def _log(x):
    bad = x.bad | (x.sgn <= 0)
    with np.errstate(all="ignore"):
        return _H.from_float(np.where(x.sgn > 0, x.lg, np.nan), bad)


def _sqrt(x):
    bad = x.bad | (x.sgn < 0)
    with np.errstate(all="ignore"):
        lin = _H.from_float(np.sqrt(np.where(x.lin, x.val, 1.0)), bad)
        logf = _H.from_log(np.where(x.sgn > 0, 1.0, 0.0), x.lg / 2, bad)
    return lin.merge(x.lin, logf)


def _floor(x):
    with np.errstate(all="ignore"):
        lin = _H.from_float(np.floor(np.where(x.lin, x.val, 0.0)), x.bad)
    # beyond 1e300 floor does not change the float
    return lin.merge(x.lin, x)


def _cos(x):
    with np.errstate(all="ignore"):
        return _H.from_float(np.cos(np.where(x.lin, x.val, np.nan)), x.bad | ~x.lin)


def _pow(b, e):
    # exponent must be an ordinary float
    bad = b.bad | e.bad | ~e.lin
    ev = np.where(e.lin, e.val, 0.0)
    integral = ev == np.floor(ev)
    neg_base = b.sgn < 0
    bad = bad | (neg_base & ~integral)

    def log_form():
        with np.errstate(all="ignore"):
            odd = integral & (np.abs(np.fmod(ev, 2.0)) == 1.0)
            sgn = np.where(b.sgn > 0, 1.0, np.where(b.sgn == 0, 0.0, np.where(odd, -1.0, 1.0)))
            lg = np.where(b.sgn == 0, np.where(ev > 0, -np.inf, np.inf), ev * b.lg)
            return _H.from_log(sgn, lg, bad)
    out = _linear_or(np.power, b, _H(ev, e.sgn, e.lg, e.lin, e.bad), log_form)
    out.bad = out.bad | bad
    return out


_UNARY = {"exp": _exp, "log": _log, "sqrt": _sqrt, "floor": _floor, "cos": _cos}


def _eval(node, x):
    if isinstance(node, Var):
        return x
    if isinstance(node, (Num, Name)):
        return _H.from_float(np.full(np.shape(x.val), node.value), np.zeros(np.shape(x.val), bool))
    if isinstance(node, Neg):
        return _neg(_eval(node.arg, x))
    if isinstance(node, Call):
        return _UNARY[node.fn](_eval(node.arg, x))
    if isinstance(node, Pow):
        return _pow(_eval(node.base, x), _eval(node.exp, x))
    a, b = _eval(node.left, x), _eval(node.right, x)
    if node.op == "+":
        return _add(a, b)
    if node.op == "-":
        return _add(a, _neg(b))
    if node.op == "*":
        return _mul(a, b)
    return _div(a, b)


def _log_of(node, x):
    """log f as a hybrid number, pushing the log through exp, powers and products."""
    if isinstance(node, Call) and node.fn == "exp":
        return _eval(node.arg, x)
    if isinstance(node, Call) and node.fn == "sqrt":
        half = _H.from_float(np.full(np.shape(x.val), 0.5))
        return _mul(half, _log_of(node.arg, x))
    if isinstance(node, Pow):
        return _mul(_eval(node.exp, x), _log_of(node.base, x))
    if isinstance(node, Bin) and node.op in "*/":
        a, b = _log_of(node.left, x), _log_of(node.right, x)
        return _add(a, b) if node.op == "*" else _add(a, _neg(b))
    return _log(_eval(node, x))


def _mp_eval(node, n):
    if isinstance(node, Var):
        return n
    if isinstance(node, Num):
        return mpmath.mpf(node.text)
    if isinstance(node, Name):
        if node.name == "pi":
            return +mpmath.pi
        if node.name == "e":
            return mpmath.e + 0
        return mpmath.mpf(node.value)
    if isinstance(node, Neg):
        return -_mp_eval(node.arg, n)
    if isinstance(node, Call):
        v = _mp_eval(node.arg, n)
        if node.fn == "floor":
            return mpmath.floor(v)
        return getattr(mpmath, node.fn)(v)
    if isinstance(node, Pow):
        return mpmath.power(_mp_eval(node.base, n), _mp_eval(node.exp, n))
    a, b = _mp_eval(node.left, n), _mp_eval(node.right, n)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    return a * b if node.op == "*" else a / b


def _mp_log_of(node, n):
    if isinstance(node, Call) and node.fn == "exp":
        return _mp_eval(node.arg, n)
    if isinstance(node, Pow):
        return _mp_eval(node.exp, n) * _mp_log_of(node.base, n)
    if isinstance(node, Bin) and node.op in "*/":
        a, b = _mp_log_of(node.left, n), _mp_log_of(node.right, n)
        return a + b if node.op == "*" else a - b
    v = _mp_eval(node, n)
    if v <= 0:
        raise DomainError("function is not positive")
    return mpmath.log(v)


# ---------------------------------------------------------------- GrowthFn

_PROBE_MAX = 10**6


def _probe_points():
    pts = list(range(1, 65))
    k = 64
    while k < _PROBE_MAX:
        pts.extend([k * 1.5, k * 2.0])
        k *= 2
    return np.array([p for p in pts if p <= _PROBE_MAX], dtype=float)


@dataclass(frozen=True)
class GrowthFn:
    ast: object
    source_text: str
    bindings: dict = field(default_factory=dict, compare=False, hash=False)
    n_min: int = 1

    # -- structure
    @property
    def has_floor(self) -> bool:
        return any(isinstance(nd, Call) and nd.fn == "floor" for nd in _walk(self.ast))

    @property
    def has_cos(self) -> bool:
        return any(isinstance(nd, Call) and nd.fn == "cos" for nd in _walk(self.ast))

    def pretty(self) -> str:
        return pretty(self.ast)

    # -- evaluation
    def _log_h(self, x):
        return _log_of(self.ast, x)

    @staticmethod
    def _arg(n):
        n = np.asarray(n, dtype=float)
        return _H.from_float(n, np.zeros(n.shape, bool)), n

    @staticmethod
    def _arg_log(log_n):
        log_n = np.asarray(log_n, dtype=float)
        return _H.from_log(np.ones(log_n.shape), log_n, np.zeros(log_n.shape, bool)), log_n

    def _finish(self, h, where, want_loglog):
        bad = h.bad
        if want_loglog:
            bad = bad | (h.sgn <= 0)
            out = np.where(bad, np.nan, h.lg)
        else:
            bad = bad | ~h.lin
            out = np.where(bad, np.nan, h.val)
        if np.any(bad):
            idx = int(np.argmax(np.ravel(bad)))
            at = float(np.ravel(where)[idx])
            if not want_loglog and not np.ravel(h.bad)[idx]:
                raise OverflowError(f"log f exceeds float range at n={at:g}")
            raise DomainError(f"{self.source_text!r} is not positive/defined at n={at:g}")
        return out if out.shape else float(out)

    def log_eval(self, n):
        """log f(n); n may be a scalar or an array."""
        x, where = self._arg(n)
        return self._finish(self._log_h(x), where, False)

    def log_eval_at_log(self, log_n):
        """log f(e^t) for t = log_n, without forming e^t."""
        x, where = self._arg_log(log_n)
        return self._finish(self._log_h(x), np.exp(np.minimum(where, 700)), False)

    def log_log_eval(self, n):
        """log(log f(n)); requires f(n) > 1."""
        x, where = self._arg(n)
        return self._finish(self._log_h(x), where, True)

    def log_log_at_log(self, log_n):
        x, where = self._arg_log(log_n)
        return self._finish(self._log_h(x), np.exp(np.minimum(where, 700)), True)

    def value(self, n):
        """f(n) as a float (may overflow to inf)."""
        x, _ = self._arg(n)
        h = _eval(self.ast, x)
        out = h.real()
        return out if out.shape else float(out)

    def eval_mp(self, n):
        """f(n) in mpmath at the current working precision."""
        return _mp_eval(self.ast, mpmath.mpf(n))

    def log_eval_mp(self, n):
        return _mp_log_of(self.ast, mpmath.mpf(n))

    def positive_mask(self, n):
        x, _ = self._arg(n)
        return ~self._log_h(x).bad


def parse(text: str, bindings: Optional[dict] = None) -> GrowthFn:
    bindings = dict(bindings or {})
    p = _Parser(text, bindings)
    ast = p.expr()
    kind, tok, pos = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {tok!r}", pos)
    _check_floor_cos(ast)
    used = {nd.name for nd in _walk(ast) if isinstance(nd, Name)}
    fn = GrowthFn(ast, text, {k: v for k, v in bindings.items() if k in used})
    return _with_n_min(fn)


def _with_n_min(fn):
    pts = _probe_points()
    ok = fn.positive_mask(pts)
    if not ok[-1]:
        raise DomainError(f"{fn.source_text!r} is not positive for any n <= {_PROBE_MAX}")
    bad_idx = np.nonzero(~ok)[0]
    n_min = 1 if len(bad_idx) == 0 else int(math.ceil(pts[bad_idx[-1] + 1]))
    return GrowthFn(fn.ast, fn.source_text, fn.bindings, n_min)


def as_growth_fn(f, bindings=None) -> GrowthFn:
    return f if isinstance(f, GrowthFn) else parse(str(f), bindings)


# ---------------------------------------------------------------- regular variation

@dataclass(frozen=True)
class RegVarReport:
    rho_estimates: tuple   # (x, x f'(x)/f(x)) at x = 2^j
    rho: float             # math.inf when the index is infinite
    confidence_width: float
    critical: bool


def _log_derivative(g, t):
    """d g / d t at t by central differences with one Richardson step."""
    h = 1e-3 * np.maximum(t, 1.0)
    d1 = (g(t + h) - g(t - h)) / (2 * h)
    d2 = (g(t + h / 2) - g(t - h / 2)) / h
    return (4 * d2 - d1) / 3


def _finite_prefix(g, t):
    """g on the longest prefix of t where it stays inside float range."""
    try:
        return g(t)
    except OverflowError:
        pass
    lo, hi = 0, len(t)           # g(t[:lo]) is known to work, g(t[:hi]) fails
    while hi - lo > 1:
        mid = (lo + hi) // 2
        try:
            g(t[:mid])
            lo = mid
        except OverflowError:
            hi = mid
    # the derivative stencil looks slightly past the last point
    return g(t[:max(lo - 1, 0)]) if lo > 1 else np.empty(0)


def estimate_rho(f, j_max: int = 256, *, of_log: bool = False) -> RegVarReport:
    """Index of regular variation of f (or of log f when ``of_log``).

    Estimates x f'(x)/f(x) = d log f / d log x on the grid x = 2^j and
    extrapolates the tail of the sequence assuming power-law convergence.
    """
    f = as_growth_fn(f)
    if f.has_floor:
        raise PreconditionError("floor-bearing functions have no index estimate; use the pressure route")
    g = f.log_log_at_log if of_log else f.log_eval_at_log
    lo_t = math.log(max(f.n_min, 1)) + 1.0
    js = np.arange(1, j_max + 1)
    t = js * math.log(2.0)
    t = t[t * 0.9 - 0.1 > lo_t] if of_log else t[t * 0.9 - 0.1 >= lo_t - 1.0]
    if len(t) < 8:
        raise PreconditionError("j_max too small for the probe grid")
    vals = _finite_prefix(g, t)
    t = t[:len(vals)]
    if len(t) < 8:
        raise OverflowError("log f leaves float range before the probe grid is long enough")
    if np.any(np.diff(vals) < -1e-12 * np.maximum(1.0, np.abs(vals[1:]))):
        k = int(np.argmax(np.diff(vals) < 0))
        raise NonMonotoneError(f"function decreases near n=2^{t[k + 1] / math.log(2):.0f}")
    est = _log_derivative(g, t)
    if np.any(~np.isfinite(est)):
        raise DomainError("index estimate is not finite on the grid")
    xs = np.exp2(t / math.log(2.0))
    pairs = tuple(zip((float(v) for v in xs), (float(v) for v in est)))
    tail = est[-max(4, len(est) // 8):]
    if tail[-1] > RHO_INFINITE_AT and np.all(np.diff(tail) > 0):
        return RegVarReport(pairs, math.inf, 0.0, False)
    m = len(est)
    r1, r2, r3 = est[m // 4 - 1], est[m // 2 - 1], est[m - 1]
    rho, width = float(r3), 0.0
    d1, d2 = r2 - r1, r3 - r2
    if d1 != 0 and abs(d2) > 1e-10 * max(1.0, abs(r3)):
        ratio = d2 / d1
        if 0 < ratio < 1:
            rho = float(r3 + d2 * ratio / (1 - ratio))
            width = abs(rho - r3)
        elif d1 > 0 and d2 > 0 and ratio >= 0.999:
            # increments not shrinking along a geometric grid: no finite limit
            return RegVarReport(pairs, math.inf, 0.0, False)
    critical = abs(rho - 0.5) <= CRITICAL_BAND
    return RegVarReport(pairs, rho, width, critical)


# ---------------------------------------------------------------- beta exponents

def _log_phi_values(phi, count):
    """log phi(k) for k = 1..count, either as floats or (when huge) as logs."""
    ks = np.arange(1, count + 1, dtype=float)
    x, _ = GrowthFn._arg(ks)
    h = phi._log_h(x)
    if np.any(h.bad):
        k = int(np.argmax(h.bad)) + 1
        raise DomainError(f"log phi undefined at n={k}")
    if np.all(h.lin):
        return h.val, None
    if np.any(h.sgn[~h.lin] <= 0) or np.any(h.val[h.lin] < 0):
        raise DomainError("log phi must be positive where it is huge")
    return None, np.where(h.sgn > 0, h.lg, -np.inf)


def _parity_cumsum(v):
    out = np.empty_like(v)
    out[0::2] = np.cumsum(v[0::2])
    out[1::2] = np.cumsum(v[1::2])
    return out


def _parity_logcumsum(lv):
    out = np.empty_like(lv)
    out[0::2] = np.logaddexp.accumulate(lv[0::2])
    out[1::2] = np.logaddexp.accumulate(lv[1::2])
    return out


def _window(N):
    return (N + 1) // 2, N


def beta(phi, N: int):
    """limsup of E(n+1)/E(n), E(m) = log phi(m) + log phi(m-2) + ...

    Returns (estimate, trace) where the estimate is the running maximum of
    the ratio over n in [N/2, N] and trace lists (n, ratio) for n = 1..N.
    """
    phi = as_growth_fn(phi)
    lin, logs = _log_phi_values(phi, N + 1)
    with np.errstate(all="ignore"):
        if lin is not None:
            E = _parity_cumsum(lin)          # E[m-1] = E(m)
            ratio = E[1:] / E[:-1]
        else:
            lE = _parity_logcumsum(logs)
            ratio = np.exp(lE[1:] - lE[:-1])
    lo, hi = _window(N)
    est = float(np.max(ratio[lo - 1:hi]))
    trace = tuple((n, float(r)) for n, r in zip(range(1, N + 1), ratio))
    return est, trace


def beta_simplified(phi, N: int) -> float:
    """1 + limsup log phi(n+1) / sum_{k<=n} log phi(k), over n in [N/2, N]."""
    phi = as_growth_fn(phi)
    lin, logs = _log_phi_values(phi, N + 1)
    with np.errstate(all="ignore"):
        if lin is not None:
            ratio = lin[1:] / np.cumsum(lin)[:-1]
        else:
            ratio = np.exp(logs[1:] - np.logaddexp.accumulate(logs)[:-1])
    lo, hi = _window(N)
    return 1.0 + float(np.max(ratio[lo - 1:hi]))
