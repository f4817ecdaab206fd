import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cflab.cf_core import (DIGIT_CAP, QuotientSequence, Source, convergents, cylinder,
                           distortion_ratio, expand_rational, expand_real, reconstruct)
from cflab.errors import DigitCapOverflow, DomainError, PreconditionError


@pytest.mark.parametrize("p, q, expected", [(1, 3, [3]), (2, 5, [2, 2]), (1, 2, [2]), (4, 10, [2, 2])])
def test_expand_rational_examples(p, q, expected):
    assert list(expand_rational(p, q)) == expected


@pytest.mark.parametrize("p, q", [(0, 1), (1, 1), (3, 2), (-1, 3)])
def test_expand_rational_rejects_outside_unit_interval(p, q):
    with pytest.raises(DomainError):
        expand_rational(p, q)


@settings(max_examples=300)
@given(st.integers(2, 10**6).flatmap(lambda q: st.tuples(st.integers(1, q - 1), st.just(q))))
def test_rational_round_trip(pq):
    p, q = pq
    seq = expand_rational(p, q)
    assert reconstruct(seq.quotients) == Fraction(p, q)
    assert len(seq) == 1 or seq.quotients[-1] >= 2


def test_expand_real_golden_conjugate():
    # floor/ceil of (sqrt(5)-1)/2 at 128 bits
    scale = 1 << 128
    lo = Fraction(math.isqrt(5 * scale * scale) - scale, 2 * scale)
    hi = lo + Fraction(1, scale)
    seq = expand_real(lo, hi, 500)
    assert len(seq) >= 80
    assert set(seq.quotients) == {1}
    assert seq.exhausted_at == len(seq) + 1


def test_expand_real_degenerate_rational():
    seq = expand_real(Fraction(2, 5), Fraction(2, 5), 10)
    assert list(seq) == [2, 2]
    assert seq.exhausted_at is None


def test_expand_real_ambiguous_first_digit():
    seq = expand_real(Fraction(49, 100), Fraction(51, 100), 10)
    assert list(seq) == []
    assert seq.exhausted_at == 1


@settings(max_examples=100)
@given(st.lists(st.integers(1, 50), min_size=1, max_size=30), st.integers(1, 10**6))
def test_expand_real_valid_for_whole_interval(prefix, offset):
    # any interval strictly inside a cylinder yields at least that prefix
    cyl = cylinder(prefix)
    width = cyl.right - cyl.left
    lo = cyl.left + width / (offset + 2)
    hi = cyl.right - width / (offset + 3)
    seq = expand_real(lo, hi, len(prefix) + 5)
    assert seq.quotients[:len(prefix)] == tuple(prefix)


def test_convergents_fibonacci_and_hand_values():
    assert [c.q for c in convergents([1, 1, 1, 1])] == [1, 2, 3, 5]
    fr = [Fraction(c.p, c.q) for c in convergents([2, 2, 2])]
    assert fr == [Fraction(1, 2), Fraction(2, 5), Fraction(5, 12)]
    assert Fraction(convergents([7])[0].p, convergents([7])[0].q) == Fraction(1, 7)


def test_convergents_log_domain_past_cap():
    qs = [10**6] * 40
    exact = convergents(qs)
    capped = convergents(qs, digit_cap=50)
    assert capped[-1].q is None and capped[5].q is not None
    for e, c in zip(exact, capped):
        assert c.log_q == pytest.approx(e.log_q, rel=1e-12)


def test_convergents_needs_enough_quotients():
    with pytest.raises(PreconditionError):
        convergents([1, 2], 3)


@settings(max_examples=200)
@given(st.lists(st.integers(1, 10**9), min_size=1, max_size=60))
def test_log_q_tracks_exact(qs):
    for c in convergents(qs):
        assert abs(c.log_q - math.log(c.q)) <= 1e-9 * max(1.0, math.log(c.q))


def test_cylinder_examples():
    c = cylinder([1])
    assert (c.left, c.right, c.left_closed, c.right_closed) == (Fraction(1, 2), 1, False, True)
    assert c.length == Fraction(1, 2)
    assert cylinder([1, 1]).length == Fraction(1, 6)
    for a in (2, 7, 1000):
        assert cylinder([a]).length == Fraction(1, a * (a + 1))


@settings(max_examples=200)
@given(st.lists(st.integers(1, 9), min_size=1, max_size=12))
def test_cylinder_length_sandwich_exact(qs):
    c = cylinder(qs)
    lo, hi = c.length_bounds()
    assert lo <= c.length <= hi
    assert c.right - c.left == c.length
    assert c.contains(reconstruct(qs))


def test_distortion_examples():
    assert distortion_ratio([1], [1]) == pytest.approx(2 / 3)
    assert 0.5 <= distortion_ratio([2, 3], [5]) <= 2


@settings(max_examples=200)
@given(st.lists(st.integers(1, 20), min_size=1, max_size=5),
       st.lists(st.integers(1, 20), min_size=1, max_size=5))
def test_distortion_bounded(prefix, suffix):
    assert 0.5 <= distortion_ratio(prefix, suffix) <= 2


def test_distortion_preconditions():
    with pytest.raises(PreconditionError):
        distortion_ratio([1], [])
    with pytest.raises(DigitCapOverflow):
        distortion_ratio([10**9] * 10, [10**9] * 10, digit_cap=50)


def test_sequence_json_round_trip():
    seq = QuotientSequence((1, 2, 3), Source("generated", {"construction": "literal"}), 4)
    assert QuotientSequence.from_json(seq.to_json()) == seq
    assert DIGIT_CAP == 10**5


def test_sequence_rejects_nonpositive():
    with pytest.raises(DomainError):
        QuotientSequence((1, 0), Source("generated"))
