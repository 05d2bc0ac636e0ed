from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dioph_gowers.errors import AmbiguousZero, IntegerRelationWarning, OutOfSpan
from dioph_gowers.exact_reals import (
    E,
    PI,
    Constant,
    ConstantBasis,
    ExactScalar,
    FormalPoly,
    certified_sign,
    formal_det,
    format_scalar,
    mpf_to_fraction,
    parse_scalar,
    sqrt_const,
)

SQRT2_40 = Fraction("1.4142135623730950488016887242096980785696")
BASIS = ConstantBasis([sqrt_const(2), sqrt_const(3), PI])

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=40)
scalars = st.lists(fractions, min_size=4, max_size=4).map(lambda q: ExactScalar(q, BASIS))


def test_rational_interval_is_a_point():
    iv = ExactScalar.rational(1, BASIS).eval(53)
    assert iv.lo == iv.hi == 1


def test_sqrt2_enclosure_53_bits():
    iv = ExactScalar.constant("sqrt2", BASIS).eval(53)
    assert iv.contains(SQRT2_40)
    assert iv.width <= 1e-15


def test_sqrt2_minus_one():
    x = parse_scalar("-1+sqrt2", BASIS)
    iv = x.eval(106)
    assert iv.contains(SQRT2_40 - 1)
    assert abs(float(x) - 0.41421356237309503) < 1e-16


def test_precision_floor():
    with pytest.raises(ValueError):
        ExactScalar.rational(1, BASIS).eval(40)


def test_is_rational():
    assert ExactScalar.rational(Fraction(3, 2), BASIS).is_rational()
    assert not ExactScalar.constant("sqrt2", BASIS).is_rational()
    assert parse_scalar("0*sqrt2+5", BASIS).is_rational()


def test_lowest_terms():
    x = ExactScalar([Fraction(6, 4), Fraction(10, 5)], BASIS)
    assert x.q[0] == Fraction(3, 2) and x.q[0].denominator == 2
    assert x.q[1] == 2


def test_parse_forms():
    assert parse_scalar("-sqrt3", BASIS) == ExactScalar([0, 0, -1, 0], BASIS)
    assert parse_scalar("3/2 - 1/3*sqrt2 + 0.5*pi", BASIS) == ExactScalar([Fraction(3, 2), Fraction(-1, 3), 0, Fraction(1, 2)], BASIS)
    with pytest.raises(ValueError):
        parse_scalar("sqrt7", BASIS)
    with pytest.raises(ValueError):
        parse_scalar("2 sqrt2", BASIS)


def test_irrational_product_leaves_span():
    r2 = ExactScalar.constant("sqrt2", BASIS)
    with pytest.raises(OutOfSpan):
        _ = r2 * r2
    assert (r2 * 3).q[1] == 3


def test_formal_products_reduce_squares():
    r2 = FormalPoly.from_scalar(ExactScalar.constant("sqrt2", BASIS))
    assert (r2 * r2 - FormalPoly.const(2, BASIS)).is_formally_zero()


def test_formal_det_sign():
    # det [[1, sqrt2], [sqrt2, 3]] = 1 > 0 ; det [[sqrt2, sqrt3], [sqrt3, sqrt2]] = -1 < 0
    s = lambda t: parse_scalar(t, BASIS)
    assert certified_sign(formal_det([[s("1"), s("sqrt2")], [s("sqrt2"), s("3")]])) == 1
    assert certified_sign(formal_det([[s("sqrt2"), s("sqrt3")], [s("sqrt3"), s("sqrt2")]])) == -1
    assert certified_sign(formal_det([[s("1"), s("sqrt2")], [s("sqrt2"), s("2")]])) == 0


def test_ambiguous_zero_for_hidden_relation():
    # sqrt8 - 2 sqrt2 vanishes but is not formally zero over this basis
    with pytest.warns(IntegerRelationWarning):
        b = ConstantBasis([sqrt_const(2), sqrt_const(8)])
    with pytest.raises(AmbiguousZero):
        parse_scalar("sqrt8-2*sqrt2", b).sign()


def test_compare_exact():
    x = ExactScalar.constant("sqrt2", BASIS)
    assert x.compare(Fraction(141421, 100000)) == 1
    assert x.compare(Fraction(141422, 100000)) == -1
    assert ExactScalar.rational(Fraction(1, 2), BASIS).compare(Fraction(1, 2)) == 0


def test_decimal_and_builtin_constants():
    b = ConstantBasis([Constant("alpha", "decimal", decimal="0.1234567890123456789012345678901234567890"), E])
    x = parse_scalar("2*alpha+e", b)
    with mpmath.workdps(60):
        truth = 2 * mpmath.mpf("0.1234567890123456789012345678901234567890") + mpmath.e
        iv = x.eval(150)
        assert iv.lo <= truth <= iv.hi
    with pytest.raises(ValueError):
        Constant("r4", "sqrt", 4)
    with pytest.raises(ValueError):
        ConstantBasis([sqrt_const(2), sqrt_const(2)])


def test_json_round_trip():
    b2 = ConstantBasis.from_json(BASIS.to_json())
    assert b2 == BASIS
    x = parse_scalar("1/3-2*sqrt3+pi", BASIS)
    assert ExactScalar.from_json(x.to_json(), BASIS) == x


def test_mpf_to_fraction_sign():
    assert mpf_to_fraction(mpmath.mpf(-0.75)) == Fraction(-3, 4)
    assert mpf_to_fraction(mpmath.mpf(0)) == 0


@given(scalars, scalars, scalars)
def test_ring_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    k = c.q[0]
    assert (a + b) * k == a * k + b * k
    assert a - a == ExactScalar.rational(0, BASIS)


@given(scalars)
def test_format_parse_round_trip(x):
    assert parse_scalar(format_scalar(x), BASIS) == x


@given(scalars, st.sampled_from([53, 80, 106]), st.sampled_from([160, 212, 424]))
def test_eval_nested_in_precision(x, p1, p2):
    lo1, hi1 = mpf_to_fraction(x.eval(p1).lo), mpf_to_fraction(x.eval(p1).hi)
    iv2 = x.eval(p2)
    lo2, hi2 = mpf_to_fraction(iv2.lo), mpf_to_fraction(iv2.hi)
    assert lo1 <= lo2 <= hi2 <= hi1


@given(scalars)
def test_eval_contains_high_precision_value(x):
    with mpmath.workdps(80):
        vals = [mpmath.mpf(1), mpmath.sqrt(2), mpmath.sqrt(3), +mpmath.pi]
        truth = mpmath.fsum(mpmath.mpf(c.numerator) / c.denominator * v for c, v in zip(x.q, vals))
        iv = x.eval(106)
        assert iv.lo - mpmath.mpf(10) ** -70 <= truth <= iv.hi + mpmath.mpf(10) ** -70
        mag = sum(abs(float(c)) * float(v) for c, v in zip(x.q, vals))
        assert float(iv.hi - iv.lo) <= 2.0 ** (2 - 106) * max(mag, 1.0)


@given(scalars)
def test_sign_matches_float(x):
    f = float(x)
    if abs(f) > 1e-9:
        assert x.sign() == (1 if f > 0 else -1)
    if x.is_zero():
        assert x.sign() == 0
