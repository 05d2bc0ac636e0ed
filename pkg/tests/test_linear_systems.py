import itertools
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dioph_gowers.errors import DimensionError, RankDeficient
from dioph_gowers.exact_reals import ExactScalar
from dioph_gowers.linear_systems import (
    LinearSystem,
    classify,
    dual_degeneracy_margin,
    exact_rank,
    rank_matrix,
    rational_structure,
)

from helpers import B23, irrational_ap, rational_relation_example, system

EXAMPLE_TWO = [["1", "0", "-sqrt2", "-1+sqrt2"], ["0", "1", "-sqrt3", "-1+sqrt3"]]


def det_hp(L, cols):
    """|det| of a column subset evaluated with mpmath at 50 digits."""
    with mpmath.workdps(50):
        vals = {"sqrt2": mpmath.sqrt(2), "sqrt3": mpmath.sqrt(3)}
        rows = []
        for r in L.entries:
            row = []
            for j in cols:
                x = r[j]
                v = mpmath.mpf(x.q[0].numerator) / x.q[0].denominator
                for c, name in zip(x.q[1:], x.basis.names[1:]):
                    v += mpmath.mpf(c.numerator) / c.denominator * vals[name]
                row.append(v)
            rows.append(row)
        return abs(mpmath.det(mpmath.matrix(rows)))


def test_dimension_guard():
    with pytest.raises(DimensionError):
        system([["1", "2"], ["3", "4"]])


def test_rank_matrix_identity_with_zero_column():
    rm = rank_matrix(system([["1", "0", "0"], ["0", "1", "0"]]))
    assert rm.columns == (0, 1) and rm.det == pytest.approx(1.0)


def test_rank_matrix_single_row():
    assert rank_matrix(irrational_ap()).columns == (1,)


def test_rank_matrix_exclude_column():
    L = irrational_ap()
    assert rank_matrix(L, exclude_column=1).columns == (0,)


def test_rank_matrix_rank_deficient():
    with pytest.raises(RankDeficient):
        rank_matrix(system([["1", "sqrt2", "0"], ["2", "2*sqrt2", "0"]]))


def test_example_two_all_minors_nonzero():
    L = system(EXAMPLE_TWO)
    for cols in itertools.combinations(range(4), 2):
        assert det_hp(L, cols) > 1e-3
    r = classify(L)
    assert r.rank == 2 and r.dual_degeneracy_margin > 0


def test_dual_margin_examples():
    assert dual_degeneracy_margin(system([["1", "1", "0"]])) == 0.0
    assert dual_degeneracy_margin(irrational_ap()) > 0.4
    with pytest.raises(DimensionError):
        dual_degeneracy_margin(system([["1", "0", "sqrt2"], ["0", "1", "sqrt3"]]))


def test_rational_structure_example():
    u, theta, c = rational_structure(rational_relation_example())
    assert u == 1 and theta == [[5, 1]] and c == 5


def test_rational_structure_integer_and_purely_irrational():
    u, theta, _ = rational_structure(system([["1", "2", "3"], ["0", "1", "1"]]))
    assert u == 2 and theta == [[1, 0], [0, 1]]
    u, theta, _ = rational_structure(system([["1/2", "1", "0"]]))
    assert u == 1 and theta == [[2]]
    assert rational_structure(irrational_ap())[0] == 0


def test_classification_report_json():
    r = classify(rational_relation_example())
    js = r.to_json()
    assert js["rational_dimension"] == 1 and js["purely_irrational"] is False
    assert js["rational_map"] == [["5", "1"]]


def test_json_round_trip(tmp_path):
    L = rational_relation_example()
    assert LinearSystem.from_json(L.to_json()) == L
    with pytest.raises(ValueError):
        LinearSystem.from_json({**L.to_json(), "m": 3})


entries = st.tuples(st.integers(-2, 2), st.integers(-2, 2), st.integers(-2, 2)).map(lambda t: ExactScalar(t, B23))


@st.composite
def systems(draw, m=2, d=4):
    rows = [[draw(entries) for _ in range(d)] for _ in range(m)]
    return LinearSystem(rows, B23)


@given(systems())
def test_rank_matrix_is_maximal(L):
    if exact_rank(L.entries) < L.m:
        with pytest.raises(RankDeficient):
            rank_matrix(L)
        return
    rm = rank_matrix(L)
    best = det_hp(L, rm.columns)
    assert best > 0
    for cols in itertools.combinations(range(L.d), L.m):
        assert det_hp(L, cols) <= best * (1 + 1e-9) + 1e-30


@given(systems(), st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_dual_degeneracy_invariant_under_row_operations(L, g):
    if exact_rank(L.entries) < L.m:
        return
    gm = [[Fraction(g[0]), Fraction(g[1])], [Fraction(g[2]), Fraction(g[3])]]
    if gm[0][0] * gm[1][1] - gm[0][1] * gm[1][0] == 0:
        return
    L2 = L.left_multiply(gm)
    assert (dual_degeneracy_margin(L) == 0) == (dual_degeneracy_margin(L2) == 0)


@given(st.integers(0, 3), st.integers(-3, 3), st.integers(-3, 3), st.permutations(range(4)))
def test_planted_pair_degeneracy_detected(k, x, y, perm):
    # row space contains a vector supported on two columns
    rows = [["1", "sqrt2", "0", "0"], [f"{x}", f"{y}", "sqrt3", f"1+{k}*sqrt2"]]
    rows = [[r[p] for p in perm] for r in rows]
    assert dual_degeneracy_margin(system(rows)) == 0.0


@given(systems(m=2, d=4))
def test_rational_structure_invariants(L):
    if exact_rank(L.entries) < L.m:
        return
    u, theta, _ = rational_structure(L)
    slices = L.slices()
    if u == 0:
        assert theta is None
        return
    for sl in slices[1:]:
        for row in theta:
            assert all(sum(row[i] * sl[i][j] for i in range(L.m)) == 0 for j in range(L.d))
    s = [[sum(row[i] * slices[0][i][j] for i in range(L.m)) for j in range(L.d)] for row in theta]
    assert all(x.denominator == 1 for r in s for x in r)
    # idempotence on the rational part
    if exact_rank([[ExactScalar.rational(x) for x in r] for r in s]) == u and L.d >= u + 1:
        assert rational_structure(system([[str(x) for x in r] for r in s]))[0] == u


def test_full_rational_dimension_gives_integer_image():
    L = system([["1/2", "1/3", "0"], ["0", "1", "2/5"]])
    u, theta, _ = rational_structure(L)
    assert u == 2
    th = np.array([[float(x) for x in r] for r in theta])
    assert abs(np.linalg.det(th)) > 0
    s = [[sum(theta[r][i] * L.slices()[0][i][j] for i in range(2)) for j in range(3)] for r in range(2)]
    assert all(x.denominator == 1 for r in s for x in r)
