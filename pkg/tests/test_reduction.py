from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dioph_gowers.errors import UseRationalPath
from dioph_gowers.exact_reals import ExactScalar
from dioph_gowers.linear_systems import LinearSystem, exact_rank, rational_structure
from dioph_gowers.reduction import (
    DecompositionSolutions,
    check_bundle,
    dual_pair_margin,
    kernel_parametrization_check,
    pair_multiple_margin,
    reduce,
    verify_decomposition,
)

from helpers import B23, irrational_ap, rational_relation_example, rational_relation_variant, system

HALF = Fraction(1, 2)


def test_example_bundle_shape():
    L = rational_relation_example()
    b = reduce(L, HALF)
    assert b.u == 1 and b.theta == [[5, 1]]
    assert len(b.xi) == 4 and len(b.xi[0]) == 3
    assert b.L_prime.m == 1 and b.L_prime.d == 3
    assert rational_structure(b.L_prime)[0] == 0
    assert check_bundle(L, b)["L_prime_purely_irrational"]
    # Theta L0 = (5 1 0 5), whose image lattice is Z
    assert b.lattice_basis_a == [[1]]
    s = [5, 1, 0, 5]
    assert sum(x * y for x, y in zip(s, b.lifts_x[0])) == 1


def test_xi_is_saturated_kernel():
    b = reduce(rational_relation_example(), HALF)
    s = [5, 1, 0, 5]
    xi = np.array(b.xi)
    assert np.all(np.array(s) @ xi == 0)
    assert np.linalg.matrix_rank(xi) == 3
    # the 3x3 minors of a saturated basis have gcd 1
    from itertools import combinations
    from math import gcd

    g = 0
    for rows in combinations(range(4), 3):
        g = gcd(g, int(round(abs(np.linalg.det(xi[list(rows)])))))
    assert g == 1


def test_trivial_and_rational_paths():
    b = reduce(irrational_ap(), HALF)
    assert b.u == 0 and b.shifts == [[0, 0, 0]] and b.L_prime == irrational_ap()
    assert check_bundle(irrational_ap(), b) == {"trivial": True}
    with pytest.raises(UseRationalPath):
        reduce(system([["1", "2", "3"], ["0", "1", "1"]]), HALF)


def test_literal_example_identity_is_vacuous():
    # the second row is a sum of positive terms, so no n in [N]^4 solves it
    L = rational_relation_example()
    lhs, rhs, diff = verify_decomposition(L, reduce(L, HALF), 50)
    assert lhs == rhs == 0 and diff == 0


def test_variant_identity_n50():
    L = rational_relation_variant()
    b = reduce(L, HALF)
    assert check_bundle(L, b)["L_prime_purely_irrational"]
    sols = DecompositionSolutions(L, b, 50)
    c = sols.check()
    assert c.lhs == c.rhs == 15 and c.max_abs_diff == 0
    rng = np.random.default_rng(11)
    for _ in range(5):
        fs = [rng.choice([-1.0, 1.0], 50) for _ in range(4)]
        c = sols.check(fs)
        assert c.max_abs_diff == 0


def test_variant_identity_n30_random_signs():
    L = rational_relation_variant()
    b = reduce(L, HALF)
    rng = np.random.default_rng(3)
    fs = [rng.choice([-1.0, 1.0], 30) for _ in range(4)]
    assert verify_decomposition(L, b, 30, fs=fs)[2] == 0


def test_tiny_eps_empty_shift_set():
    L = rational_relation_variant()
    b = reduce(L, Fraction(1, 1000))
    lhs, rhs, diff = verify_decomposition(L, b, 30)
    assert lhs == rhs == 0


def test_json_serialization():
    js = reduce(rational_relation_example(), HALF).to_json()
    assert js["u"] == 1 and js["theta"] == [["5", "1"]] and len(js["R_tilde"]) >= 1


def test_kernel_parametrization_margins():
    b = reduce(rational_relation_example(), HALF)
    assert kernel_parametrization_check(b.xi, b.L_prime) > 0
    assert dual_pair_margin(b.xi, b.L_prime) > 0
    assert pair_multiple_margin(np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 1.0]])) == 0
    diag = np.diag([3.0, 2.0, 5.0])
    assert pair_multiple_margin(diag) == pytest.approx(2.0)


irr = st.tuples(st.integers(-1, 1), st.integers(-1, 1))
ints = st.lists(st.integers(-2, 2), min_size=4, max_size=4)


@settings(max_examples=25)
@given(st.integers(-2, 2).filter(bool), ints, ints, st.lists(irr, min_size=4, max_size=4))
def test_decomposition_identity_property(k, q1, q2, parts):
    """Rows q1 + I and q2 - k I share the rational map (k 1)."""
    if all(a == b == 0 for a, b in parts):
        return
    r1 = [ExactScalar((q, a, b), B23) for q, (a, b) in zip(q1, parts)]
    r2 = [ExactScalar((q, -k * a, -k * b), B23) for q, (a, b) in zip(q2, parts)]
    L = LinearSystem([r1, r2], B23)
    if exact_rank(L.entries) < 2:
        return
    u, _, _ = rational_structure(L)
    if u != 1:
        return
    s = [k * a + b for a, b in zip(q1, q2)]
    if not any(s):
        return
    b = reduce(L, HALF)
    check_bundle(L, b)
    lhs, rhs, diff = verify_decomposition(L, b, 9)
    assert diff == 0
