import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dioph_gowers.errors import BudgetExceeded
from dioph_gowers.gowers import (
    balanced_function,
    fourier_sup,
    gowers_cyclic,
    gowers_inner_product,
    gowers_interval,
    interval_sum,
)
from dioph_gowers.weights import WeightFunction


def u2_sum_direct(f):
    """sum over x, h1, h2 in Z of f(x) f(x+h1) f(x+h2) f(x+h1+h2), by explicit shifts."""
    n = len(f)
    total = 0.0
    for h1 in range(-(n - 1), n):
        for h2 in range(-(n - 1), n):
            acc = 0.0
            for x in range(n):
                idx = (x + h1, x + h2, x + h1 + h2)
                if all(0 <= i < n for i in idx):
                    acc += f[x] * f[idx[0]] * f[idx[1]] * f[idx[2]]
            total += acc
    return total


def cyclic_direct(f, degree):
    n = len(f)
    total = 0.0
    for x in range(n):
        for h in itertools.product(range(n), repeat=degree):
            p = 1.0
            for w in itertools.product((0, 1), repeat=degree):
                p *= f[(x + sum(a * b for a, b in zip(w, h))) % n]
            total += p
    return max(total / n ** (degree + 1), 0.0) ** (1 / 2**degree)


def test_constant_one_has_norm_one():
    for k in (1, 2, 3):
        assert gowers_interval(np.ones(20), k).norm_value == pytest.approx(1.0, rel=1e-12)
        assert gowers_cyclic(np.full(8, -0.5), k) == pytest.approx(0.5, rel=1e-12)


def test_zero_function():
    assert gowers_interval(np.zeros(16), 2).norm_value == 0.0


def test_sum_against_explicit_loop():
    f = np.random.default_rng(3).choice([-1.0, 1.0], 12)
    assert interval_sum(f, 2) == pytest.approx(u2_sum_direct(f), rel=1e-12)
    assert interval_sum(f, 2, "naive") == pytest.approx(u2_sum_direct(f), rel=1e-12)


def test_fft_matches_naive_n64():
    for seed in range(5):
        f = np.random.default_rng(seed).choice([-1.0, 1.0], 64)
        a = gowers_interval(f, 2).norm_value
        b = gowers_interval(f, 2, "naive").norm_value
        assert abs(a - b) <= 1e-10 * b


def test_recursive_degree_three_matches_naive():
    f = np.random.default_rng(1).uniform(-1, 1, 24)
    a = gowers_interval(f, 3)
    b = gowers_interval(f, 3, "naive")
    assert a.norm_value == pytest.approx(b.norm_value, rel=1e-10)
    assert a.method == "recursive"


def test_report_quotient_invariant():
    r = gowers_interval(np.random.default_rng(2).uniform(-1, 1, 40), 2)
    assert r.norm_value ** 4 == pytest.approx(r.numerator / r.denominator, rel=1e-12)


def test_cosine_cyclic_direct():
    f = np.cos(2 * np.pi * np.arange(8) / 8)
    assert gowers_cyclic(f, 2) == pytest.approx(cyclic_direct(f, 2), rel=1e-12)
    assert gowers_cyclic(f, 2, "naive") == pytest.approx(cyclic_direct(f, 2), rel=1e-12)


def test_cyclic_nesting_witness():
    f = np.random.default_rng(7).uniform(-1, 1, 32)
    u1, u2, u3 = (gowers_cyclic(f, k) for k in (1, 2, 3))
    assert u1 <= u2 + 1e-12 and u2 <= u3 + 1e-12


def test_budget_guard():
    with pytest.raises(BudgetExceeded):
        interval_sum(np.ones(5000), 3, "naive")


def test_balanced_function_examples():
    assert np.all(balanced_function(range(1, 9), 8).values == 0)
    assert np.all(balanced_function([], 8).values == 0)
    f = balanced_function([1, 2, 3, 4], 8)
    assert list(f.values) == [0.5] * 4 + [-0.5] * 4
    g = balanced_function(np.nonzero(np.random.default_rng(0).random(999) < 0.3)[0] + 1, 999)
    assert abs(np.sum(g.values)) <= 1e-9


def test_fourier_sup_examples():
    assert fourier_sup(np.ones(64)).value == pytest.approx(1.0)
    n = 256
    r = fourier_sup(np.cos(2 * np.pi * np.arange(1, n + 1) * 5 / n))
    assert r.value == pytest.approx(0.5, abs=1e-9)
    assert min(abs(r.theta - 5 / n), abs(r.theta - (1 - 5 / n))) < 1e-12
    with pytest.raises(ValueError):
        fourier_sup(np.ones(4), oversample=2)


def test_fourier_sup_random_sets_are_uniform():
    hits = 0
    for seed in range(100):
        mask = np.random.default_rng(seed).random(1024) < 0.5
        hits += fourier_sup(balanced_function(np.nonzero(mask)[0] + 1, 1024)).value <= 0.15
    assert hits >= 99


def test_inner_product_consistency():
    f = np.random.default_rng(4).uniform(-1, 1, 10)
    ip = gowers_inner_product([f] * 4)
    s = interval_sum(f, 2)
    assert ip == pytest.approx(s / 10**3, rel=1e-12)
    assert gowers_inner_product([f, f, np.zeros(10), f]) == 0.0
    cyc = gowers_inner_product([f] * 4, cyclic=True)
    assert cyc == pytest.approx(gowers_cyclic(f, 2) ** 4, rel=1e-10)


def test_weight_function_bound_and_padding():
    w = WeightFunction([0.5, -1.0, 1.0])
    assert w.n_max == 3 and w.padded()[0] == 0 and list(w.padded()[1:]) == [0.5, -1.0, 1.0]
    with pytest.raises(ValueError):
        WeightFunction([2.0])


vectors = arrays(np.float64, st.integers(4, 20), elements=st.floats(-1, 1, allow_nan=False))


@given(vectors, st.floats(-3, 3, allow_nan=False))
def test_scaling(f, c):
    a = gowers_interval(c * f, 2).norm_value
    b = abs(c) * gowers_interval(f, 2).norm_value
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@given(vectors)
def test_positivity_and_fft_naive(f):
    a = gowers_interval(f, 2).norm_value
    b = gowers_interval(f, 2, "naive").norm_value
    assert a >= 0
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


@given(arrays(np.float64, 12, elements=st.floats(-1, 1, allow_nan=False)))
def test_cyclic_nesting_property(f):
    u = [gowers_cyclic(f, k) for k in (1, 2, 3)]
    assert u[0] <= u[1] + 1e-12 and u[1] <= u[2] + 1e-12


@given(st.lists(arrays(np.float64, 10, elements=st.floats(-1, 1, allow_nan=False)), min_size=4, max_size=4))
def test_gowers_cauchy_schwarz_property(fs):
    lhs = abs(gowers_inner_product(fs, cyclic=True))
    rhs = np.prod([gowers_cyclic(f, 2) for f in fs])
    assert lhs <= rhs + 1e-9


def test_interval_and_cyclic_differ_by_bounded_factor():
    # zero-extension into Z/4N sees no wraparound, so only the normalizations differ
    n = 24
    f = np.random.default_rng(4).uniform(-1, 1, n)
    padded = np.concatenate([f, np.zeros(3 * n)])
    cyc = gowers_cyclic(padded, 2)
    interval = gowers_interval(f, 2).norm_value
    assert interval_sum(f, 2) == pytest.approx(cyc**4 * (4 * n) ** 3, rel=1e-10)
    ratio = interval / cyc
    assert ratio == pytest.approx(((4 * n) ** 3 / interval_sum(np.ones(n), 2)) ** 0.25, rel=1e-10)
    assert 1 < ratio < 4
