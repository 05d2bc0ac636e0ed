"""The ten acceptance criteria at their stated tolerances and time limits.

Each test prints (and records for the terminal summary) one line
'criterion k: PASS|FAIL (t s)'.
"""
import math
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from dioph_gowers.approximation import ApproxQuery, approx_upper, approximate
from dioph_gowers.constructions import bad_behaviour_system, converse_verdict
from dioph_gowers.counting import count_brute, count_fast
from dioph_gowers.experiments import ExperimentConfig, run_experiment
from dioph_gowers.gowers import gowers_cyclic, gowers_inner_product, gowers_interval
from dioph_gowers.normal_form import extend_normal_form, is_normal_form, reparametrization_error
from dioph_gowers.reduction import DecompositionSolutions, reduce, verify_decomposition
from dioph_gowers.sieve import divisor_sum_check, sieve

from helpers import ACCEPTANCE, irrational_ap, random_oracle_instance, rational_relation_example, rational_relation_variant, system

HALF = Fraction(1, 2)
# pinned once on seed 0 (observed ratio 1.05 at N = 10^4)
NORM_CONSTANT_K = 1.5


@contextmanager
def criterion(k, limit):
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        took = time.perf_counter() - start
        ok = ok and took <= limit
        line = f"criterion {k}: {'PASS' if ok else 'FAIL'} ({took:.1f} s, limit {limit:g} s)"
        ACCEPTANCE[k] = line
        print(line)
    assert took <= limit, f"criterion {k} took {took:.1f} s"


def test_criterion_1_oracle_equivalence():
    with criterion(1, 60):
        rng = np.random.default_rng(2024)
        solved = 0
        for _ in range(100):
            L, N, eps, fs = random_oracle_instance(rng)
            a = count_fast(L, N, eps=eps, fs=fs)
            b = count_brute(L, N, eps=eps, fs=fs)
            assert a.raw_sum == b.raw_sum, (L, N, eps)
            solved += b.solutions_visited > 0
        assert solved >= 30


def test_criterion_2_ap_closed_form():
    with criterion(2, 1):
        r = count_fast(system([["1", "-2", "1"]]), 10, eps=Fraction(1, 10**9))
        assert r.raw_sum == 50


def test_criterion_3_decomposition_identity():
    with criterion(3, 120):
        literal = rational_relation_example()
        bundle = reduce(literal, HALF)
        assert bundle.theta == [[5, 1]]
        lhs, rhs, diff = verify_decomposition(literal, bundle, 50)
        assert lhs == rhs and diff == 0
        # the literal matrix has no solutions at all; the sign-changed variant has the same map and does
        variant = rational_relation_variant()
        sols = DecompositionSolutions(variant, reduce(variant, HALF), 50)
        c = sols.check()
        assert c.lhs == c.rhs > 0
        rng = np.random.default_rng(3)
        for _ in range(10):
            fs = [rng.choice([-1.0, 1.0], 50) for _ in range(4)]
            assert sols.check(fs).max_abs_diff == 0
            assert verify_decomposition(literal, bundle, 50, fs=fs)[2] == 0


def test_criterion_4_gowers_kernels():
    with criterion(4, 120):
        sizes = (64, 128, 256, 512)
        for seed in range(100):
            rng = np.random.default_rng(seed)
            f = rng.uniform(-1, 1, sizes[seed % 4])
            a = gowers_interval(f, 2).norm_value
            b = gowers_interval(f, 2, "naive").norm_value
            assert abs(a - b) <= 1e-10 * b
        for seed in range(50):
            f = np.random.default_rng(100 + seed).uniform(-1, 1, 32)
            u1, u2, u3 = (gowers_cyclic(f, k) for k in (1, 2, 3))
            assert u1 <= u2 + 1e-12 and u2 <= u3 + 1e-12
        for seed in range(50):
            rng = np.random.default_rng(200 + seed)
            fs = [rng.uniform(-1, 1, 32) for _ in range(4)]
            lhs = abs(gowers_inner_product(fs, cyclic=True))
            rhs = math.prod(gowers_cyclic(f, 2) for f in fs)
            assert lhs <= rhs + 1e-9


def test_criterion_5_approximation_function():
    with criterion(5, 60):
        L = irrational_ap()
        r = approximate(L, ApproxQuery(0.25, 0.25, 1e-4))
        assert 0.01 <= r.lower_bound <= r.upper_bound
        root2 = math.sqrt(2)
        scan = {k: max(abs(k * root2 - round(k * root2)), abs(k * (root2 - 1) - round(k * (root2 - 1)))) for k in range(1, 11)}
        best = min(scan, key=scan.get)
        value, phi, k, point = approx_upper(L, ApproxQuery(0.25, 0.1))
        assert best == 5 and abs(k[0]) == 5
        assert value == pytest.approx(scan[5], abs=1e-12)


def test_criterion_6_normal_form():
    with criterion(6, 5):
        tuv = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0], [1, 1, 1]], float)
        assert is_normal_form(tuv, 3)[0]
        assert not is_normal_form(tuv, 2)[0]
        ext = extend_normal_form(tuv, 2, c1=0.1)
        assert is_normal_form(ext.extended_forms, 2)[0]
        assert reparametrization_error(tuv, ext) <= 1e-10


def test_criterion_7_converse_construction():
    with criterion(7, 600):
        n = 10**4
        rep = converse_verdict(bad_behaviour_system(n, signed=True), n, trials=200, seed=0)
        assert rep.case == 3
        s = rep.details
        eta = rep.direction.eta
        assert s["gap_lower_95"] >= s["gap_target"]
        assert s["norm_f1_upper_95"] <= NORM_CONSTANT_K * math.sqrt(eta)


def test_criterion_8_fourier_uniform_ap():
    with criterion(8, 300):
        cfg = ExperimentConfig.from_json({"kind": "fourier_uniform_ap", "N_grid": [2000], "trials": 20, "seed": 0,
                                          "params": {"beta": "sqrt2", "alphas": [0.5], "max_rel_error": 0.1}})
        res = run_experiment(cfg)
        assert res.passed
        full = run_experiment(ExperimentConfig.from_json({"kind": "fourier_uniform_ap", "N_grid": [2000], "params": {"alphas": [1.0]}}))
        assert all(r["lhs"] == r["main_term"] for r in full.rows)


def test_criterion_9_mobius_decay():
    with criterion(9, 600):
        cfg = ExperimentConfig.from_json({"kind": "mobius_orthogonality", "N_grid": [256, 512, 1024, 2048], "params": {"oracle_N": 256}})
        res = run_experiment(cfg)
        s = {r["N"]: r["S"] for r in res.rows}
        assert abs(s[2048]) / 2048**2 < abs(s[256]) / 256**2
        assert res.assertions["oracle_match[N=256]"]


def test_criterion_10_sieve_identities():
    with criterion(10, 5):
        t = sieve(10**4)
        assert divisor_sum_check(t, 10**4)
        assert t.mertens(10) == -1
