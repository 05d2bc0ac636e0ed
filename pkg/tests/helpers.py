"""Shared builders for the tests."""
from fractions import Fraction
from itertools import product

import numpy as np

from dioph_gowers.exact_reals import ConstantBasis, ExactScalar, parse_scalar, sqrt_const
from dioph_gowers.linear_systems import LinearSystem

B23 = ConstantBasis([sqrt_const(2), sqrt_const(3)])
B2 = ConstantBasis([sqrt_const(2)])


def system(rows, basis=B23):
    return LinearSystem([[x if isinstance(x, ExactScalar) else parse_scalar(str(x), basis) for x in r] for r in rows], basis)


def irrational_ap():
    return system([["1", "-sqrt2", "-1+sqrt2"]], B2)


def rational_relation_example():
    return system([["1", "0", "-sqrt2", "1-sqrt3"], ["0", "1", "5*sqrt2", "5*sqrt3"]])


def rational_relation_variant():
    """Same rational map (5 1) but with a solvable eps-box at moderate N."""
    return system([["1", "0", "-sqrt2", "1-sqrt3"], ["0", "-1", "5*sqrt2", "5*sqrt3"]])


def nearest_int(x: float) -> int:
    return int(np.floor(x + 0.5))


def random_entry(rng) -> str:
    """Random element of span{1, sqrt2, sqrt3} with small integer coefficients."""
    a, b, c = (int(v) for v in rng.integers(-1, 2, size=3))
    if a == b == c == 0:
        a = 1
    return ExactScalar((a, b, c), B23)


def brute_count_float(L, N, eps, weights=None, margin=1e-9):
    """Plain loop over [N]^d with float evaluation; asserts no point is near the boundary."""
    a = L.float_matrix()
    d = L.d
    e = float(eps)
    total = 0.0
    for n in product(range(1, N + 1), repeat=d):
        v = np.abs(a @ np.array(n, float)).max()
        assert abs(v - e) > margin, "boundary point; float oracle not decisive"
        if v <= e:
            w = 1.0
            if weights is not None:
                for j, nj in enumerate(n):
                    w *= weights[j][nj - 1]
            total += w
    return total


def random_oracle_instance(rng):
    """A random (L, N, eps, fs) with m <= 2, d <= 4, N <= 25 over span{1, sqrt2, sqrt3}.

    Entries are small so that most instances have solutions; about half use
    random integer weights in {-1, 0, 1}.
    """
    from dioph_gowers.linear_systems import exact_rank

    while True:
        m = int(rng.integers(1, 3))
        d = int(rng.integers(m + 1, 5))
        rows = [[random_entry(rng) for _ in range(d)] for _ in range(m)]
        L = LinearSystem(rows, B23)
        if exact_rank(L.entries) == m:
            break
    n_max = 25 if d <= 3 else 18
    N = int(rng.integers(4, n_max + 1))
    eps = Fraction(int(rng.integers(1, 7)), 2)
    if rng.random() < 0.5:
        fs = [rng.integers(-1, 2, size=N).astype(float) for _ in range(d)]
    else:
        fs = "ones"
    return L, N, eps, fs


# acceptance outcomes, printed by the terminal summary hook in conftest
ACCEPTANCE: dict[int, str] = {}
