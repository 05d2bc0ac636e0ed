"""Passing from L with rational dimension u to a purely irrational L'.

With S = Theta L (an integer u x d matrix) the integer points split as
n = Xi n' + r~, where Xi is a saturated basis of ker S and r~ runs over lifts
of the finitely many values r = S n that the cutoff allows.  Writing Y for a
saturated integer basis of ker Theta and Y+ for its rational left inverse,
L Xi n' = Y (Y+ L Xi n'), so L' = Y+ L Xi and G(L n) = G(Y L' n' + L r~).
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
import scipy.optimize

from . import lattice, ratlinalg
from .counting import (
    SolutionSet,
    brute_solutions,
    enumerate_generalized,
)
from .cutoffs import CutoffSpec, ImageCutoff, PolytopeCutoff, SharpBox
from .errors import DimensionError, RankDeficient, UseRationalPath
from .exact_reals import ExactScalar, formal_dot, format_scalar
from .linear_systems import LinearSystem, exact_rank, rational_structure

log = logging.getLogger(__name__)


def image_lattice_basis(s: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Basis a_1..a_u of S(Z^d) and short lifts x_i with S x_i = a_i.

    Returns (a_basis, lifts) as lists of vectors.  The lifts are shortened
    against the kernel lattice.
    """
    s = [[int(v) for v in row] for row in s]
    lattice.require_surjective(s)
    h, x, k, r = lattice.image_basis(s)
    u = len(s)
    a_basis = [[h[i][j] for i in range(u)] for j in range(r)]
    lifts = [lattice.babai_reduce([x[i][j] for i in range(len(x))], k) for j in range(r)]
    return a_basis, lifts


@dataclass
class ReductionBundle:
    theta: list[list[Fraction]] | None
    xi: list[list[int]]  # d x (d-u)
    shifts: list[list[int]]  # the set R~
    P: list[list[ExactScalar]]  # m x m
    L_prime: LinearSystem
    lattice_basis_a: list[list[int]]
    lifts_x: list[list[int]]
    ker_theta: list[list[int]]  # m x (m-u), columns y_j
    eps_box: Fraction | None
    u: int

    @property
    def h(self) -> int:
        return len(self.xi[0]) if self.xi else 0

    def shift_cutoff(self, L: LinearSystem, shift: Sequence[int], G: ImageCutoff) -> ImageCutoff:
        """G_r(x') = G(Y x' + L r) as a polytope in the coordinates of L'."""
        return _pulled_back_cutoff(L, self.ker_theta, shift, G)

    def to_json(self) -> dict:
        def sc(rows):
            return [[format_scalar(x) for x in r] for r in rows]

        return {
            "u": self.u,
            "theta": None if self.theta is None else [[str(x) for x in r] for r in self.theta],
            "Xi": self.xi,
            "R_tilde": self.shifts,
            "P": sc(self.P),
            "L_prime": self.L_prime.to_json(),
            "lattice_basis_a": self.lattice_basis_a,
            "lifts_x": self.lifts_x,
            "ker_theta": self.ker_theta,
            "eps": None if self.eps_box is None else str(self.eps_box),
            "norms": {
                "Xi_inf": max((abs(v) for r in self.xi for v in r), default=0),
                "lifts_inf": max((abs(v) for r in self.lifts_x for v in r), default=0),
                "R_tilde_inf": max((abs(v) for r in self.shifts for v in r), default=0),
            },
        }


def _pulled_back_cutoff(L: LinearSystem, ker_theta, shift, G: ImageCutoff) -> ImageCutoff:
    m = L.m
    cons = G.constraints(m)
    if cons is None:
        raise DimensionError("the reduction needs a sharp box or polytope image cutoff")
    lr = L.apply(shift)
    a_new, offs = [], []
    for i, arow in enumerate(cons.A):
        a_new.append([sum((arow[r] * ker_theta[r][j] for r in range(m)), Fraction(0)) for j in range(len(ker_theta[0]))])
        off = ExactScalar.rational(0, L.basis)
        for r in range(m):
            if arow[r] != 0:
                off = off + lr[r] * arow[r]
        if cons.offset is not None:
            off = off + cons.offset[i]
        offs.append(off)
    return PolytopeCutoff(a_new, cons.bound, offs)


def _identity_bundle(L: LinearSystem, eps) -> ReductionBundle:
    d, m = L.d, L.m
    eye_d = [[int(i == j) for j in range(d)] for i in range(d)]
    eye_m = [[ExactScalar.rational(int(i == j), L.basis) for j in range(m)] for i in range(m)]
    return ReductionBundle(None, eye_d, [[0] * d], eye_m, L, [], [], [[int(i == j) for j in range(m)] for i in range(m)], eps, 0)


def _candidate_values(theta, a_basis, eps: Fraction, m: int) -> list[list[int]]:
    """Integer r in S(Z^d) with r = Theta y for some y in [-eps, eps]^m."""
    u = len(theta)
    radius = [sum(abs(x) for x in row) * eps for row in theta]
    ranges = [range(-int(np.floor(float(rad))) - 1, int(np.floor(float(rad))) + 2) for rad in radius]
    th = np.array([[float(x) for x in row] for row in theta])
    e = float(eps)
    a_cols = [[a_basis[j][i] for j in range(len(a_basis))] for i in range(u)]
    out = []
    for r in itertools.product(*ranges):
        if lattice.lattice_coordinates(a_cols, list(r)) is None:
            continue
        # exact feasibility is not needed: spurious r~ only contribute empty sums
        res = scipy.optimize.linprog(np.zeros(m), A_eq=th, b_eq=np.array(r, float), bounds=[(-e * (1 + 1e-9) - 1e-12, e * (1 + 1e-9) + 1e-12)] * m, method="highs")
        if res.status == 0:
            out.append(list(r))
    return out


def reduce(L: LinearSystem, eps=Fraction(1, 2)) -> ReductionBundle:
    """Xi, R~, P and the purely irrational L' for the eps-box image cutoff."""
    eps = Fraction(eps) if not isinstance(eps, Fraction) else eps
    if exact_rank(L.entries) < L.m:
        raise RankDeficient("L does not have rank m")
    u, theta, _ = rational_structure(L)
    m, d = L.m, L.d
    if u == 0:
        return _identity_bundle(L, eps)
    if u == m:
        raise UseRationalPath("rational dimension equals m; use the integer-matrix path")
    l0 = L.slices()[0]
    s_frac = ratlinalg.matmul(theta, l0)
    if any(x.denominator != 1 for r in s_frac for x in r):
        raise ValueError("Theta L is not integral")
    s = [[int(x) for x in r] for r in s_frac]
    a_basis, lifts = image_lattice_basis(s)
    xi = lattice.integer_kernel(s, d)
    # saturated integer basis of ker Theta
    th_den = ratlinalg.common_denominator([x for r in theta for x in r])
    th_int = [[int(x * th_den) for x in r] for r in theta]
    y = lattice.integer_kernel(th_int, m)
    y_plus = ratlinalg.left_inverse(y)
    a_mat = [[a_basis[j][i] for j in range(u)] for i in range(u)]
    a_inv_theta = ratlinalg.matmul(ratlinalg.inverse(a_mat), theta)
    x_mat = [[lifts[j][i] for j in range(u)] for i in range(d)]
    lx = L.right_multiply(x_mat)  # m x u, columns L x_i
    proj = lx.right_multiply(a_inv_theta)  # m x m, L X A^-1 Theta
    basis = L.basis
    p_rows = [[ExactScalar.rational(v, basis) for v in row] for row in a_inv_theta]
    for row in y_plus:
        new = []
        for j in range(m):
            acc = ExactScalar.rational(row[j], basis)
            for r in range(m):
                if row[r] != 0:
                    acc = acc - proj.entries[r][j] * row[r]
            new.append(acc)
        p_rows.append(new)
    l_prime = L.right_multiply(xi).left_multiply(y_plus)
    shifts = []
    for r in _candidate_values(theta, a_basis, eps, m):
        c = lattice.lattice_coordinates(a_mat, r)
        shifts.append([sum(lifts[i][t] * c[i] for i in range(u)) for t in range(d)])
    return ReductionBundle(theta, xi, shifts, p_rows, l_prime, a_basis, lifts, y, eps, u)


def check_bundle(L: LinearSystem, b: ReductionBundle) -> dict:
    """Exact checks of the bundle invariants; raises AssertionError on failure."""
    if b.u == 0:
        return {"trivial": True}
    m = L.m
    s = ratlinalg.matmul(b.theta, L.slices()[0])
    lxi = L.right_multiply(b.xi)
    # Theta L Xi = 0 in every slice
    for sl in lxi.slices():
        assert all(x == 0 for x in itertools.chain.from_iterable(ratlinalg.matmul(b.theta, sl))), "Theta L Xi != 0"
    for a, x in zip(b.lattice_basis_a, b.lifts_x):
        assert ratlinalg.matvec(s, x) == [Fraction(v) for v in a], "S x_i != a_i"
    for sl in L.slices()[1:]:
        assert all(v == 0 for r in ratlinalg.matmul(b.theta, sl) for v in r), "Theta L has irrational part"
    # P (L x_i) = e_i and P y_j = e_{u+j}
    for i, x in enumerate(b.lifts_x):
        lx = L.apply(x)
        for r in range(m):
            val = formal_dot(b.P[r], lx)
            want = int(r == i)
            assert (val - type(val).const(want, L.basis)).is_formally_zero(), "P L x_i != e_i"
    for j in range(m - b.u):
        col = [ExactScalar.rational(b.ker_theta[r][j], L.basis) for r in range(m)]
        for r in range(m):
            val = formal_dot(b.P[r], col)
            assert (val - type(val).const(int(r == b.u + j), L.basis)).is_formally_zero(), "P y_j != e_(u+j)"
    u_prime, _, _ = rational_structure(b.L_prime)
    assert u_prime == 0, "L' is not purely irrational"
    assert exact_rank(b.L_prime.entries) == m - b.u, "L' is not surjective"
    xi = np.array(b.xi, dtype=float)
    assert np.linalg.matrix_rank(xi) == xi.shape[1], "Xi is not injective"
    return {"trivial": False, "L_prime_purely_irrational": True}


@dataclass(frozen=True)
class DecompositionCheck:
    lhs: float
    rhs: float
    max_abs_diff: float
    terms: tuple[float, ...]


class DecompositionSolutions:
    """Both sides of the decomposition enumerated once, reusable across weightings."""

    def __init__(self, L: LinearSystem, bundle: ReductionBundle, N: int, cutoff: CutoffSpec | None = None):
        if cutoff is None:
            if bundle.eps_box is None:
                raise ValueError("need a cutoff")
            cutoff = CutoffSpec.box(bundle.eps_box)
        if not isinstance(cutoff.F, SharpBox):
            raise DimensionError("the exact identity is checked for the sharp variable cutoff")
        self.N = N
        self.lhs: SolutionSet = brute_solutions(L, N, cutoff)
        self.rhs: list[SolutionSet] = []
        for r in bundle.shifts:
            g = bundle.shift_cutoff(L, r, cutoff.G) if bundle.u else cutoff.G
            self.rhs.append(enumerate_generalized(bundle.L_prime, bundle.xi, r, N, CutoffSpec(SharpBox(), g)))

    def check(self, fs=None) -> DecompositionCheck:
        import math

        lhs = self.lhs.raw(fs)
        terms = tuple(s.raw(fs) for s in self.rhs)
        rhs = math.fsum(terms)
        return DecompositionCheck(lhs, rhs, abs(lhs - rhs), terms)


def verify_decomposition(L: LinearSystem, bundle: ReductionBundle, N: int, cutoff: CutoffSpec | None = None, fs=None) -> tuple[float, float, float]:
    """(lhs, rhs, max_abs_diff) of the identity in raw (unnormalized) sums.

    Both sides share the normalization N^(d-m), so comparing raw sums is the
    same statement.
    """
    c = DecompositionSolutions(L, bundle, N, cutoff).check(fs)
    return c.lhs, c.rhs, c.max_abs_diff


def _orthonormal_kernel(L: LinearSystem, dps: int = 40) -> np.ndarray:
    with mpmath.workdps(dps):
        rows = [[mpmath.mpf(0) for _ in range(L.d)] for _ in range(L.m)]
        for i, r in enumerate(L.entries):
            for j, x in enumerate(r):
                iv = x.eval(4 * dps)
                rows[i][j] = (iv.lo + iv.hi) / 2
        a = mpmath.matrix(rows).T  # d x m
        q, _ = mpmath.qr(a, mode="full")
        phi = [[float(q[i, j]) for j in range(L.m, L.d)] for i in range(L.d)]
    return np.array(phi, dtype=float).reshape(L.d, L.d - L.m)


def pair_multiple_margin(rows: np.ndarray) -> float:
    """min over ordered pairs i != j of min over lambda of |row_i - lambda row_j|_2."""
    best = np.inf
    for i, j in itertools.permutations(range(rows.shape[0]), 2):
        a, b = rows[i], rows[j]
        bb = float(b @ b)
        lam = float(a @ b) / bb if bb > 0 else 0.0
        best = min(best, float(np.linalg.norm(a - lam * b)))
    return float(best)


def kernel_parametrization_check(xi, L: LinearSystem) -> float:
    """Margin of Xi Phi from the forms-degeneracy variety, Phi orthonormal in ker L."""
    if exact_rank(L.entries) < L.m:
        raise RankDeficient("L is rank deficient")
    phi = _orthonormal_kernel(L)
    return pair_multiple_margin(np.asarray(xi, dtype=float) @ phi)


def dual_pair_margin(xi, L: LinearSystem) -> float:
    """Distance-style margin of (Xi, L) from the dual pair degeneracy variety.

    Measures how far rows xi_i - lambda xi_j (and single rows) are from the
    row space of L, normalized by |(1, lambda)|.  Zero iff (Xi, L) is
    degenerate; advisory only.
    """
    xi = np.asarray(xi, dtype=float)
    lf = L.float_matrix()
    q, _ = np.linalg.qr(lf.T)
    comp = np.eye(lf.shape[1]) - q @ q.T
    proj = xi @ comp
    best = min(float(np.linalg.norm(p)) for p in proj)
    for i, j in itertools.permutations(range(xi.shape[0]), 2):
        a, b = proj[i], proj[j]
        bb = float(b @ b)
        lam = float(a @ b) / bb if bb > 0 else 0.0
        best = min(best, float(np.linalg.norm(a - lam * b)) / float(np.hypot(1.0, lam)))
    return best
