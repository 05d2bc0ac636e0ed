"""Integer lattice routines: column Hermite normal form, saturated kernels, lifts."""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import NotSurjective


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def column_hnf(a: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]], int]:
    """Column-style Hermite normal form.

    Returns (H, U, r) with a @ U = H, U unimodular, the first r columns of H in
    lower echelon form with positive pivots and reduced entries left of each
    pivot, and the remaining columns of H zero.  Columns r.. of U therefore
    form a basis of the integer kernel of a.
    """
    rows = len(a)
    cols = len(a[0]) if rows else 0
    h = [[int(x) for x in row] for row in a]
    u = [[int(i == j) for j in range(cols)] for i in range(cols)]

    def colop(i: int, j: int, p: int, q: int, r: int, s: int):
        # (col_i, col_j) <- (p col_i + q col_j, r col_i + s col_j)
        for mat in (h, u):
            for row in mat:
                x, y = row[i], row[j]
                row[i], row[j] = p * x + q * y, r * x + s * y

    pivots = []
    c = 0
    for i in range(rows):
        if c >= cols:
            break
        for j in range(c + 1, cols):
            if h[i][j] == 0:
                continue
            x, y = h[i][c], h[i][j]
            g, p, q = _xgcd(x, y)
            colop(c, j, p, q, -y // g, x // g)
        if h[i][c] == 0:
            continue
        if h[i][c] < 0:
            for mat in (h, u):
                for row in mat:
                    row[c] = -row[c]
        pivots.append((i, c))
        c += 1
    # reduce entries to the left of each pivot
    for i, pc in pivots:
        piv = h[i][pc]
        for j in range(pc):
            f = h[i][j] // piv
            if f:
                for mat in (h, u):
                    for row in mat:
                        row[j] -= f * row[pc]
    return h, u, c


def integer_kernel(a: Sequence[Sequence[int]], ncols: int | None = None) -> list[list[int]]:
    """Saturated basis (columns of a d x k matrix) of {x in Z^d : a x = 0}."""
    if not a:
        d = ncols or 0
        return [[int(i == j) for j in range(d)] for i in range(d)]
    h, u, r = column_hnf(a)
    d = len(a[0])
    k = [[u[i][j] for j in range(r, d)] for i in range(d)]
    if d - r == 0:
        return [[] for _ in range(d)]
    return hnf_basis(k)


def hnf_basis(b: Sequence[Sequence[int]]) -> list[list[int]]:
    """Canonical basis (columns) of the lattice spanned by the columns of b."""
    h, _, r = column_hnf(b)
    return [row[:r] for row in h]


def image_basis(s: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]], list[list[int]], int]:
    """Basis of S(Z^d), matching lifts, and a kernel basis.

    Returns (H, X, K, r): columns of H (u x r) generate S(Z^d), S @ X = H, and
    K (d x (d-r)) is a saturated kernel basis.
    """
    h, u, r = column_hnf(s)
    hb = [row[:r] for row in h]
    x = [row[:r] for row in u]
    k = [row[r:] for row in u]
    return hb, x, k, r


def babai_reduce(x: Sequence[int], k: Sequence[Sequence[int]]) -> list[int]:
    """Shorten x by kernel-lattice vectors (columns of k): rounding then a local search."""
    x = np.array([int(v) for v in x], dtype=object)
    if not k or not k[0]:
        return [int(v) for v in x]
    kk = np.array(k, dtype=object)
    kf = kk.astype(float)
    coef, *_ = np.linalg.lstsq(kf, x.astype(float), rcond=None)
    c = np.array([int(round(v)) for v in coef], dtype=object)
    best = x - kk.dot(c)

    def key(v):
        a = [abs(int(t)) for t in v]
        return (max(a), sum(a), tuple(-int(t) for t in v))

    nk = kk.shape[1]
    if nk <= 6:
        improved = True
        while improved:
            improved = False
            for step in itertools.product((-1, 0, 1), repeat=nk):
                if not any(step):
                    continue
                cand = best + kk.dot(np.array(step, dtype=object))
                if key(cand) < key(best):
                    best, improved = cand, True
    return [int(v) for v in best]


def lattice_coordinates(basis: Sequence[Sequence[int]], v: Sequence[int]) -> list[int] | None:
    """Integer c with basis @ c = v for a square or tall full-rank basis, else None."""
    from .ratlinalg import solve

    sol = solve(basis, v)
    if sol is None:
        return None
    if any(Fraction(t).denominator != 1 for t in sol):
        return None
    check = [sum(int(b) * int(t) for b, t in zip(row, sol)) for row in basis]
    if check != [int(t) for t in v]:
        return None
    return [int(t) for t in sol]


def require_surjective(s: Sequence[Sequence[int]]):
    _, _, r = column_hnf(s)
    if r < len(s):
        raise NotSurjective("integer matrix does not have full row rank")
