"""The coefficient matrix L and its classification.

Zero/nonzero questions (ranks, degeneracy) are decided exactly: minors are
expanded as formal polynomials in the basis constants and their signs are
certified by interval evaluation.  Magnitudes (margins) are double-precision
singular values and only advisory.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import comb
from typing import Sequence

import numpy as np
import scipy.linalg

from . import ratlinalg
from .errors import DimensionError, RankDeficient
from .exact_reals import (
    RATIONAL,
    ConstantBasis,
    ExactScalar,
    certified_sign,
    formal_det,
    to_scalar,
)

EXHAUSTIVE_LIMIT = 2000


class LinearSystem:
    """An m x d matrix of ExactScalars over one ConstantBasis."""

    def __init__(self, rows: Sequence[Sequence], basis: ConstantBasis | None = None, require_wide: bool = True):
        if basis is None:
            basis = next(
                (x.basis for r in rows for x in r if isinstance(x, ExactScalar) and not x.is_rational()),
                RATIONAL,
            )
        self.basis = basis
        self.entries = tuple(tuple(to_scalar(x, basis) for x in r) for r in rows)
        self.m = len(self.entries)
        self.d = len(self.entries[0]) if self.m else 0
        if any(len(r) != self.d for r in self.entries):
            raise ValueError("ragged matrix")
        if require_wide and self.d < self.m + 1:
            raise DimensionError("need d >= m + 1")
        self._report = None
        self._float = None

    def __repr__(self):
        return f"LinearSystem(m={self.m}, d={self.d}, rows={self.row_strings()})"

    def __eq__(self, other):
        return isinstance(other, LinearSystem) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def row_strings(self) -> list[list[str]]:
        return [[x.format() for x in r] for r in self.entries]

    def float_matrix(self) -> np.ndarray:
        if self._float is None:
            self._float = np.array([[float(x) for x in r] for r in self.entries], dtype=float)
            self._float.setflags(write=False)
        return self._float

    def slices(self) -> list[list[list[Fraction]]]:
        """Rational coefficient matrices L_0 (constant part), L_1, ..., L_k."""
        k = len(self.basis)
        return [[[x.q[t] for x in r] for r in self.entries] for t in range(k + 1)]

    def norm_inf(self) -> float:
        """Upper endpoint of max |entry|."""
        best = 0.0
        for r in self.entries:
            for x in r:
                lo, hi = x.eval().floats()
                best = max(best, abs(lo), abs(hi))
        return best

    def columns(self, cols: Sequence[int]) -> list[list[ExactScalar]]:
        return [[r[j] for j in cols] for r in self.entries]

    def delete_columns(self, cols: Sequence[int]) -> list[list[ExactScalar]]:
        keep = [j for j in range(self.d) if j not in set(cols)]
        return self.columns(keep)

    def left_multiply(self, a: Sequence[Sequence]) -> "LinearSystem":
        """(rational matrix a) @ L."""
        rows = []
        for arow in a:
            row = []
            for j in range(self.d):
                acc = ExactScalar.rational(0, self.basis)
                for c, r in zip(arow, self.entries):
                    if c:
                        acc = acc + r[j] * Fraction(c)
                row.append(acc)
            rows.append(row)
        return LinearSystem(rows, self.basis, require_wide=False)

    def right_multiply(self, b: Sequence[Sequence]) -> "LinearSystem":
        """L @ (rational matrix b)."""
        ncols = len(b[0]) if b else 0
        rows = []
        for r in self.entries:
            row = []
            for j in range(ncols):
                acc = ExactScalar.rational(0, self.basis)
                for x, brow in zip(r, b):
                    if brow[j]:
                        acc = acc + x * Fraction(brow[j])
                row.append(acc)
            rows.append(row)
        return LinearSystem(rows, self.basis, require_wide=False)

    def apply(self, v: Sequence) -> list[ExactScalar]:
        """L v for a rational vector v."""
        out = []
        for r in self.entries:
            acc = ExactScalar.rational(0, self.basis)
            for x, c in zip(r, v):
                if c:
                    acc = acc + x * Fraction(c)
            out.append(acc)
        return out

    def classify(self) -> "ClassificationReport":
        if self._report is None:
            self._report = classify(self)
        return self._report

    def to_json(self) -> dict:
        return {"m": self.m, "d": self.d, "basis": self.basis.to_json(), "rows": self.row_strings()}

    @staticmethod
    def from_json(obj: dict) -> "LinearSystem":
        basis = ConstantBasis.from_json(obj.get("basis", {"constants": []}))
        sys = LinearSystem([[to_scalar(str(x), basis) for x in r] for r in obj["rows"]], basis)
        if obj.get("m", sys.m) != sys.m or obj.get("d", sys.d) != sys.d:
            raise ValueError("declared m, d do not match rows")
        return sys

    @staticmethod
    def load(path) -> "LinearSystem":
        with open(path) as fh:
            return LinearSystem.from_json(json.load(fh))


def _float_of(rows) -> np.ndarray:
    return np.array([[float(x) for x in r] for r in rows], dtype=float).reshape(len(rows), -1)


def minor_sign(rows: Sequence[Sequence[ExactScalar]], cols: Sequence[int], row_idx: Sequence[int] | None = None) -> int:
    if row_idx is None:
        row_idx = range(len(rows))
    sub = [[rows[i][j] for j in cols] for i in row_idx]
    return certified_sign(formal_det(sub))


def exact_rank(rows: Sequence[Sequence[ExactScalar]]) -> int:
    """Rank of a matrix of ExactScalars, certified through its minors."""
    m = len(rows)
    if m == 0:
        return 0
    n = len(rows[0])
    if n == 0:
        return 0
    if all(x.is_rational() for r in rows for x in r):
        return ratlinalg.rank([[x.q[0] for x in r] for r in rows])
    a = _float_of(rows)
    r = int(np.linalg.matrix_rank(a))

    def has_nonzero_minor(k: int) -> bool:
        if k == 0:
            return True
        cands = []
        for ri in itertools.combinations(range(m), k):
            for ci in itertools.combinations(range(n), k):
                cands.append((abs(np.linalg.det(a[np.ix_(ri, ci)])), ri, ci))
        cands.sort(key=lambda t: -t[0])
        return any(minor_sign(rows, ci, ri) != 0 for _, ri, ci in cands)

    while r > 0 and not has_nonzero_minor(r):
        r -= 1
    while r < min(m, n) and has_nonzero_minor(r + 1):
        r += 1
    return r


@dataclass(frozen=True)
class RankMatrix:
    columns: tuple[int, ...]
    det: float
    inverse_norm: float


def rank_matrix(L: LinearSystem, exclude_column: int | None = None) -> RankMatrix:
    """Columns of an m x m submatrix with maximal |det| (0-based column indices).

    Exhaustive when C(d', m) <= 2000, otherwise column-pivoted QR.  The
    returned submatrix is certified nonsingular.
    """
    cols = [j for j in range(L.d) if j != exclude_column]
    a = L.float_matrix()
    m = L.m
    if comb(len(cols), m) <= EXHAUSTIVE_LIMIT:
        cands = [(abs(np.linalg.det(a[:, list(s)])), s) for s in itertools.combinations(cols, m)]
        order = sorted(range(len(cands)), key=lambda i: (-cands[i][0], i))
        for i in order:
            det, s = cands[i]
            if minor_sign(L.entries, s) != 0:
                break
        else:
            raise RankDeficient("no m independent columns")
    else:
        sub = a[:, cols]
        _, _, piv = scipy.linalg.qr(sub, pivoting=True)
        s = tuple(sorted(cols[p] for p in piv[:m]))
        if minor_sign(L.entries, s) == 0:
            raise RankDeficient("greedy pivoting found no independent columns")
        det = abs(np.linalg.det(a[:, list(s)]))
    mm = a[:, list(s)]
    inv_norm = float(np.abs(np.linalg.inv(mm)).sum(axis=1).max())
    return RankMatrix(tuple(s), float(det), inv_norm)


def sigma_min(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    sv = np.linalg.svd(a, compute_uv=False)
    k = min(a.shape)
    return float(sv[k - 1]) if len(sv) >= k else 0.0


def pair_deletion_margins(L: LinearSystem) -> list[tuple[tuple[int, int], float]]:
    """For each column pair, sigma_min of L with that pair removed (exactly 0 on rank drop)."""
    if L.d < L.m + 2:
        raise DimensionError("pair deletion needs d >= m + 2")
    out = []
    a = L.float_matrix()
    for pair in itertools.combinations(range(L.d), 2):
        keep = [j for j in range(L.d) if j not in pair]
        rows = L.columns(keep)
        if exact_rank(rows) < L.m:
            out.append((pair, 0.0))
        else:
            out.append((pair, sigma_min(a[:, keep])))
    return out


def dual_degeneracy_margin(L: LinearSystem) -> float:
    """min over column pairs of sigma_min(L without the pair); 0 iff L is dually degenerate."""
    return min(s for _, s in pair_deletion_margins(L))


def rational_structure(L: LinearSystem) -> tuple[int, list[list[Fraction]] | None, Fraction]:
    """Rational dimension u, rational map Theta (u x m) and its complexity.

    Theta spans {theta : theta . L_i = 0 for every irrational slice L_i}.  Each
    basis row is taken primitive-integral and then scaled by the least
    positive integer making theta . L_0 integral.
    """
    sl = L.slices()
    irr = [s for s in sl[1:] if any(x != 0 for r in s for x in r)]
    stacked = [sum((s[i] for s in irr), []) for i in range(L.m)] if irr else []
    if stacked:
        w = ratlinalg.left_nullspace(stacked, L.m)
    else:
        w = [[Fraction(int(i == j)) for j in range(L.m)] for i in range(L.m)]
    u = len(w)
    if u == 0:
        return 0, None, Fraction(0)
    theta = []
    for v in w:
        p = ratlinalg.primitive(v)
        img = ratlinalg.matvec(ratlinalg.transpose(sl[0]), p)
        t = ratlinalg.common_denominator(img)
        theta.append([Fraction(t * x) for x in p])
    complexity = max(abs(x) for r in theta for x in r)
    return u, theta, complexity


@dataclass(frozen=True)
class ClassificationReport:
    m: int
    d: int
    rank: int
    rank_margin: float
    global_rank_margin: float
    dual_degeneracy_margin: float | None
    rank_matrix_columns: tuple[int, ...] | None
    rational_dimension: int
    rational_map: tuple[tuple[Fraction, ...], ...] | None
    rational_complexity: Fraction
    norm_inf: float
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def purely_irrational(self) -> bool:
        return self.rational_dimension == 0

    def to_json(self) -> dict:
        out = asdict(self)
        out["rational_map"] = (
            None if self.rational_map is None else [[str(x) for x in r] for r in self.rational_map]
        )
        out["rational_complexity"] = str(self.rational_complexity)
        out["rank_matrix_columns"] = None if self.rank_matrix_columns is None else list(self.rank_matrix_columns)
        out["purely_irrational"] = self.purely_irrational
        out["notes"] = list(self.notes)
        return out


def classify(L: LinearSystem) -> ClassificationReport:
    a = L.float_matrix()
    rk = exact_rank(L.entries)
    notes = []
    if rk < L.m:
        return ClassificationReport(L.m, L.d, rk, 0.0, 0.0, None, None, 0, None, Fraction(0), L.norm_inf(), ("rank deficient",))
    rank_margin = sigma_min(a)
    glob = []
    for j in range(L.d):
        keep = [c for c in range(L.d) if c != j]
        glob.append(0.0 if exact_rank(L.columns(keep)) < L.m else sigma_min(a[:, keep]))
    ddm = dual_degeneracy_margin(L) if L.d >= L.m + 2 else None
    if ddm is None:
        notes.append("d < m + 2: dual degeneracy margin undefined")
    rm = rank_matrix(L)
    u, theta, cx = rational_structure(L)
    return ClassificationReport(
        m=L.m,
        d=L.d,
        rank=rk,
        rank_margin=rank_margin,
        global_rank_margin=min(glob),
        dual_degeneracy_margin=ddm,
        rank_matrix_columns=rm.columns,
        rational_dimension=u,
        rational_map=None if theta is None else tuple(tuple(r) for r in theta),
        rational_complexity=cx,
        norm_inf=L.norm_inf(),
        notes=tuple(notes),
    )
