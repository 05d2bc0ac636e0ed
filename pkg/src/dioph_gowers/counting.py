"""Weighted solution counts of ||L n|| <= eps style inequalities.

Every count here is a sum over integer points x in [1, N]^d (the f_j vanish
elsewhere) of prod_j f_j(x_j) * F(x) * G(image).  Membership of the image in a
sharp cutoff is decided exactly: a float evaluation with a rigorous error
bound settles almost every point, and the rest are re-decided with exact
rational arithmetic or certified interval signs.  Points that stay undecided
at the highest precision are included and tallied in boundary_ambiguous.

Sums are accumulated with math.fsum, which is correctly rounded, so results
do not depend on block order or thread count.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.optimize

from .cutoffs import BoxCutoff, CutoffSpec, ImageCutoff, SharpBox
from .errors import AmbiguousZero, BudgetExceeded, DimensionError
from .exact_reals import ExactScalar, FormalPoly, as_fraction, certified_sign
from .linear_systems import LinearSystem, rank_matrix
from .weights import WeightFunction

BRUTE_BUDGET = 10**9
TAIL_BLOCK = 4096
MAX_CANDIDATES = 1 << 21
_UNIT = 2.0**-53


@dataclass(frozen=True)
class CountResult:
    raw_sum: float
    normalized: float
    solutions_visited: int
    boundary_ambiguous: int
    method: str
    candidates: int = 0

    def to_json(self) -> dict:
        return dict(self.__dict__)


# --- exact decision kernel ----------------------------------------------------


class AffineForms:
    """Constraints sum_j a_rj x_j + b_r <= 0 with ExactScalar a, b over one basis.

    Stored as integer tensors after clearing a positive denominator per row:
    coef[r, j, k] is the coefficient of basis constant k (k = 0 is 1) on x_j.
    """

    def __init__(self, rows: Sequence[tuple[Sequence[ExactScalar], ExactScalar]], basis):
        self.basis = basis
        self.n_forms = len(rows)
        self.dim = len(rows[0][0]) if rows else 0
        k = 1 + len(basis)
        coef = np.zeros((self.n_forms, self.dim, k), dtype=object)
        self.const_exact: list[list[Fraction]] = []
        for r, (a, b) in enumerate(rows):
            den = math.lcm(1, *(c.denominator for x in a for c in x.q))
            for j, x in enumerate(a):
                for t in range(k):
                    coef[r, j, t] = int(x.q[t] * den)
            self.const_exact.append([c * den for c in b.q])
        if coef.size and int(np.abs(coef).max()) >= 2**62:
            raise BudgetExceeded("coefficients too large for int64 evaluation")
        self.coef = coef.astype(np.int64)
        self.const = np.array([[float(c) for c in row] for row in self.const_exact], dtype=float).reshape(self.n_forms, k)
        self.cf = np.array(basis.floats, dtype=float)
        self._amax = int(np.abs(self.coef).max(initial=0))

    @staticmethod
    def from_constraints(linear: Sequence[Sequence[ExactScalar]], A, offset, bound, basis) -> "AffineForms":
        """Forms for A (linear x) + offset - bound <= 0; linear is the m x h image map."""
        m = len(linear)
        h = len(linear[0]) if m else 0
        rows = []
        for i, arow in enumerate(A):
            a = []
            for j in range(h):
                acc = ExactScalar.rational(0, basis)
                for r in range(m):
                    if arow[r] != 0:
                        acc = acc + linear[r][j] * arow[r]
                a.append(acc)
            b = ExactScalar.rational(-as_fraction(bound[i]), basis)
            if offset is not None:
                b = b + offset[i]
            rows.append((a, b))
        return AffineForms(rows, basis)

    def decide(self, x: np.ndarray) -> tuple[np.ndarray, int]:
        """Boolean mask of points satisfying every form, and the ambiguous tally."""
        x = np.asarray(x, dtype=np.int64)
        ok = np.ones(x.shape[0], dtype=bool)
        if x.shape[0] == 0:
            return ok, 0
        if self._amax * self.dim * int(np.abs(x).max(initial=0)) >= 2**53:
            raise BudgetExceeded("integer evaluation would lose exactness")
        ambiguous = 0
        k = self.cf.size
        acf = np.abs(self.cf)
        for r in range(self.n_forms):
            idx = np.flatnonzero(ok)
            if idx.size == 0:
                break
            v = x[idx] @ self.coef[r]
            vf = v.astype(float)
            # every term carries at most a few rounding errors of relative size 2^-53
            val = (vf + self.const[r]) @ self.cf
            mag = (np.abs(vf) + np.abs(self.const[r])) @ acf
            tol = 4.0 * (k + 5) * _UNIT * mag + 1e-300
            fail = val > tol
            unsure = np.flatnonzero(~fail & ~(val < -tol))
            for p in unsure:
                s, amb = self._exact_sign(v[p], r)
                ambiguous += amb
                fail[p] = s > 0
            ok[idx[fail]] = False
        return ok, ambiguous

    def _exact_sign(self, v: np.ndarray, r: int) -> tuple[int, int]:
        q = [int(c) + b for c, b in zip(v, self.const_exact[r])]
        if not any(q[1:]):
            return (q[0] > 0) - (q[0] < 0), 0
        try:
            return certified_sign(FormalPoly.from_scalar(ExactScalar(q, self.basis))), 0
        except AmbiguousZero:
            return 0, 1


# --- weights and solution sets -----------------------------------------------


def _weight_arrays(fs, d: int, n: int) -> list[np.ndarray]:
    if fs is None or (isinstance(fs, str) and fs == "ones"):
        return [np.concatenate(([0.0], np.ones(n))) for _ in range(d)]
    fs = list(fs)
    if len(fs) != d:
        raise DimensionError(f"expected {d} weight functions, got {len(fs)}")
    out = []
    for f in fs:
        if not isinstance(f, WeightFunction):
            f = WeightFunction(np.asarray(f, dtype=float), max(1.0, float(np.max(np.abs(f), initial=0))))
        if f.n_max != n:
            raise DimensionError("weight function length differs from N")
        out.append(f.padded())
    return out


def weighted_total(points: np.ndarray, weights: np.ndarray | None, arrays: Sequence[np.ndarray]) -> float:
    """fsum over points of weight * prod_j f_j(x_j); zero outside [1, N]."""
    if points.shape[0] == 0:
        return 0.0
    prod = np.ones(points.shape[0]) if weights is None else np.array(weights, dtype=float)
    n = arrays[0].size - 1
    inside = np.all((points >= 1) & (points <= n), axis=1)
    for j, a in enumerate(arrays):
        col = np.where(inside, points[:, j], 0)
        prod = prod * a[col]
    return math.fsum(prod[inside])


@dataclass
class SolutionSet:
    """Points x in [1, N]^d with nonzero cutoff weight, reusable across weightings."""

    points: np.ndarray
    weights: np.ndarray | None
    n: int
    norm_exponent: int
    boundary_ambiguous: int
    candidates: int
    method: str

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def weigh(self, fs=None) -> CountResult:
        arrays = _weight_arrays(fs, self.points.shape[1], self.n)
        raw = weighted_total(self.points, self.weights, arrays)
        return CountResult(raw, raw / float(self.n) ** self.norm_exponent, len(self), self.boundary_ambiguous, self.method, self.candidates)

    def raw(self, fs=None) -> float:
        return weighted_total(self.points, self.weights, _weight_arrays(fs, self.points.shape[1], self.n))


# --- cutoff plumbing -----------------------------------------------------------


def _image_constraints(cutoff: CutoffSpec, m: int):
    g = cutoff.G
    cons = g.constraints(m)
    if cons is None:
        box = BoxCutoff(as_fraction(g.eps))
        cons = box.constraints(m)
    return cons


def _point_weights(cutoff: CutoffSpec, x: np.ndarray, y: np.ndarray | None, n: int) -> np.ndarray | None:
    w = None
    fw = cutoff.F.weight(x.astype(float), n) if not isinstance(cutoff.F, SharpBox) else None
    if fw is not None:
        w = fw
    gw = cutoff.G.weight(y) if y is not None else None
    if gw is not None:
        w = gw if w is None else w * gw
    return w


def _as_cutoff(cutoff, eps) -> CutoffSpec:
    if cutoff is None:
        if eps is None:
            raise ValueError("give a cutoff or eps")
        return CutoffSpec.box(eps)
    if isinstance(cutoff, ImageCutoff):
        return CutoffSpec(SharpBox(), cutoff)
    return cutoff


def _product_grid(widths: Sequence[int]) -> np.ndarray:
    if not widths:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(*(range(w) for w in widths))), dtype=np.int64).reshape(-1, len(widths))


# --- brute force oracle -------------------------------------------------------


def _brute_decide(L: LinearSystem, cons, pts: np.ndarray, a_float: np.ndarray) -> tuple[np.ndarray, int]:
    # Float test with a generous margin, exact ExactScalar arithmetic otherwise.
    lf = L.float_matrix()
    y = pts.astype(float) @ lf.T
    A = np.array([[float(c) for c in r] for r in cons.A], dtype=float)
    b = np.array([float(c) for c in cons.bound], dtype=float)
    off = np.zeros(len(cons.bound)) if cons.offset is None else np.array([float(o) for o in cons.offset])
    s = y @ A.T + off - b
    scale = 1.0 + np.abs(y).max(axis=1, initial=0)[:, None] * np.abs(A).sum(axis=1)[None, :] + np.abs(b) + np.abs(off)
    margin = 1e-9 * scale
    ok = np.all(s < -margin, axis=1)
    bad = np.any(s > margin, axis=1)
    ambiguous = 0
    for p in np.flatnonzero(~ok & ~bad):
        img = L.apply([int(v) for v in pts[p]])
        good = True
        for i, arow in enumerate(cons.A):
            val = ExactScalar.rational(-cons.bound[i], L.basis)
            for r, c in enumerate(arow):
                if c != 0:
                    val = val + img[r] * c
            if cons.offset is not None:
                val = val + cons.offset[i]
            if val.is_rational():
                sgn = (val.q[0] > 0) - (val.q[0] < 0)
            else:
                try:
                    sgn = certified_sign(FormalPoly.from_scalar(val))
                except AmbiguousZero:
                    ambiguous += 1
                    sgn = 0
            if sgn > 0:
                good = False
                break
        ok[p] = good
    return ok, ambiguous


def brute_solutions(L: LinearSystem, N: int, cutoff: CutoffSpec | None = None, eps=None) -> SolutionSet:
    """Every point of [N]^d tested directly (no rank-matrix split)."""
    cutoff = _as_cutoff(cutoff, eps)
    d, m = L.d, L.m
    if N**d > BRUTE_BUDGET:
        raise BudgetExceeded(f"N^d = {N**d} exceeds the brute-force guard")
    cons = _image_constraints(cutoff, m)
    lf = L.float_matrix()
    total = N**d
    chunk = 1 << 16
    pts_out, w_out = [], []
    ambiguous = 0
    for start in range(0, total, chunk):
        lin = np.arange(start, min(total, start + chunk), dtype=np.int64)
        pts = np.stack(np.unravel_index(lin, (N,) * d), axis=1).astype(np.int64) + 1
        ok, amb = _brute_decide(L, cons, pts, lf)
        ambiguous += amb
        sel = pts[ok]
        w = _point_weights(cutoff, sel, sel.astype(float) @ lf.T, N)
        if w is not None:
            keep = w != 0
            sel, w = sel[keep], w[keep]
            w_out.append(w)
        pts_out.append(sel)
    pts = np.concatenate(pts_out) if pts_out else np.zeros((0, d), np.int64)
    w = np.concatenate(w_out) if w_out else None
    return SolutionSet(pts, w, N, d - m, ambiguous, total, "brute")


def count_brute(L: LinearSystem, N: int, cutoff: CutoffSpec | None = None, fs=None, eps=None) -> CountResult:
    """Full d-fold loop over [N]^d accumulating prod f_j(n_j) F(n) G(L n)."""
    return brute_solutions(L, N, cutoff, eps).weigh(fs)


# --- fast enumerator -------------------------------------------------------


def _lp_box(a_ub: np.ndarray, b_ub: np.ndarray, dim: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = np.empty(dim), np.empty(dim)
    for i in range(dim):
        c = np.zeros(dim)
        c[i] = 1.0
        for sgn, store in ((1.0, lo), (-1.0, hi)):
            res = scipy.optimize.linprog(sgn * c, A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * dim, method="highs")
            if res.status == 2:
                return np.zeros(dim), -np.ones(dim)
            if res.status != 0:
                raise DimensionError("variable region is unbounded")
            store[i] = sgn * res.fun
    return lo, hi


@dataclass
class _Plan:
    lsys: LinearSystem  # image map in the enumeration variable
    xi: np.ndarray  # d x h
    shift: np.ndarray  # d
    n: int
    heads: tuple[int, ...]
    tails: tuple[int, ...]
    minv: np.ndarray
    ylo: np.ndarray
    yhi: np.ndarray
    var_lo: np.ndarray
    var_hi: np.ndarray
    forms: AffineForms
    identity: bool


def _make_plan(lsys: LinearSystem, xi, shift, N: int, cutoff: CutoffSpec) -> _Plan:
    m, h = lsys.m, lsys.d
    xi = np.asarray(xi, dtype=np.int64)
    shift = np.asarray(shift, dtype=np.int64)
    identity = xi.shape[0] == xi.shape[1] and np.array_equal(xi, np.eye(h, dtype=np.int64)) and not shift.any()
    rm = rank_matrix(lsys)
    heads = rm.columns
    tails = tuple(j for j in range(h) if j not in heads)
    lf = lsys.float_matrix()
    minv = np.linalg.inv(lf[:, list(heads)])
    cons = _image_constraints(cutoff, m)
    forms = AffineForms.from_constraints(lsys.entries, cons.A, cons.offset, cons.bound, lsys.basis)
    ylo, yhi = cutoff.G.bounding_box(m)
    ylo, yhi = np.asarray(ylo, float), np.asarray(yhi, float)
    if identity:
        var_lo, var_hi = np.ones(h, dtype=np.int64), np.full(h, N, dtype=np.int64)
    else:
        a_ub = np.vstack((xi, -xi, lf, -lf)).astype(float)
        b_ub = np.concatenate((N - shift, shift - 1, yhi, -ylo)).astype(float)
        lo, hi = _lp_box(a_ub, b_ub, h)
        pad = 1e-6 * (1.0 + np.abs(lo) + np.abs(hi))
        var_lo = np.ceil(lo - pad).astype(np.int64)
        var_hi = np.floor(hi + pad).astype(np.int64)
    return _Plan(lsys, xi, shift, N, heads, tails, minv, ylo, yhi, var_lo, var_hi, forms, identity)


def _tail_block(plan: _Plan, tails_pts: np.ndarray):
    """Candidate points (in the enumeration variable) for one block of tails, exactly filtered."""
    lf = plan.lsys.float_matrix()
    heads, tails = list(plan.heads), list(plan.tails)
    ymid = (plan.ylo + plan.yhi) / 2
    yhalf = (plan.yhi - plan.ylo) / 2
    center = (ymid[None, :] - tails_pts.astype(float) @ lf[:, tails].T) @ plan.minv.T
    rad = np.abs(plan.minv) @ np.maximum(yhalf, 0) + 1.0
    start = np.maximum(np.ceil(center - rad).astype(np.int64), plan.var_lo[heads])
    stop = np.minimum(np.floor(center + rad).astype(np.int64), plan.var_hi[heads])
    widths = [int(np.floor(2 * r)) + 2 for r in rad]
    grid = _product_grid(widths)
    out_pts, amb, cand = [], 0, 0
    step = max(1, MAX_CANDIDATES // max(1, grid.shape[0]))
    for s in range(0, tails_pts.shape[0], step):
        st, sp, tp = start[s : s + step], stop[s : s + step], tails_pts[s : s + step]
        hv = st[:, None, :] + grid[None, :, :]
        mask = np.all(hv <= sp[:, None, :], axis=2)
        bi, gi = np.nonzero(mask)
        if bi.size == 0:
            continue
        pts = np.empty((bi.size, plan.lsys.d), dtype=np.int64)
        pts[:, heads] = hv[bi, gi]
        pts[:, tails] = tp[bi]
        if not plan.identity:
            x = pts @ plan.xi.T + plan.shift
            inside = np.all((x >= 1) & (x <= plan.n), axis=1)
            pts = pts[inside]
        cand += pts.shape[0]
        ok, a = plan.forms.decide(pts)
        amb += a
        out_pts.append(pts[ok])
    pts = np.concatenate(out_pts) if out_pts else np.zeros((0, plan.lsys.d), dtype=np.int64)
    return pts, amb, cand


def _iter_tail_blocks(plan: _Plan) -> Iterable[np.ndarray]:
    tails = list(plan.tails)
    lo = plan.var_lo[tails]
    hi = plan.var_hi[tails]
    if np.any(hi < lo):
        return
    shape = tuple(int(v) for v in hi - lo + 1)
    total = int(np.prod(shape)) if shape else 1
    for s in range(0, total, TAIL_BLOCK):
        lin = np.arange(s, min(total, s + TAIL_BLOCK), dtype=np.int64)
        if shape:
            yield np.stack(np.unravel_index(lin, shape), axis=1).astype(np.int64) + lo
        else:
            yield np.zeros((lin.size, 0), dtype=np.int64)


def _collect(plan: _Plan, cutoff: CutoffSpec, norm_exponent: int, method: str, workers: int | None) -> SolutionSet:
    blocks = _iter_tail_blocks(plan)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda t: _tail_block(plan, t), blocks))
    else:
        results = [_tail_block(plan, t) for t in blocks]
    h = plan.lsys.d
    pts = np.concatenate([r[0] for r in results]) if results else np.zeros((0, h), np.int64)
    amb = sum(r[1] for r in results)
    cand = sum(r[2] for r in results)
    x = pts if plan.identity else pts @ plan.xi.T + plan.shift
    y = pts.astype(float) @ plan.lsys.float_matrix().T
    w = _point_weights(cutoff, x, y, plan.n)
    if w is not None:
        keep = w != 0
        x, w = x[keep], w[keep]
    return SolutionSet(x.astype(np.int64), w, plan.n, norm_exponent, amb, cand, method)


def enumerate_solutions(L: LinearSystem, N: int, cutoff: CutoffSpec | None = None, eps=None, workers: int | None = None) -> SolutionSet:
    """All n in [1, N]^d with nonzero F(n) G(L n), via the rank-matrix split."""
    cutoff = _as_cutoff(cutoff, eps)
    if L.m == 0:
        raise DimensionError("need at least one inequality")
    h = L.d
    plan = _make_plan(L, np.eye(h, dtype=np.int64), np.zeros(h, np.int64), N, cutoff)
    return _collect(plan, cutoff, L.d - L.m, "fast", workers)


def count_fast(L: LinearSystem, N: int, cutoff: CutoffSpec | None = None, fs=None, eps=None, workers: int | None = None) -> CountResult:
    """Same value as count_brute; tail variables are enumerated and heads solved for."""
    return enumerate_solutions(L, N, cutoff, eps, workers).weigh(fs)


def enumerate_generalized(L_prime: LinearSystem, xi, shift, N: int, cutoff: CutoffSpec | None = None, eps=None, workers: int | None = None) -> SolutionSet:
    """Points x = Xi n + shift in [1, N]^d with G(L' n) != 0.

    The variable cutoff F of the generalized count is taken in pulled-back
    form F_shift(n) = F(Xi n + shift), that is F is evaluated on x.
    """
    cutoff = _as_cutoff(cutoff, eps)
    xi = np.asarray(xi, dtype=np.int64)
    if xi.ndim != 2 or xi.shape[1] != L_prime.d:
        raise DimensionError("Xi must be d x h with h the number of columns of L'")
    if np.linalg.matrix_rank(xi.astype(float)) < xi.shape[1]:
        raise DimensionError("Xi must be injective")
    plan = _make_plan(L_prime, xi, np.asarray(shift, dtype=np.int64), N, cutoff)
    return _collect(plan, cutoff, L_prime.d - L_prime.m, "fast", workers)


def count_generalized(L_prime: LinearSystem, xi, shift, N: int, cutoff: CutoffSpec | None = None, fs=None, eps=None, workers: int | None = None) -> CountResult:
    """sum over n in Z^h of prod f_j(xi_j(n) + shift_j) F(n) G(L' n), over N^(h - m')."""
    return enumerate_generalized(L_prime, xi, shift, N, cutoff, eps, workers).weigh(fs)
