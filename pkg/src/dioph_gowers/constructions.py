"""Adversarial functions for systems close to the dual degeneracy variety.

If some combination a of the rows of L nearly annihilates every column but
two, every solution of |Ln|_inf <= eps obeys |b1 n_p + b2 n_q| <= B with
B = |a|_1 eps + N sum_j |a . L_j| over the other columns.  This pins n_q
to a window around a fixed multiple of n_p, and the block constructions
below exploit that rigidity: f_1 and f_2 look random at every Gowers scale
but their solution count is far from the one predicted by their means.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .counting import enumerate_solutions
from .errors import DegenerateInterval, DimensionError, NoNearDegeneracy, ParameterConflict, UnreachableCase
from .exact_reals import E as E_CONST
from .exact_reals import PI, ConstantBasis, ExactScalar, as_fraction, sqrt_const
from .gowers import gowers_interval
from .linear_systems import LinearSystem, pair_deletion_margins
from .ratlinalg import left_nullspace
from .weights import WeightFunction

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.05
DEFAULT_C1 = 0.05
STRIP_CHUNK = 1 << 21


# --- the degeneracy direction -------------------------------------------------


@dataclass(frozen=True)
class DegeneracyDirection:
    a: tuple[float, ...]  # |a|_inf = 1 = a[lead_row]
    lead_row: int
    b1: float
    b2: float
    column_order: tuple[int, ...]  # the free pair (p, q) first, 0-based
    eta: float  # max over the other columns of |a . L_j|
    margin: float  # sigma_min of L with the free pair deleted
    residuals: tuple[float, ...]  # |a . L_j| for the other columns, in column_order

    @property
    def free_pair(self) -> tuple[int, int]:
        return self.column_order[0], self.column_order[1]

    @property
    def degenerate_columns(self) -> tuple[int, ...]:
        return tuple(sorted(self.column_order[2:]))

    def strip_bound(self, n: int, eps) -> float:
        """B with |b1 n_p + b2 n_q| <= B for every solution in [1, N]^d."""
        return float(np.abs(self.a).sum()) * float(eps) + n * float(sum(self.residuals))

    def constant_c1(self, n: int, eps) -> float:
        """C1 with |b1 n_p + b2 n_q| <= C1 eta N (infinite when eta = 0)."""
        if self.eta == 0:
            return math.inf
        return self.strip_bound(n, eps) / (self.eta * n)

    def case(self, c1: float = DEFAULT_C1) -> int:
        big1, big2 = abs(self.b1) >= c1, abs(self.b2) >= c1
        if not big1 and not big2:
            return 1
        if big1 and big2:
            return 2 if self.b1 * self.b2 > 0 else 3
        return 4

    def to_json(self) -> dict:
        return {
            "a": list(self.a),
            "lead_row": self.lead_row + 1,
            "b1": self.b1,
            "b2": self.b2,
            "column_order": [j + 1 for j in self.column_order],
            "free_pair": [j + 1 for j in self.free_pair],
            "degenerate_columns": [j + 1 for j in self.degenerate_columns],
            "eta": self.eta,
            "margin": self.margin,
        }


def _exact_left_null(L: LinearSystem, cols) -> list[Fraction] | None:
    """Rational a with a . L_j = 0 exactly for j in cols, if the columns are rational."""
    sub = [[L.entries[i][j] for j in cols] for i in range(L.m)]
    if not all(x.is_rational() for r in sub for x in r):
        return None
    rows = [[x.rational_value() for x in r] for r in sub]
    null = left_nullspace(rows, L.m)
    return list(null[0]) if null else None


def detect_direction(L: LinearSystem, threshold: float = DEFAULT_THRESHOLD) -> DegeneracyDirection:
    """Nearest (proxy) point of the dual degeneracy variety.

    The free pair is the column pair whose deletion leaves the smallest
    sigma_min; a is the left singular vector of that value, rescaled so its
    largest entry is 1.  Columns are ordered so that b1 >= |b2| and, in the
    opposite-sign case, b1 > 0 > b2.
    """
    if L.d < L.m + 2:
        raise DimensionError("need d >= m + 2")
    margins = pair_deletion_margins(L)
    pair, margin = min(margins, key=lambda t: (t[1], t[0]))
    if margin > threshold:
        raise NoNearDegeneracy(f"dual degeneracy margin {margin:.3g} exceeds {threshold}")
    lf = L.float_matrix()
    rest = [j for j in range(L.d) if j not in pair]
    a = None
    if margin == 0.0:
        exact = _exact_left_null(L, rest)
        if exact is not None:
            a = np.array([float(x) for x in exact])
    if a is None:
        u, _, _ = np.linalg.svd(lf[:, rest])
        a = u[:, -1]
    lead = int(np.argmax(np.abs(a)))
    a = a / a[lead]
    resid = np.abs(a @ lf[:, rest])
    if margin == 0.0:
        resid[resid < 1e-14 * max(1.0, float(np.abs(lf).max()))] = 0.0
    b = a @ lf[:, list(pair)]
    p, q = pair
    b1, b2 = float(b[0]), float(b[1])
    if abs(b2) > abs(b1):
        p, q, b1, b2 = q, p, b2, b1
    if b1 < 0:
        a, b1, b2 = -a, -b1, -b2
    order = (p, q) + tuple(rest)
    return DegeneracyDirection(tuple(float(x) for x in a), lead, b1, b2, order, float(resid.max(initial=0.0)), float(margin), tuple(float(x) for x in resid))


# --- solution weights on the free pair ----------------------------------------


@dataclass(frozen=True)
class PairWeights:
    """W(n_p, n_q) = number of solutions with the given free-pair coordinates."""

    n: int
    first: np.ndarray
    second: np.ndarray
    weight: np.ndarray
    norm_exponent: int
    method: str
    ambiguous: int = 0

    @property
    def total(self) -> int:
        return int(self.weight.sum())

    def marginal_first(self) -> np.ndarray:
        """u(k) for k = 0..N (index 0 unused)."""
        return np.bincount(self.first, weights=self.weight, minlength=self.n + 1)

    def count(self, f1=None, f2=None) -> float:
        """T(f1, f2, 1, ..., 1) with f1, f2 on the free pair (None means 1)."""
        w = self.weight.astype(float)
        if f1 is not None:
            w = w * _values(f1, self.n)[self.first]
        if f2 is not None:
            w = w * _values(f2, self.n)[self.second]
        return math.fsum(w) / float(self.n) ** self.norm_exponent

    def unit_count(self) -> float:
        return self.total / float(self.n) ** self.norm_exponent


def _values(f, n: int) -> np.ndarray:
    """Padded value array v with v[k] = f(k) for k = 1..N."""
    if isinstance(f, WeightFunction):
        return f.padded()
    v = np.asarray(f, dtype=float).reshape(-1)
    if v.size != n:
        raise ValueError("weight length must be N")
    return np.concatenate(([0.0], v))


def _aggregate(first: np.ndarray, second: np.ndarray, n: int, counts: np.ndarray | None = None):
    key = first.astype(np.int64) * (n + 1) + second.astype(np.int64)
    keys, inv = np.unique(key, return_inverse=True)
    w = np.bincount(inv, weights=counts, minlength=keys.size) if counts is not None else np.bincount(inv, minlength=keys.size)
    return keys, np.rint(w).astype(np.int64)


def _exact_inside(L: LinearSystem, point, eps: Fraction) -> bool:
    for row in L.entries:
        val = ExactScalar.rational(0, L.basis)
        for x, k in zip(row, point):
            if k:
                val = val + x * int(k)
        if val.compare(eps) > 0 or (-val).compare(eps) > 0:
            return False
    return True


def _strip_enumerate(L: LinearSystem, n: int, eps: Fraction, free_pair) -> PairWeights:
    """m = 2, d = 4: loop over two outer coordinates and solve for the other two.

    The solved pair is the column pair with the largest |det|; each outer
    pair leaves a box of half-width |K^-1| eps around K^-1 (-outer part)
    for the solved pair.  Float residuals decide except within a 1e-8 band
    around the boundary, where the exact scalars decide.
    """
    lf = L.float_matrix()
    e = float(eps)
    best = max(itertools.combinations(range(4), 2), key=lambda c: abs(np.linalg.det(lf[:, list(c)])))
    solved = list(best)
    outer = [j for j in range(4) if j not in solved]
    kinv = np.linalg.inv(lf[:, solved])
    half = np.abs(kinv).sum(axis=1) * e
    o2 = np.arange(1, n + 1, dtype=np.int64)
    step = max(1, STRIP_CHUNK // n)
    keys_all, w_all = [], []
    ambiguous = 0
    band = 1e-8
    for start in range(1, n + 1, step):
        o1 = np.arange(start, min(n, start + step - 1) + 1, dtype=np.int64)
        g1, g2 = np.meshgrid(o1, o2, indexing="ij")
        g1, g2 = g1.ravel(), g2.ravel()
        part = np.outer(g1, lf[:, outer[0]]) + np.outer(g2, lf[:, outer[1]])
        center = -part @ kinv.T
        lo = np.maximum(np.ceil(center - half - 1e-9), 1).astype(np.int64)
        hi = np.minimum(np.floor(center + half + 1e-9), n).astype(np.int64)
        width = hi - lo + 1
        ok = (width > 0).all(axis=1)
        if not ok.any():
            continue
        g1, g2, lo, width, part = g1[ok], g2[ok], lo[ok], width[ok], part[ok]
        for k0 in range(int(width[:, 0].max())):
            for k1 in range(int(width[:, 1].max())):
                sel = (k0 < width[:, 0]) & (k1 < width[:, 1])
                if not sel.any():
                    continue
                s0 = lo[sel, 0] + k0
                s1 = lo[sel, 1] + k1
                y = part[sel] + np.outer(s0, lf[:, solved[0]]) + np.outer(s1, lf[:, solved[1]])
                ay = np.abs(y).max(axis=1)
                inside = ay <= e - band
                near = np.abs(ay - e) < band
                pts = np.empty((inside.size, 4), dtype=np.int64)
                pts[:, outer[0]], pts[:, outer[1]] = g1[sel], g2[sel]
                pts[:, solved[0]], pts[:, solved[1]] = s0, s1
                if near.any():
                    for idx in np.nonzero(near)[0]:
                        inside[idx] = _exact_inside(L, pts[idx], eps)
                    ambiguous += int(near.sum())
                pts = pts[inside]
                if pts.size:
                    k, w = _aggregate(pts[:, free_pair[0]], pts[:, free_pair[1]], n)
                    keys_all.append(k)
                    w_all.append(w)
    if not keys_all:
        z = np.zeros(0, dtype=np.int64)
        return PairWeights(n, z, z, z, L.d - L.m, "strip", ambiguous)
    keys = np.concatenate(keys_all)
    ws = np.concatenate(w_all)
    uk, inv = np.unique(keys, return_inverse=True)
    w = np.rint(np.bincount(inv, weights=ws.astype(float))).astype(np.int64)
    return PairWeights(n, uk // (n + 1), uk % (n + 1), w, L.d - L.m, "strip", ambiguous)


def pair_weights(L: LinearSystem, n: int, eps, free_pair, method: str = "auto") -> PairWeights:
    """Solution weights on the free pair; 'strip' for 2 x 4 systems, else the generic enumerator."""
    eps = as_fraction(eps)
    if method == "auto":
        method = "strip" if (L.m, L.d) == (2, 4) else "generic"
    if method == "strip":
        if (L.m, L.d) != (2, 4):
            raise DimensionError("the strip enumerator handles 2 x 4 systems")
        return _strip_enumerate(L, n, eps, free_pair)
    if method != "generic":
        raise ValueError("method must be 'auto', 'strip' or 'generic'")
    sol = enumerate_solutions(L, n, eps=eps)
    pts = sol.points
    if pts.shape[0] == 0:
        z = np.zeros(0, dtype=np.int64)
        return PairWeights(n, z, z, z, sol.norm_exponent, "generic", sol.boundary_ambiguous)
    keys, w = _aggregate(pts[:, free_pair[0]], pts[:, free_pair[1]], n)
    return PairWeights(n, keys // (n + 1), keys % (n + 1), w, sol.norm_exponent, "generic", sol.boundary_ambiguous)


def strip_violation(direction: DegeneracyDirection, weights: PairWeights, eps) -> float:
    """max |b1 n_p + b2 n_q| / (eta N + eps |a|_1) over the solutions."""
    if weights.first.size == 0:
        return 0.0
    val = np.abs(direction.b1 * weights.first + direction.b2 * weights.second)
    scale = direction.eta * weights.n + float(eps) * float(np.abs(direction.a).sum())
    return float(val.max() / scale)


# --- the block constructions ----------------------------------------------------


@dataclass(frozen=True)
class BlockConstruction:
    case: int
    n: int
    x_offset: float
    eta: float
    C1: float
    C2: float
    delta: float
    p: float
    seed: int | None
    A: np.ndarray
    B: np.ndarray | None
    f1: WeightFunction
    f2: WeightFunction | None
    n_blocks: int = 0
    block_length: float = 0.0
    ratio: float = 1.0

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "N": self.n,
            "x_offset": self.x_offset,
            "eta": self.eta,
            "C1": self.C1,
            "C2": self.C2,
            "delta": self.delta,
            "p": self.p,
            "seed": self.seed,
            "n_blocks": self.n_blocks,
            "block_length": self.block_length,
            "ratio": self.ratio,
            "A_size": int(self.A.sum()),
            "B_size": None if self.B is None else int(self.B.sum()),
        }


def build_case2(n: int, eta: float, C1: float) -> BlockConstruction:
    """f1 = indicator of the integers in (C1 eta N, N].

    Every solution has n_p <= C1 eta N in the same-sign case, so
    T(f1, 1, ..., 1) = 0 while f1 - 1 has a tiny Gowers norm.
    """
    cut = C1 * eta * n if eta > 0 else 0.0
    if not cut < n:
        raise DegenerateInterval(f"C1 eta N = {cut:.4g} is not below N = {n}")
    start = math.floor(cut) + 1
    members = np.zeros(n, dtype=bool)
    members[start - 1 :] = True
    return BlockConstruction(2, n, 0.0, eta, C1, 0.0, 0.0, 1.0, None, members, None, WeightFunction.indicator(n, members), None)


def case2_constant(f1: WeightFunction, C1: float, eta: float, s: int = 1) -> float:
    """C2 = |f1 - 1|_{U^{s+1}[N]} / (C1 eta)^((s+2)/2^(s+1))."""
    norm = gowers_interval(f1.values - 1.0, s + 1).norm_value
    scale = (C1 * eta) ** ((s + 2) / 2 ** (s + 1))
    return norm / scale if scale > 0 else (0.0 if norm == 0 else math.inf)


@dataclass(frozen=True)
class BlockLayout:
    """Blocks I_i of [0, N) mod N and their dilates J_i = ratio I_i."""

    n: int
    n_blocks: int
    x_offset: float
    ratio: float
    delta: float

    @property
    def length(self) -> float:
        return self.n / self.n_blocks

    def _phase(self, t: np.ndarray) -> np.ndarray:
        return np.mod(t - self.x_offset, self.n)

    def block_first(self) -> np.ndarray:
        """Block index of each k in 0..N (index 0 unused)."""
        k = np.arange(self.n + 1, dtype=float)
        return np.minimum((self._phase(k) / self.length).astype(np.int64), self.n_blocks - 1)

    def block_second(self) -> np.ndarray:
        """Index i with k in J_i, for k in 0..N."""
        k = np.arange(self.n + 1, dtype=float) / self.ratio
        return np.minimum((self._phase(k) / self.length).astype(np.int64), self.n_blocks - 1)

    def central(self) -> np.ndarray:
        """Indicator of E_delta (the central 2 delta fraction of every block) on 0..N."""
        k = np.arange(self.n + 1, dtype=float)
        pos = np.mod(self._phase(k), self.length) / self.length
        out = np.abs(pos - 0.5) < self.delta
        out[0] = False
        return out


def choose_offset(layout: BlockLayout, u: np.ndarray, grid: int | None = None) -> tuple[float, float]:
    """Offset x in [0, block length) maximizing sum_n u(n) 1_E(n); returns (x, captured)."""
    if grid is None:
        grid = max(8, int(math.ceil(layout.length)))
    best = (-1.0, 0.0)
    for g in range(grid):
        x = layout.length * g / grid
        lay = BlockLayout(layout.n, layout.n_blocks, x, layout.ratio, layout.delta)
        cap = float(u[lay.central()].sum())
        if cap > best[0] + 1e-9:
            best = (cap, x)
    return best[1], best[0]


@dataclass(frozen=True)
class Case3Plan:
    """Parameters and layout of a Case 3 construction, shared by all trials."""

    direction: DegeneracyDirection
    layout: BlockLayout
    C1: float
    C2: float
    p: float
    captured: float
    first_block: np.ndarray
    second_block: np.ndarray

    def draw(self, seed: int, trial: int = 0) -> np.ndarray:
        rng = np.random.default_rng([seed, trial])
        return rng.random(self.layout.n_blocks) < self.p

    def sets(self, selected: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a = selected[self.first_block[1:]]
        b = selected[self.second_block[1:]]
        return a, b


def plan_case3(n: int, direction: DegeneracyDirection, eps=Fraction(1, 2), C2: float = 1.0, delta: float = 0.125, p: float | None = None, weights: PairWeights | None = None) -> Case3Plan:
    if direction.case() != 3:
        raise ParameterConflict("b1 and b2 are not of opposite signs")
    if direction.eta <= 0:
        raise ParameterConflict("eta = 0: blocks of length C1 C2 eta N are empty")
    if p is None:
        p = delta / 4
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    b1, b2 = direction.b1, abs(direction.b2)
    C1 = direction.constant_c1(n, eps)
    # blocks of length C1 C2 eta N with (C1 C2 eta)^-1 integral
    n_blocks = max(1, math.floor(1.0 / (C1 * C2 * direction.eta)))
    C2 = 1.0 / (n_blocks * C1 * direction.eta)
    bound = direction.strip_bound(n, eps)
    layout = BlockLayout(n, n_blocks, 0.0, b1 / b2, delta)
    # n_q |b2| / b1 = n_p + e with |e| <= B / b1 must stay in the block of n_p
    if (0.5 - delta) * layout.length <= bound / b1:
        raise ParameterConflict(f"delta = {delta} too large: need delta < 1/2 - 1/(b1 C2) = {0.5 - 1.0 / (b1 * C2):.4f}")
    captured = 0.0
    if weights is not None:
        x, captured = choose_offset(layout, weights.marginal_first())
        layout = BlockLayout(n, n_blocks, x, b1 / b2, delta)
    plan = Case3Plan(direction, layout, C1, C2, p, captured, layout.block_first(), layout.block_second())
    if weights is not None:
        _check_window(plan, weights)
    return plan


def _check_window(plan: Case3Plan, weights: PairWeights) -> None:
    central = plan.layout.central()
    hit = central[weights.first]
    bad = plan.first_block[weights.first[hit]] != plan.second_block[weights.second[hit]]
    if bad.any():
        raise ParameterConflict(f"{int(bad.sum())} solutions with n_p in E_delta leave the coupled block")


def build_case3(n: int, direction: DegeneracyDirection, C2: float = 1.0, delta: float = 0.125, p: float | None = None, seed: int = 0, eps=Fraction(1, 2), weights: PairWeights | None = None, trial: int = 0) -> BlockConstruction:
    """Coupled random blocks: J_i is in B exactly when I_i is in A, each with probability p."""
    plan = plan_case3(n, direction, eps, C2, delta, p, weights)
    a, b = plan.sets(plan.draw(seed, trial))
    lay = plan.layout
    return BlockConstruction(
        3, n, lay.x_offset, direction.eta, plan.C1, plan.C2, delta, plan.p, seed, a, b,
        WeightFunction.indicator(n, a), WeightFunction.indicator(n, b), lay.n_blocks, lay.length, lay.ratio,
    )


# --- Monte Carlo verdict ----------------------------------------------------------


@dataclass(frozen=True)
class Case3Trials:
    gaps: np.ndarray  # T(f1, f2, 1, ..) - T(p, p, 1, ..) per trial
    norms1: np.ndarray  # |f1 - p|_{U^{s+1}[N]}
    norms2: np.ndarray
    unit_count: float
    plan: Case3Plan

    @staticmethod
    def _lower(x: np.ndarray, z: float) -> float:
        return float(x.mean() - z * x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else float(x.mean())

    @staticmethod
    def _upper(x: np.ndarray, z: float) -> float:
        return float(x.mean() + z * x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else float(x.mean())

    def gap_lower(self, z: float = 1.645) -> float:
        return self._lower(self.gaps, z)

    def norm_upper(self, z: float = 1.645) -> float:
        return self._upper(self.norms1, z)

    def summary(self, z: float = 1.645) -> dict:
        d = self.plan.layout.delta
        eta = self.plan.direction.eta
        return {
            "trials": int(self.gaps.size),
            "T_ones": self.unit_count,
            "mean_gap": float(self.gaps.mean()),
            "gap_lower_95": self.gap_lower(z),
            "gap_target": 1.5 * d * self.plan.p * self.unit_count,
            "mean_norm_f1": float(self.norms1.mean()),
            "mean_norm_f2": float(self.norms2.mean()),
            "norm_f1_upper_95": self.norm_upper(z),
            "norm_over_sqrt_eta": float(self.norms1.mean()) / math.sqrt(eta),
            "norm_over_eta_quarter": float(self.norms1.mean()) / eta**0.25,
            "captured_fraction": self.plan.captured / max(1.0, self.unit_count * float(self.plan.layout.n) ** 2),
        }


def run_case3_trials(plan: Case3Plan, weights: PairWeights, trials: int = 200, seed: int = 0, s: int = 1) -> Case3Trials:
    """Per-trial seeds (seed, trial); the count is sel^T M sel over block pairs."""
    k = plan.layout.n_blocks
    i1 = plan.first_block[weights.first]
    i2 = plan.second_block[weights.second]
    mass = np.zeros((k, k))
    np.add.at(mass, (i1, i2), weights.weight.astype(float))
    scale = float(weights.n) ** weights.norm_exponent
    unit = weights.unit_count()
    p = plan.p
    gaps, n1, n2 = np.empty(trials), np.empty(trials), np.empty(trials)
    for t in range(trials):
        sel = plan.draw(seed, t).astype(float)
        gaps[t] = float(sel @ mass @ sel) / scale - p * p * unit
        a, b = plan.sets(sel > 0)
        n1[t] = gowers_interval(a - p, s + 1).norm_value
        n2[t] = gowers_interval(b - p, s + 1).norm_value
    return Case3Trials(gaps, n1, n2, unit, plan)


# --- the bad-behaviour family ------------------------------------------------------


def bad_behaviour_system(n: int, signed: bool = False) -> LinearSystem:
    """[[1 + 1/N, sqrt3 + N^-1/2, pi, sqrt2 - pi], [2, 2 sqrt3 + N^-1/2, -sqrt5, e]].

    This matrix has no solutions in [1, N]^4 at all: along the degenerate
    direction the first row forces n1 + sqrt3 n2 + 0.758 n3 ~ 0.  With
    signed=True the second column is negated, which keeps a, b1, b2 and
    eta and yields about N^2 solutions.
    """
    consts = [sqrt_const(2), sqrt_const(3), sqrt_const(5)]
    root = math.isqrt(n)
    if root * root != n:
        consts.append(sqrt_const(n, f"sqrtN{n}"))
    basis = ConstantBasis(consts + [PI, E_CONST], check_relations=False)
    one = ExactScalar.rational(1, basis)
    c = {x.name: ExactScalar.constant(x.name, basis) for x in basis.constants}
    inv_root = one * Fraction(1, root) if root * root == n else c[f"sqrtN{n}"] * Fraction(1, n)
    sign = -1 if signed else 1
    rows = [
        [one + Fraction(1, n), (c["sqrt3"] + inv_root) * sign, c["pi"], c["sqrt2"] - c["pi"]],
        [one * 2, (c["sqrt3"] * 2 + inv_root) * sign, -c["sqrt5"], c["e"]],
    ]
    return LinearSystem(rows, basis)


@lru_cache(maxsize=8)
def _cached_weights(L: LinearSystem, n: int, eps: Fraction, pair: tuple[int, int], method: str) -> PairWeights:
    return pair_weights(L, n, eps, pair, method)


@dataclass(frozen=True)
class ConverseReport:
    case: int
    direction: DegeneracyDirection
    construction: dict
    min_norm: float
    count_gap: float
    unit_count: float
    details: dict = field(default_factory=dict)
    note: str = (
        "H(rho) and E_rho(N) range over all admissible functions; this report gives the witness pair "
        "(small Gowers norm, large count deviation) and leaves the comparison to the reader"
    )

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "direction": self.direction.to_json(),
            "construction": self.construction,
            "min_norm": self.min_norm,
            "count_gap": self.count_gap,
            "T_ones": self.unit_count,
            "details": self.details,
            "note": self.note,
        }


def converse_verdict(L: LinearSystem, n: int, s: int = 1, eps=Fraction(1, 2), threshold: float = DEFAULT_THRESHOLD, c1: float = DEFAULT_C1,
                     delta: float = 0.125, p: float | None = None, C2: float = 1.0, trials: int = 200, seed: int = 0, method: str = "auto") -> ConverseReport:
    """Run the applicable case and report (min_j |f_j - shift|_{U^{s+1}[N]}, |T deviation|)."""
    eps = as_fraction(eps)
    direction = detect_direction(L, threshold)
    case = direction.case(c1)
    if case == 1:
        raise UnreachableCase("|b1|, |b2| < c1: L is within c1 + eta of a rank-deficient matrix")
    weights = _cached_weights(L, n, eps, direction.free_pair, method)
    unit = weights.unit_count()
    if case in (2, 4):
        # every solution has n_p <= (B + |b2| N [case 4]) / |b1|
        bound = direction.strip_bound(n, eps) + (abs(direction.b2) * n if case == 4 else 0.0)
        reach = bound / abs(direction.b1)
        eta = direction.eta if direction.eta > 0 else 1.0 / n
        con = build_case2(n, eta, reach / (eta * n))
        t_f1 = weights.count(con.f1)
        norm = gowers_interval(con.f1.values - 1.0, s + 1).norm_value
        return ConverseReport(case, direction, con.to_json(), norm, abs(t_f1 - unit), unit,
                              {"T_f1": t_f1, "C2": case2_constant(con.f1, con.C1, con.eta, s)})
    plan = plan_case3(n, direction, eps, C2, delta, p, weights)
    res = run_case3_trials(plan, weights, trials, seed, s)
    summary = res.summary()
    con = build_case3(n, direction, C2, delta, plan.p, seed, eps, weights)
    return ConverseReport(3, direction, con.to_json(), min(summary["mean_norm_f1"], summary["mean_norm_f2"]), summary["mean_gap"], unit, summary)
