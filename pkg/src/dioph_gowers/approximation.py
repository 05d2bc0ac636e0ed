"""Bounds for the approximation function

    A_L(t1, t2) = inf { dist(L^T phi, Z^d) : dist(phi, range Theta^T) >= t1, |phi|_inf <= 1/t2 }

with all distances in the sup norm.  Lower bounds are certified through the
Lipschitz estimate |g(phi) - g(phi')| <= m |L|_inf |phi - phi'|_inf of
g(phi) = dist(L^T phi, Z^d); upper bounds come from explicit witnesses.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.optimize

from .errors import BudgetExceeded
from .linear_systems import LinearSystem, rank_matrix, rational_structure

log = logging.getLogger(__name__)

GRID_BUDGET = 10**8
_FLOAT_SLACK = 1e-12


@dataclass(frozen=True)
class ApproxQuery:
    tau1: float
    tau2: float
    delta: float = 1e-3

    def __post_init__(self):
        if not (0 < self.tau1 <= 1 and 0 < self.tau2 <= 1):
            raise ValueError("tau1 and tau2 must lie in (0, 1]")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class ApproxResult:
    lower_bound: float
    upper_bound: float
    witness_phi: tuple[float, ...] | None
    witness_lattice_point: tuple[int, ...] | None
    raw_upper: float | None = None
    by_definition: bool = False

    def to_json(self) -> dict:
        return {
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "witness_phi": None if self.witness_phi is None else list(self.witness_phi),
            "witness_lattice_point": None if self.witness_lattice_point is None else list(self.witness_lattice_point),
            "raw_upper": self.raw_upper,
            "by_definition": self.by_definition,
        }


class _Geometry:
    """Float data shared by the bounds: L, its sup norm and the Theta row space."""

    def __init__(self, L: LinearSystem):
        self.L = L
        self.lf = L.float_matrix()
        self.m, self.d = self.lf.shape
        self.norm = float(L.norm_inf())
        self.lip = self.m * self.norm
        u, theta, _ = rational_structure(L)
        self.u = u
        self.theta = None if theta is None else np.array([[float(x) for x in r] for r in theta], dtype=float)
        if self.theta is not None and u < self.m:
            q, _ = np.linalg.qr(self.theta.T)
            self._q = q[:, :u]
        else:
            self._q = None

    def g(self, phi: np.ndarray) -> np.ndarray:
        v = phi @ self.lf
        return np.abs(v - np.round(v)).max(axis=-1)

    def dist2(self, phi: np.ndarray) -> np.ndarray:
        """Euclidean distance to the row space of Theta (|phi| when u = 0)."""
        if self._q is None:
            return np.linalg.norm(phi, axis=-1)
        return np.linalg.norm(phi - (phi @ self._q) @ self._q.T, axis=-1)

    def dist_inf(self, phi: np.ndarray) -> float:
        """Exact sup-norm distance of one phi to the row space of Theta (LP)."""
        if self.theta is None:
            return float(np.abs(phi).max())
        u, m = self.theta.shape
        # minimize s subject to -s <= phi - Theta^T t <= s
        c = np.zeros(u + 1)
        c[-1] = 1.0
        a = np.vstack((np.hstack((-self.theta.T, -np.ones((m, 1)))), np.hstack((self.theta.T, -np.ones((m, 1))))))
        b = np.concatenate((-phi, phi))
        res = scipy.optimize.linprog(c, A_ub=a, b_ub=b, bounds=[(None, None)] * u + [(0, None)], method="highs")
        return float(res.fun)


def _rational_full(L: LinearSystem, q: ApproxQuery) -> bool:
    u, _, _ = rational_structure(L)
    return u == L.m


def approx_lower(L: LinearSystem, q: ApproxQuery, method: str = "grid", budget: int = GRID_BUDGET, workers: int | None = None) -> float:
    """Certified lower bound (true infimum >= returned value)."""
    if _rational_full(L, q):
        return float(q.tau1)
    geo = _Geometry(L)
    if method == "grid":
        return _grid_lower(geo, q, budget)
    if method == "adaptive":
        return _adaptive_lower(geo, q, budget)[0]
    raise ValueError("method must be 'grid' or 'adaptive'")


def _grid_lower(geo: _Geometry, q: ApproxQuery, budget: int) -> float:
    m, delta = geo.m, q.delta
    radius = 1.0 / q.tau2
    ticks = np.arange(-math.ceil(radius / delta) - 1, math.ceil(radius / delta) + 2) * delta
    total = ticks.size**m
    if total > budget:
        raise BudgetExceeded(f"grid of {total} points exceeds the budget; coarsen delta")
    # a feasible phi is within delta/2 (sup norm) of a grid point g, and then
    # dist2(g) >= tau1 - sqrt(m) delta / 2 and |g|_inf <= radius + delta / 2
    keep_d = q.tau1 - math.sqrt(m) * delta
    best = math.inf
    chunk = max(1, 1 << 20)
    for start in range(0, total, chunk):
        lin = np.arange(start, min(total, start + chunk), dtype=np.int64)
        idx = np.stack(np.unravel_index(lin, (ticks.size,) * m), axis=1)
        phi = ticks[idx]
        ok = (np.abs(phi).max(axis=1) <= radius + delta) & (geo.dist2(phi) >= keep_d)
        if ok.any():
            best = min(best, float(geo.g(phi[ok]).min()))
    if not math.isfinite(best):
        return 0.0
    return max(0.0, best - geo.lip * delta - _FLOAT_SLACK)


def _adaptive_lower(geo: _Geometry, q: ApproxQuery, budget: int, rtol: float = 0.02) -> tuple[float, bool]:
    """Lipschitz branch and bound; returns (certified lower bound, converged).

    Boxes are sup-norm balls of half-width h around their centers.  A box
    is discarded when it holds no feasible point or when its Lipschitz lower
    bound exceeds the best feasible value found; it is settled when its
    bound is within rtol of that value.
    """
    m = geo.m
    radius = 1.0 / q.tau2
    n0 = 64 if m == 1 else 16
    h = radius / n0
    ticks = (np.arange(n0) * 2 + 1 - n0) * h
    centers = np.array(list(itertools.product(ticks, repeat=m)), dtype=float).reshape(-1, m)
    upper = math.inf
    settled = math.inf
    evaluated = 0
    sq = math.sqrt(m)
    while True:
        gv = geo.g(centers)
        d2 = geo.dist2(centers)
        evaluated += centers.shape[0]
        feas = d2 / sq >= q.tau1  # dist_inf >= dist2 / sqrt(m)
        if feas.any():
            upper = min(upper, float(gv[feas].min()))
        alive = d2 + sq * h >= q.tau1
        lb = gv - geo.lip * h
        alive &= lb <= upper
        centers, lb = centers[alive], lb[alive]
        target = upper / (1 + rtol) - 1e-12
        done = lb >= target
        if done.any():
            settled = min(settled, float(lb[done].min()))
        centers, lb = centers[~done], lb[~done]
        if centers.shape[0] == 0:
            low = min(settled, upper)
            return (max(0.0, low - _FLOAT_SLACK) if math.isfinite(low) else 0.0), True
        if evaluated + centers.shape[0] * 2**m > budget:
            low = min(settled, upper, float(lb.min()))
            return max(0.0, low - _FLOAT_SLACK), False
        h /= 2
        offs = np.array(list(itertools.product((-h, h), repeat=m)))
        centers = (centers[:, None, :] + offs[None, :, :]).reshape(-1, m)


def _witness_frame(geo: _Geometry, frame: str) -> np.ndarray | None:
    if frame == "integer":
        return None
    if frame == "rank":
        rm = rank_matrix(geo.L)
        return np.linalg.inv(geo.lf[:, list(rm.columns)]).T
    raise ValueError("frame must be 'integer' or 'rank'")


def approx_upper(L: LinearSystem, q: ApproxQuery, frame: str = "integer", kmax: int | None = None):
    """Best witness over integer k with 1 <= |k|_inf <= ceil(1/tau2).

    frame 'integer' takes phi = k directly; frame 'rank' takes phi = M^-T k
    for the rank matrix M, so that L^T phi has the integer vector k in the
    rank columns.  Returns (value, phi, k, lattice point).
    """
    geo = _Geometry(L)
    if kmax is None:
        kmax = math.ceil(1.0 / q.tau2)
    tr = _witness_frame(geo, frame)
    rng = range(-kmax, kmax + 1)
    ks = np.array([k for k in itertools.product(rng, repeat=geo.m) if any(k)], dtype=float)
    phis = ks if tr is None else ks @ tr.T
    ok = np.abs(phis).max(axis=1) <= 1.0 / q.tau2 + 1e-12
    vals = geo.g(phis)
    order = np.lexsort((np.abs(ks).sum(axis=1), vals))
    for i in order:
        if not ok[i]:
            continue
        if geo.u and geo.u < geo.m and geo.dist_inf(phis[i]) < q.tau1:
            continue
        if geo.u == 0 and np.abs(phis[i]).max() < q.tau1:
            continue
        v = phis[i] @ geo.lf
        return float(vals[i]), tuple(float(x) for x in phis[i]), tuple(int(x) for x in ks[i]), tuple(int(x) for x in np.round(v))
    return math.inf, None, None, None


def approximate(L: LinearSystem, q: ApproxQuery, method: str = "grid", frame: str = "integer") -> ApproxResult:
    if _rational_full(L, q):
        raw, phi, _, point = approx_upper(L, q, frame)
        return ApproxResult(q.tau1, q.tau1, phi, point, raw, by_definition=True)
    lower = approx_lower(L, q, method)
    upper, phi, _, point = approx_upper(L, q, frame)
    return ApproxResult(lower, upper, phi, point, upper)


def convergent_denominators(alpha: float, count: int = 12) -> list[int]:
    """Denominators of the continued-fraction convergents of alpha."""
    dens = []
    prev, cur = 1, 0
    x = alpha
    for _ in range(count):
        a = math.floor(x)
        prev, cur = cur, a * cur + prev
        dens.append(cur)
        frac = x - a
        if frac < 1e-15:
            break
        x = 1.0 / frac
    return sorted(set(dens))


@dataclass(frozen=True)
class ProbeRow:
    tau2: float
    lower: float
    upper: float
    witness_k: tuple[int, ...] | None
    converged: bool


@dataclass(frozen=True)
class ProbeResult:
    rows: tuple[ProbeRow, ...]
    exponent: float

    def csv_rows(self) -> list[dict]:
        return [
            {"tau2": r.tau2, "lower": r.lower, "upper": r.upper, "witness_k": " ".join(map(str, r.witness_k or ())), "converged": r.converged}
            for r in self.rows
        ]


def algebraic_decay_probe(L: LinearSystem, tau_grid: Sequence[float] | None = None, tau1: float = 0.25, budget: int = 4 * 10**6) -> ProbeResult:
    """Certified lower bounds over a tau2 grid and the fitted decay exponent."""
    if tau_grid is None:
        tau_grid = np.logspace(-3, -1, 9)
    rows = []
    full = _rational_full(L, ApproxQuery(tau1, 1.0))
    geo = None if full else _Geometry(L)
    for t2 in tau_grid:
        q = ApproxQuery(tau1, float(t2))
        if full:
            rows.append(ProbeRow(float(t2), tau1, tau1, None, True))
            continue
        low, conv = _adaptive_lower(geo, q, budget)
        up, _, k, _ = approx_upper(L, q)
        rows.append(ProbeRow(float(t2), low, up, k, conv))
    pos = [r for r in rows if r.lower > 0]
    if full:
        exponent = 0.0
    elif len(pos) < 2:
        exponent = math.nan
    else:
        exponent = float(np.polyfit(np.log([r.tau2 for r in pos]), np.log([r.lower for r in pos]), 1)[0])
    return ProbeResult(tuple(rows), exponent)


def transfer_table(L: LinearSystem, L_prime: LinearSystem, taus: Sequence[tuple[float, float]], delta: float = 1e-3) -> list[dict]:
    """Upper/lower bounds of A_L and A_L' side by side (advisory, logged)."""
    out = []
    for t1, t2 in taus:
        q = ApproxQuery(t1, t2, delta)
        row = {"tau1": t1, "tau2": t2}
        for name, sys in (("L", L), ("L_prime", L_prime)):
            try:
                low = approx_lower(sys, q, "adaptive", budget=10**6)
            except BudgetExceeded:
                low = math.nan
            up = approx_upper(sys, q)[0]
            row[f"{name}_lower"] = low
            row[f"{name}_upper"] = up
        out.append(row)
        log.info("transfer %s", row)
    return out
