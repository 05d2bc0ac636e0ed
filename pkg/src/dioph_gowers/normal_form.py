"""Cauchy-Schwarz complexity, the normal-form predicate and normal-form extensions.

Forms are rows psi_i of an m x n float matrix.  "psi_i is far from span(part)"
is measured by the Euclidean residual of psi_i after projecting onto the
span of the part's forms.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionError, NoSolution

EXHAUSTIVE_PARTS = 7
BASIS_LIMIT = 2000
SEARCH_LIMIT = 24


@dataclass(frozen=True)
class FormSystem:
    forms: np.ndarray
    provenance: str | None = None

    def __post_init__(self):
        a = np.array(self.forms, dtype=float)
        if a.ndim != 2:
            raise DimensionError("forms must be an m x n matrix")
        if np.any(np.all(a == 0, axis=1)):
            raise DimensionError("zero form")
        a.setflags(write=False)
        object.__setattr__(self, "forms", a)

    @property
    def n_forms(self) -> int:
        return self.forms.shape[0]

    @property
    def n_vars(self) -> int:
        return self.forms.shape[1]

    def to_json(self) -> dict:
        return {"forms": self.forms.tolist(), "provenance": self.provenance}

    @staticmethod
    def from_json(obj) -> "FormSystem":
        if isinstance(obj, list):
            return FormSystem(np.array(obj, dtype=float))
        return FormSystem(np.array(obj["forms"], dtype=float), obj.get("provenance"))

    @staticmethod
    def load(path) -> "FormSystem":
        with open(path) as fh:
            return FormSystem.from_json(json.load(fh))


def residual(psi: np.ndarray, span_rows: np.ndarray) -> float:
    """|psi - orthogonal projection of psi onto the row span|_2."""
    psi = np.asarray(psi, dtype=float)
    span_rows = np.asarray(span_rows, dtype=float).reshape(-1, psi.size)
    if span_rows.shape[0] == 0:
        return float(np.linalg.norm(psi))
    coef, *_ = np.linalg.lstsq(span_rows.T, psi, rcond=None)
    return float(np.linalg.norm(psi - span_rows.T @ coef))


def set_partitions(items: Sequence[int]):
    """All set partitions of items (restricted growth strings)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in set_partitions(rest):
        for k in range(len(p)):
            yield p[:k] + [[first] + p[k]] + p[k + 1 :]
        yield [[first]] + p


def partition_margin(forms: np.ndarray, i: int, partition: Sequence[Sequence[int]]) -> list[float]:
    return [residual(forms[i], forms[list(part)]) for part in partition]


def _greedy_partition(forms: np.ndarray, i: int, c1: float):
    # start from singletons and merge while every part stays suitable
    parts = [[j] for j in range(forms.shape[0]) if j != i]
    if min(partition_margin(forms, i, parts)) < c1:
        return None
    merged = True
    while merged and len(parts) > 1:
        merged = False
        best = None
        for a, b in itertools.combinations(range(len(parts)), 2):
            r = residual(forms[i], forms[parts[a] + parts[b]])
            if r >= c1 and (best is None or r > best[0]):
                best = (r, a, b)
        if best is not None:
            _, a, b = best
            parts = [p for k, p in enumerate(parts) if k not in (a, b)] + [sorted(parts[a] + parts[b])]
            merged = True
    return parts


@dataclass(frozen=True)
class ComplexityReport:
    s: float  # math.inf when infinite
    s_per_form: tuple[float, ...]
    partitions: tuple  # best partition per i (0-based indices) or None
    margins: tuple
    exhaustive: bool

    @property
    def finite(self) -> bool:
        return math.isfinite(self.s)

    def to_json(self) -> dict:
        conv = lambda v: None if not math.isfinite(v) else int(v)
        return {
            "s": conv(self.s),
            "s_per_form": [conv(v) for v in self.s_per_form],
            "partitions": [None if p is None else [[j + 1 for j in part] for part in p] for p in self.partitions],
            "margins": [None if m is None else list(m) for m in self.margins],
            "exhaustive": self.exhaustive,
        }


def best_partition(forms: np.ndarray, i: int, c1: float):
    """Suitable partition of [m]\\{i} with fewest parts (ties: larger min margin)."""
    others = [j for j in range(forms.shape[0]) if j != i]
    if len(others) <= EXHAUSTIVE_PARTS:
        best = None
        for p in set_partitions(others):
            marg = partition_margin(forms, i, p)
            if min(marg) < c1:
                continue
            key = (len(p), -min(marg))
            if best is None or key < best[0]:
                best = (key, sorted(sorted(part) for part in p), marg)
        if best is None:
            return None, None, True
        p = best[1]
        return p, partition_margin(forms, i, p), True
    p = _greedy_partition(forms, i, c1)
    return p, None if p is None else partition_margin(forms, i, p), False


def cs_complexity(psi: FormSystem | np.ndarray, c1: float) -> ComplexityReport:
    forms = psi.forms if isinstance(psi, FormSystem) else np.asarray(psi, dtype=float)
    m = forms.shape[0]
    if m < 3:
        raise DimensionError("complexity needs at least three forms")
    s_vals, parts, margins, exhaustive = [], [], [], True
    for i in range(m):
        p, marg, ex = best_partition(forms, i, c1)
        exhaustive &= ex
        parts.append(p)
        margins.append(None if marg is None else tuple(marg))
        s_vals.append(math.inf if p is None else len(p) - 1)
    s = max(1, max(s_vals))
    return ComplexityReport(float(s), tuple(float(v) for v in s_vals), tuple(parts), tuple(margins), exhaustive)


def is_normal_form(forms, i: int, restrict: Sequence[int] | None = None, tol: float = 1e-12) -> tuple[bool, tuple[int, ...] | None]:
    """Whether some coordinate set J makes prod_{e in J} psi_k(e) nonzero exactly for k = i.

    Returns the smallest witness (fewest coordinates, then lexicographic).
    With `restrict`, only subsets of those coordinates are searched.
    """
    a = forms.forms if isinstance(forms, FormSystem) else np.asarray(forms, dtype=float)
    scale = max(1.0, float(np.abs(a).max(initial=0)))
    nz = np.abs(a) > tol * scale
    coords = list(range(a.shape[1])) if restrict is None else list(restrict)
    if restrict is None and len(coords) > SEARCH_LIMIT:
        raise BudgetExceeded("coordinate search too large without a restriction hint")
    others = [k for k in range(a.shape[0]) if k != i]
    for size in range(1, len(coords) + 1):
        for J in itertools.combinations(coords, size):
            cols = list(J)
            if not nz[i, cols].all():
                continue
            if all(not nz[k, cols].all() for k in others):
                return True, J
    return False, None


def _independent_rows(rows: np.ndarray, tol: float = 1e-10) -> list[int]:
    keep: list[int] = []
    for r in range(rows.shape[0]):
        cand = keep + [r]
        if np.linalg.matrix_rank(rows[cand], tol=tol * max(1.0, np.abs(rows).max())) == len(cand):
            keep = cand
    return keep


def shift_vector(forms: np.ndarray, i: int, part: Sequence[int]) -> tuple[np.ndarray, bool]:
    """f with psi_i(f) = 1 and psi_j(f) = 0 for j in part, of small sup norm.

    Enumerates basic solutions (one invertible column subset each) and keeps
    the smallest sup norm; past BASIS_LIMIT candidates the minimum 2-norm
    solution is used instead and the second value is False.
    """
    n = forms.shape[1]
    sub = forms[list(part)] if part else np.zeros((0, n))
    idx = _independent_rows(sub)
    a = np.vstack((forms[i][None, :], sub[idx]))
    if np.linalg.matrix_rank(a) < a.shape[0]:
        raise NoSolution("psi_i lies in the span of the part")
    b = np.zeros(a.shape[0])
    b[0] = 1.0
    r = a.shape[0]
    if math.comb(n, r) <= BASIS_LIMIT:
        best = None
        for cols in itertools.combinations(range(n), r):
            sq = a[:, cols]
            if abs(np.linalg.det(sq)) < 1e-12:
                continue
            f = np.zeros(n)
            f[list(cols)] = np.linalg.solve(sq, b)
            key = float(np.abs(f).max())
            if best is None or key < best[0] - 1e-12:
                best = (key, f)
        if best is not None:
            return best[1], True
    f, *_ = np.linalg.lstsq(a, b, rcond=None)
    f = f / (forms[i] @ f)
    return f, False


@dataclass(frozen=True)
class NormalFormExtension:
    target_index: int  # 0-based
    s: int
    shift_vectors: tuple[np.ndarray, ...]
    extended_forms: np.ndarray
    partition: tuple[tuple[int, ...], ...]
    margins: tuple[float, ...]
    basic_solutions: bool
    witness: tuple[int, ...] | None = None

    def apply(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        return self.extended_forms @ np.concatenate((u, w))

    def to_json(self) -> dict:
        return {
            "target_index": self.target_index + 1,
            "s": self.s,
            "shift_vectors": [v.tolist() for v in self.shift_vectors],
            "extended_forms": self.extended_forms.tolist(),
            "partition": [[j + 1 for j in p] for p in self.partition],
            "margins": list(self.margins),
            "basic_solutions": self.basic_solutions,
            "witness": None if self.witness is None else [j + 1 for j in self.witness],
        }


def extend_normal_form(psi: FormSystem | np.ndarray, i: int, partition: Sequence[Sequence[int]] | None = None, c1: float = 1e-6) -> NormalFormExtension:
    """Psi'(u, w) = Psi(u + sum_k w_k f_k), in normal form with respect to psi_i (0-based i)."""
    forms = psi.forms if isinstance(psi, FormSystem) else np.asarray(psi, dtype=float)
    m, n = forms.shape
    if partition is None:
        partition, _, _ = best_partition(forms, i, c1)
        if partition is None:
            raise NoSolution(f"no suitable partition for form {i + 1} at margin {c1}")
    partition = [sorted(p) for p in partition]
    if sorted(j for p in partition for j in p) != [j for j in range(m) if j != i]:
        raise ValueError("partition must cover every form except the target")
    margins = partition_margin(forms, i, partition)
    shifts, basic = [], True
    for part in partition:
        f, ok = shift_vector(forms, i, part)
        shifts.append(f)
        basic &= ok
    new_cols = np.stack([forms @ f for f in shifts], axis=1)
    scale = max(1.0, float(np.abs(new_cols).max()))
    new_cols[np.abs(new_cols) < 1e-12 * scale] = 0.0
    new_cols[i] = 1.0
    ext = np.hstack((forms, new_cols))
    s = len(partition) - 1
    ok, J = is_normal_form(ext, i, restrict=range(n, n + s + 1))
    if not ok:
        raise NoSolution("extension failed the normal-form predicate")
    return NormalFormExtension(i, s, tuple(shifts), ext, tuple(tuple(p) for p in partition), tuple(margins), basic, J)


def reparametrization_error(psi: FormSystem | np.ndarray, ext: NormalFormExtension, trials: int = 20, seed: int = 0) -> float:
    """max |psi'(u, w) - psi(u + sum w_k f_k)| over random (u, w), relative to the scale."""
    forms = psi.forms if isinstance(psi, FormSystem) else np.asarray(psi, dtype=float)
    rng = np.random.default_rng(seed)
    worst = 0.0
    n = forms.shape[1]
    for _ in range(trials):
        u = rng.normal(size=n)
        w = rng.normal(size=ext.s + 1)
        lhs = ext.apply(u, w)
        rhs = forms @ (u + sum(wk * f for wk, f in zip(w, ext.shift_vectors)))
        worst = max(worst, float(np.abs(lhs - rhs).max() / (1.0 + np.abs(rhs).max())))
    return worst
