"""Variable cutoffs F (on the n side) and image cutoffs G (on the Ln side).

Sharp cutoffs (boxes, polytopes) are decided exactly by the counter; the
Lipschitz ones are weights evaluated in floating point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.optimize

from .errors import DegenerateGeometry
from .exact_reals import ExactScalar, as_fraction


# --- variable cutoffs -------------------------------------------------------


@dataclass(frozen=True)
class SharpBox:
    """F = indicator of [1, N]^d (implicit in every count since f_j vanish off [N])."""

    kind: str = "sharp_box"

    def weight(self, x: np.ndarray, n: int) -> np.ndarray | None:
        return None


@dataclass(frozen=True)
class LipschitzBox:
    """Piecewise-linear approximation of 1_[1,N]^d with ramp width sigma*N.

    convention 'outer': equal to 1 on the box and 0 at sup-distance >= sigma*N
    outside it, so F >= 1_box.  convention 'inner': equal to 1 on the box
    eroded by sigma*N and 0 outside the box, so F <= 1_box.
    """

    sigma: float
    convention: str = "outer"
    kind: str = "lipschitz_box"

    def __post_init__(self):
        if not 0 < self.sigma < 0.5:
            raise ValueError("sigma must lie in (0, 1/2)")
        if self.convention not in ("outer", "inner"):
            raise ValueError("convention must be 'outer' or 'inner'")

    def weight(self, x: np.ndarray, n: int) -> np.ndarray:
        return box_ramp(x, np.ones(x.shape[-1]), np.full(x.shape[-1], float(n)), self.sigma * n, self.convention)


@dataclass(frozen=True)
class BoundaryBand:
    """Indicator of the points of [1, N]^d within sigma*N of the box boundary."""

    sigma: float
    kind: str = "boundary_band"

    def weight(self, x: np.ndarray, n: int) -> np.ndarray:
        inside = np.minimum(x - 1, n - x).min(axis=-1)
        return (inside < self.sigma * n).astype(float)


def box_ramp(x: np.ndarray, lo: np.ndarray, hi: np.ndarray, width: float, convention: str) -> np.ndarray:
    """Ramp cutoff of the box [lo, hi] with transition width `width` (sup-norm distance)."""
    x = np.asarray(x, dtype=float)
    if convention == "outer":
        out = np.maximum(np.maximum(lo - x, x - hi), 0.0).max(axis=-1)
        return np.clip(1.0 - out / width, 0.0, 1.0)
    depth = np.minimum(x - lo, hi - x).min(axis=-1)
    return np.clip(depth / width, 0.0, 1.0)


def boundary_bump(x: np.ndarray, lo: np.ndarray, hi: np.ndarray, width: float) -> np.ndarray:
    """1 on the boundary of [lo, hi], decaying linearly to 0 at sup-distance `width`."""
    x = np.asarray(x, dtype=float)
    outside = np.maximum(np.maximum(lo - x, x - hi), 0.0).max(axis=-1)
    depth = np.minimum(x - lo, hi - x).min(axis=-1)
    dist = np.where(depth > 0, depth, outside)
    return np.clip(1.0 - dist / width, 0.0, 1.0)


@dataclass(frozen=True)
class LipschitzPair:
    """F_sigma and G_sigma for a box K, with 1_K = F_sigma + O(G_sigma)."""

    lo: np.ndarray
    hi: np.ndarray
    width: float
    convention: str

    def F(self, x) -> np.ndarray:
        return box_ramp(x, self.lo, self.hi, self.width, self.convention)

    def G(self, x) -> np.ndarray:
        return boundary_bump(x, self.lo, self.hi, self.width)

    @property
    def lipschitz_constant(self) -> float:
        return 1.0 / self.width


def build_lipschitz_cutoffs(kind: str, sigma: float, lo: Sequence[float], hi: Sequence[float], scale: float | None = None, convention: str | None = None) -> LipschitzPair:
    """Lipschitz cutoff pair for the box [lo, hi].

    kind 'variable' ramps over sigma*scale with default scale = max side
    length and the outer convention (F >= 1_K); kind 'image' defaults to the
    inner convention, so F is supported in K.
    """
    if not 0 < sigma < 0.5:
        raise ValueError("sigma must lie in (0, 1/2)")
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if kind not in ("variable", "image"):
        raise ValueError("kind must be 'variable' or 'image'")
    if scale is None:
        scale = float(np.max(hi - lo)) if kind == "variable" else float(np.max(np.abs(np.concatenate((lo, hi)))))
    width = sigma * scale
    if np.any(hi - lo <= 2 * width):
        raise DegenerateGeometry("sigma-erosion empties the box")
    if convention is None:
        convention = "outer" if kind == "variable" else "inner"
    return LipschitzPair(lo, hi, width, convention)


# --- image cutoffs ----------------------------------------------------------


@dataclass(frozen=True)
class AffineConstraints:
    """Half-spaces A y + offset <= bound in image coordinates y (A rational)."""

    A: tuple[tuple[Fraction, ...], ...]
    offset: tuple[ExactScalar, ...] | None
    bound: tuple[Fraction, ...]


class ImageCutoff:
    kind = "image"

    def constraints(self, m: int) -> AffineConstraints | None:
        raise NotImplementedError

    def bounding_box(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def weight(self, y: np.ndarray) -> np.ndarray | None:
        return None


@dataclass(frozen=True)
class BoxCutoff(ImageCutoff):
    """G = indicator of [-eps, eps]^m."""

    eps: Fraction
    kind: str = "box"

    def __init__(self, eps):
        object.__setattr__(self, "eps", as_fraction(eps))
        if self.eps < 0:
            raise ValueError("eps must be non-negative")

    def constraints(self, m: int) -> AffineConstraints:
        eye = [[Fraction(int(i == j)) for j in range(m)] for i in range(m)]
        a = eye + [[-x for x in r] for r in eye]
        return AffineConstraints(tuple(map(tuple, a)), None, (self.eps,) * (2 * m))

    def bounding_box(self, m: int):
        e = float(self.eps)
        return np.full(m, -e), np.full(m, e)


@dataclass(frozen=True)
class PolytopeCutoff(ImageCutoff):
    """G = indicator of {y : A y + offset <= b}; offset may be irrational."""

    A: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]
    offset: tuple[ExactScalar, ...] | None = None
    eps: Fraction | None = None
    kind: str = "polytope"
    _box: tuple = field(default=None, compare=False, repr=False)

    def __init__(self, A, b, offset=None, eps=None):
        object.__setattr__(self, "A", tuple(tuple(as_fraction(x) for x in r) for r in A))
        object.__setattr__(self, "b", tuple(as_fraction(x) for x in b))
        object.__setattr__(self, "offset", None if offset is None else tuple(offset))
        object.__setattr__(self, "eps", None if eps is None else as_fraction(eps))
        object.__setattr__(self, "_box", None)
        if len(self.A) != len(self.b):
            raise ValueError("A and b sizes differ")
        lo, hi = self._compute_box()
        pad = 1e-7 * (1.0 + np.abs(lo) + np.abs(hi))
        object.__setattr__(self, "_box", (lo - pad, hi + pad))
        if self.eps is not None:
            e = float(self.eps)
            if np.any(lo < -e * (1 + 1e-9) - 1e-12) or np.any(hi > e * (1 + 1e-9) + 1e-12):
                raise ValueError("polytope is not contained in [-eps, eps]^m")

    def _compute_box(self):
        a = np.array([[float(x) for x in r] for r in self.A], dtype=float)
        b = np.array([float(x) for x in self.b], dtype=float)
        if self.offset is not None:
            b = b - np.array([float(x) for x in self.offset])
        m = a.shape[1]
        lo, hi = np.empty(m), np.empty(m)
        for i in range(m):
            c = np.zeros(m)
            c[i] = 1.0
            for sgn, store in ((1.0, lo), (-1.0, hi)):
                res = scipy.optimize.linprog(sgn * c, A_ub=a, b_ub=b, bounds=[(None, None)] * m, method="highs")
                if res.status == 2:
                    lo[:] = 0.0
                    hi[:] = -1.0
                    return lo, hi
                if res.status != 0:
                    raise DegenerateGeometry("polytope is unbounded or the LP failed")
                store[i] = sgn * res.fun
        return lo, hi

    def constraints(self, m: int) -> AffineConstraints:
        return AffineConstraints(self.A, self.offset, self.b)

    def bounding_box(self, m: int):
        return self._box


@dataclass(frozen=True)
class LipschitzTent(ImageCutoff):
    """G(y) = clip((eps - |y|_inf) / (sigma eps), 0, 1), supported in [-eps, eps]^m."""

    sigma: float
    eps: float
    kind: str = "lipschitz_tent"

    def __post_init__(self):
        if not 0 < self.sigma < 0.5:
            raise ValueError("sigma must lie in (0, 1/2)")

    def constraints(self, m: int):
        return None

    def bounding_box(self, m: int):
        e = float(self.eps)
        return np.full(m, -e), np.full(m, e)

    def weight(self, y: np.ndarray) -> np.ndarray:
        e = float(self.eps)
        return np.clip((e - np.abs(y).max(axis=-1)) / (self.sigma * e), 0.0, 1.0)


@dataclass(frozen=True)
class CutoffSpec:
    F: object
    G: ImageCutoff

    @staticmethod
    def box(eps) -> "CutoffSpec":
        return CutoffSpec(SharpBox(), BoxCutoff(eps))

    def is_sharp(self) -> bool:
        return isinstance(self.F, SharpBox) and self.G.weight(np.zeros((1, 1))) is None
