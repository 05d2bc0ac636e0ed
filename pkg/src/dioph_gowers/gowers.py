"""Gowers uniformity norms on Z/NZ and on the interval [N].

For g supported on [N] write S_k(g) for the sum over x and h in Z^(k+1) of
prod_w g(x + w.h).  The interval norm is (S_k(f) / S_k(1_[N]))^(1/2^k).
S_2 is a sum of squared autocorrelations, computed by FFT; higher degrees
recurse through the multiplicative derivatives g(x) g(x + h).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.fft

from .errors import BudgetExceeded
from .weights import WeightFunction

NAIVE_BUDGET = 10**10
INNER_PRODUCT_BUDGET = 10**8


@dataclass(frozen=True)
class GowersReport:
    degree: int
    norm_value: float
    numerator: float
    denominator: float
    method: str

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _as_array(f) -> np.ndarray:
    if isinstance(f, WeightFunction):
        return np.asarray(f.values, dtype=float)
    return np.asarray(f, dtype=float).reshape(-1)


def _root(num: float, den: float, degree: int) -> float:
    if num <= 0 or den <= 0:
        return 0.0
    return float((num / den) ** (1.0 / 2**degree))


def _s2_batch(g: np.ndarray) -> np.ndarray:
    # sum_m c(m)^2, c the linear autocorrelation of each row
    n = g.shape[-1]
    size = scipy.fft.next_fast_len(2 * n - 1, real=True)
    spec = scipy.fft.rfft(g, n=size, axis=-1)
    c = scipy.fft.irfft(spec.real**2 + spec.imag**2, n=size, axis=-1)[..., :n]
    return c[..., 0] ** 2 + 2.0 * np.sum(c[..., 1:] ** 2, axis=-1)


def _s_batch(g: np.ndarray, degree: int, chunk: int = 256) -> np.ndarray:
    """S_degree for each row of a 2-d array g (rows are functions on [n])."""
    if degree == 1:
        return g.sum(axis=-1) ** 2
    if degree == 2:
        return _s2_batch(g)
    n = g.shape[-1]
    # S_k(g) = S_{k-1}(g^2) + 2 sum_{h>=1} S_{k-1}(g(.) g(. + h))
    total = _s_batch(g * g, degree - 1, chunk)
    for start in range(1, n, chunk):
        hs = range(start, min(n, start + chunk))
        width = n - start
        block = np.zeros((len(hs),) + g.shape[:-1] + (width,))
        for t, h in enumerate(hs):
            block[t, ..., : n - h] = g[..., : n - h] * g[..., h:]
        flat = block.reshape(-1, width)
        vals = _s_batch(flat, degree - 1, chunk).reshape(len(hs), -1)
        total = total + 2.0 * vals.sum(axis=0).reshape(total.shape)
    return total


def _s_naive(g: np.ndarray, degree: int) -> float:
    """Direct evaluation of the defining sum (oracle)."""
    n = g.size
    if degree == 1:
        return float(np.outer(g, g).sum())
    off = degree * n
    ext = np.concatenate((np.zeros(off), g, np.zeros(off)))
    total = 0.0
    hs = range(-(n - 1), n)
    for h in itertools.product(hs, repeat=degree - 1):
        d = np.ones(n)
        for w in itertools.product((0, 1), repeat=degree - 1):
            s = sum(a * b for a, b in zip(w, h))
            d = d * ext[off + s : off + s + n]
        # last direction: sum over x and h_k of d(x) d(x + h_k)
        total += float(np.outer(d, d).sum())
    return total


def interval_sum(f, degree: int, method: str = "auto") -> float:
    g = _as_array(f)
    if g.size == 0:
        return 0.0
    if method == "naive":
        if g.size ** (degree + 1) > NAIVE_BUDGET:
            raise BudgetExceeded("naive Gowers sum exceeds the work guard")
        return _s_naive(g, degree)
    work = g.size ** max(1, degree - 1) * max(1.0, np.log2(g.size))
    if work > NAIVE_BUDGET:
        raise BudgetExceeded("Gowers sum exceeds the work guard")
    return float(_s_batch(g[None, :], degree)[0])


def gowers_interval(f, degree: int, method: str = "auto") -> GowersReport:
    """The U^degree[N] norm of f with the 1_[N]-normalized quotient."""
    if degree < 1:
        raise ValueError("degree must be at least 1")
    g = _as_array(f)
    num = interval_sum(g, degree, method)
    den = interval_sum(np.ones(g.size), degree, method)
    if method == "auto":
        method = {1: "direct", 2: "fft"}.get(degree, "recursive")
    num = max(num, 0.0)
    return GowersReport(degree, _root(num, den, degree), num, den, method)


def _cyc_s2(g: np.ndarray) -> np.ndarray:
    spec = np.fft.fft(g, axis=-1)
    c = np.fft.ifft(np.abs(spec) ** 2, axis=-1).real
    return np.sum(c**2, axis=-1)


def _cyc_sum(g: np.ndarray, degree: int) -> np.ndarray:
    if degree == 1:
        return g.sum(axis=-1) ** 2
    if degree == 2:
        return _cyc_s2(g)
    n = g.shape[-1]
    total = np.zeros(g.shape[:-1])
    for h in range(n):
        total = total + _cyc_sum(g * np.roll(g, -h, axis=-1), degree - 1)
    return total


def gowers_cyclic(f, degree: int, method: str = "auto") -> float:
    """U^degree(Z/N'Z) norm of real f with the 1/N'^(degree+1) normalization."""
    g = _as_array(f)
    n = g.size
    if method == "naive":
        if n ** (degree + 1) > INNER_PRODUCT_BUDGET:
            raise BudgetExceeded("naive cyclic sum exceeds the work guard")
        total = 0.0
        for h in itertools.product(range(n), repeat=degree):
            d = np.ones(n)
            for w in itertools.product((0, 1), repeat=degree):
                s = sum(a * b for a, b in zip(w, h))
                d = d * np.roll(g, -s)
            total += d.sum()
    else:
        total = float(_cyc_sum(g[None, :], degree)[0])
    return _root(max(total, 0.0), float(n) ** (degree + 1), degree)


def gowers_inner_product(fs: Sequence, cyclic: bool = False) -> float:
    """Gowers inner product of 2^d functions, sum normalized by N^(d+1).

    fs[k] is the function at the vertex w whose bits are the binary digits of
    k (bit i of k is w_i).  Non-cyclic inputs are extended by zero.
    """
    arrays = [_as_array(f) for f in fs]
    d = int(round(np.log2(len(arrays))))
    if 2**d != len(arrays) or d < 1:
        raise ValueError("need 2^d functions")
    n = arrays[0].size
    if any(a.size != n for a in arrays):
        raise ValueError("all functions must share N")
    span = n if cyclic else 2 * n - 1
    if n * span**d > INNER_PRODUCT_BUDGET:
        raise BudgetExceeded("inner product exceeds the work guard")
    verts = [tuple((k >> i) & 1 for i in range(d)) for k in range(2**d)]
    total = 0.0
    if cyclic:
        for h in itertools.product(range(n), repeat=d):
            prod = np.ones(n)
            for k, w in enumerate(verts):
                prod = prod * np.roll(arrays[k], -sum(a * b for a, b in zip(w, h)))
            total += prod.sum()
    else:
        pad = n * d
        exts = [np.concatenate((np.zeros(pad), a, np.zeros(pad + n))) for a in arrays]
        for h in itertools.product(range(-(n - 1), n), repeat=d):
            prod = np.ones(n)
            for k, w in enumerate(verts):
                s = sum(a * b for a, b in zip(w, h))
                prod = prod * exts[k][pad + s : pad + s + n]
            total += prod.sum()
    return total / float(n) ** (d + 1)


def balanced_function(members: Iterable[int] | np.ndarray, n: int) -> WeightFunction:
    """1_A - alpha 1_[N] with alpha = |A|/N."""
    ind = WeightFunction.indicator(n, members).values
    size = int(round(ind.sum()))
    alpha = Fraction(size, n) if n else Fraction(0)
    vals = np.where(ind > 0, float(1 - alpha), -float(alpha))
    return WeightFunction(vals, max(float(alpha), float(1 - alpha)))


@dataclass(frozen=True)
class FourierSup:
    value: float
    theta: float
    resolution: float


def fourier_sup(f, oversample: int = 4) -> FourierSup:
    """Grid maximum of |(1/N) sum_n f(n) e(n theta)| on theta = j / (oversample N)."""
    if oversample < 4:
        raise ValueError("oversample must be at least 4")
    g = _as_array(f)
    n = g.size
    size = oversample * n
    spec = np.abs(np.fft.fft(g, n=size)) / n
    j = int(np.argmax(spec))
    return FourierSup(float(spec[j]), j / size, 1.0 / size)
