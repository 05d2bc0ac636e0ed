"""Segmented sieve for the Moebius and Liouville functions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded

MAX_TABLE = 2 * 10**8
SEGMENT = 1 << 20


@dataclass(frozen=True)
class SieveTable:
    n_max: int
    mu: np.ndarray  # int8, mu[k] for k = 0..n_max (mu[0] = 0)
    liouville: np.ndarray  # int8, lambda[k], lambda[0] = 0

    def mertens(self, n: int) -> int:
        return int(self.mu[1 : n + 1].sum(dtype=np.int64))

    def mu_values(self, n: int | None = None) -> np.ndarray:
        """mu(1..n) as floats, ready for WeightFunction."""
        n = self.n_max if n is None else n
        return self.mu[1 : n + 1].astype(float)

    def liouville_values(self, n: int | None = None) -> np.ndarray:
        n = self.n_max if n is None else n
        return self.liouville[1 : n + 1].astype(float)


def small_primes(limit: int) -> np.ndarray:
    """Primes p <= limit (plain Eratosthenes)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.nonzero(flags)[0].astype(np.int64)


def _segment(lo: int, hi: int, primes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """mu and lambda on [lo, hi)."""
    size = hi - lo
    rest = np.arange(lo, hi, dtype=np.int64)
    mu = np.ones(size, dtype=np.int8)
    lam = np.ones(size, dtype=np.int8)
    for p in primes:
        p = int(p)
        if p * p >= hi and p >= hi:
            break
        start = (-lo) % p
        if start >= size:
            continue
        mu[start::p] *= -1
        pk = p
        while pk < hi:
            s = (-lo) % pk
            if s >= size:
                break
            rest[s::pk] //= p
            lam[s::pk] *= -1
            if pk > p:
                mu[s::pk] = 0
            if pk > hi // p:
                break
            pk *= p
    # one prime factor above sqrt(hi) may remain
    big = rest > 1
    mu[big] *= -1
    lam[big] *= -1
    return mu, lam


def sieve(n_max: int, segment: int = SEGMENT) -> SieveTable:
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if n_max > MAX_TABLE:
        raise BudgetExceeded(f"tables beyond {MAX_TABLE} entries do not fit the memory budget")
    primes = small_primes(math.isqrt(n_max))
    mu = np.zeros(n_max + 1, dtype=np.int8)
    lam = np.zeros(n_max + 1, dtype=np.int8)
    for lo in range(1, n_max + 1, segment):
        hi = min(n_max + 1, lo + segment)
        mu[lo:hi], lam[lo:hi] = _segment(lo, hi, primes)
    mu.setflags(write=False)
    lam.setflags(write=False)
    return SieveTable(n_max, mu, lam)


def divisor_sum_check(table: SieveTable, n: int | None = None) -> bool:
    """sum_{d | k} mu(d) = [k = 1] for every k <= n."""
    n = table.n_max if n is None else n
    acc = np.zeros(n + 1, dtype=np.int64)
    for d in range(1, n + 1):
        md = int(table.mu[d])
        if md:
            acc[d::d] += md
    expected = np.zeros(n + 1, dtype=np.int64)
    expected[1] = 1
    return bool(np.array_equal(acc[1:], expected[1:]))
