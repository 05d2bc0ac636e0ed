"""Bounded functions on [N] = {1, ..., N}, extended by zero."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np


@dataclass(frozen=True, eq=False)
class WeightFunction:
    values: np.ndarray
    bound: float = 1.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValueError("weights must be finite")
        if v.size and np.max(np.abs(v)) > self.bound * (1 + 1e-12):
            raise ValueError(f"weights exceed the declared bound {self.bound}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_max(self) -> int:
        return int(self.values.size)

    def __call__(self, n) -> np.ndarray:
        """f(n) for integer n (array-like), zero outside [1, N]."""
        n = np.asarray(n)
        out = np.zeros(n.shape, dtype=float)
        ok = (n >= 1) & (n <= self.n_max)
        out[ok] = self.values[n[ok] - 1]
        return out

    def padded(self) -> np.ndarray:
        """Values with a leading zero, so that padded()[n] = f(n) for 0 <= n <= N."""
        return np.concatenate(([0.0], self.values))

    def is_integral(self) -> bool:
        return bool(np.all(self.values == np.round(self.values)))

    def __add__(self, other: "WeightFunction") -> "WeightFunction":
        return WeightFunction(self.values + other.values, self.bound + other.bound)

    def __sub__(self, other: "WeightFunction") -> "WeightFunction":
        return WeightFunction(self.values - other.values, self.bound + other.bound)

    def scaled(self, c: float) -> "WeightFunction":
        return WeightFunction(self.values * c, self.bound * abs(c) if c else self.bound)

    @staticmethod
    def ones(n: int) -> "WeightFunction":
        return WeightFunction(np.ones(n))

    @staticmethod
    def zeros(n: int) -> "WeightFunction":
        return WeightFunction(np.zeros(n))

    @staticmethod
    def constant(n: int, c: float) -> "WeightFunction":
        return WeightFunction(np.full(n, float(c)), max(1.0, abs(c)))

    @staticmethod
    def indicator(n: int, members: Iterable[int] | np.ndarray) -> "WeightFunction":
        members = np.asarray(members)
        v = np.zeros(n)
        if members.dtype == bool:
            v[members] = 1.0
        elif members.size:
            v[members.astype(np.int64) - 1] = 1.0
        return WeightFunction(v)

    def to_json(self) -> dict:
        return {"N": self.n_max, "values": [float(x) for x in self.values], "bound": self.bound}

    @staticmethod
    def from_json(obj: dict) -> "WeightFunction":
        vals = np.asarray(obj["values"], dtype=float)
        if "N" in obj and int(obj["N"]) != vals.size:
            raise ValueError("N does not match the number of values")
        return WeightFunction(vals, float(obj.get("bound", max(1.0, float(np.max(np.abs(vals), initial=0))))))

    @staticmethod
    def load(path) -> "WeightFunction":
        with open(path) as fh:
            return WeightFunction.from_json(json.load(fh))
