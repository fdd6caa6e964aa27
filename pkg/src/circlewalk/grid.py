"""Piecewise-linear functions on the uniform circle grid ``j / m``."""
from __future__ import annotations

import csv

import numpy as np


class GridFunction:
    def __init__(self, values):
        v = np.array(values, dtype=float)
        if v.ndim != 1 or v.size < 8:
            raise ValueError("grid function needs at least 8 nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        v.setflags(write=False)
        self.values = v

    @classmethod
    def from_function(cls, fn, resolution: int) -> "GridFunction":
        return cls(fn(np.arange(resolution) / resolution))

    @classmethod
    def constant(cls, c: float, resolution: int) -> "GridFunction":
        return cls(np.full(resolution, float(c)))

    @property
    def resolution(self) -> int:
        return self.values.size

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.resolution) / self.resolution

    def __call__(self, x):
        """Linear interpolation, 1-periodic in ``x``."""
        m = self.resolution
        t = np.mod(np.asarray(x, dtype=float), 1.0) * m
        i = np.floor(t).astype(int) % m
        frac = t - np.floor(t)
        v = self.values
        out = (1.0 - frac) * v[i] + frac * v[(i + 1) % m]
        return float(out) if out.ndim == 0 else out

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.values - other.values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.values + other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.values * c)

    __rmul__ = __mul__

    def lipschitz(self) -> float:
        v = self.values
        return float(np.abs(np.diff(v, append=v[0])).max() * self.resolution)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "value"])
            for j, v in enumerate(self.values):
                w.writerow([j, repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["node", "value"]:
            raise ValueError("expected a CSV with header 'node,value'")
        body = sorted((int(r[0]), float(r[1])) for r in rows[1:])
        if [j for j, _ in body] != list(range(len(body))):
            raise ValueError("grid nodes must be 0 .. m-1")
        return cls([v for _, v in body])
