"""Empirical probability measures on the circle, stored as sorted samples."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .circle import Arc, wrap


class EmpiricalMeasure:
    def __init__(self, samples):
        s = np.sort(wrap(np.atleast_1d(np.asarray(samples, dtype=float))))
        s.setflags(write=False)
        self.samples = s

    @property
    def count(self) -> int:
        return int(self.samples.size)

    def __len__(self):
        return self.count

    def __repr__(self):
        return f"EmpiricalMeasure(count={self.count})"

    def _require_samples(self):
        if self.count == 0:
            raise ValueError("empty sample set")

    def count_in(self, arc: Arc) -> int:
        """Number of samples on the closed arc."""
        self._require_samples()
        if arc.is_full:
            return self.count
        s = self.samples
        a = arc.start
        b = a + arc.length
        if b < 1.0:
            return int(np.searchsorted(s, b, "right") - np.searchsorted(s, a, "left"))
        b -= 1.0
        return int(
            (s.size - np.searchsorted(s, a, "left")) + np.searchsorted(s, b, "right")
        )

    def cumulative_counts(self, lifts, closed_right: bool):
        """Counting function on lift coordinates.

        ``C(t) = floor(t) * N + #{s <= frac(t)}`` (``<`` when
        ``closed_right`` is false); the closed-arc count over ``[a, b]`` is
        ``C_right(b) - C_left(a)``.
        """
        t = np.asarray(lifts, dtype=float)
        k = np.floor(t)
        side = "right" if closed_right else "left"
        return k * self.count + np.searchsorted(self.samples, t - k, side)

    def pooled(self, *others: "EmpiricalMeasure") -> "EmpiricalMeasure":
        return EmpiricalMeasure(np.concatenate([self.samples] + [o.samples for o in others]))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample"])
            w.writerows([repr(float(x))] for x in self.samples)

    @classmethod
    def from_csv(cls, path) -> "EmpiricalMeasure":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["sample"]:
            raise ValueError("expected a CSV with header 'sample'")
        return cls([float(r[0]) for r in rows[1:]])


def arc_mass(m: EmpiricalMeasure, arc: Arc) -> float:
    return m.count_in(arc) / m.count


def grid_counts(m: EmpiricalMeasure, resolution: int) -> np.ndarray:
    """Sample counts per half-open grid cell ``[j/r, (j+1)/r)``."""
    cells = np.minimum((m.samples * resolution).astype(int), resolution - 1)
    return np.bincount(cells, minlength=resolution)


def support_cells(m: EmpiricalMeasure, resolution: int, threshold: float = 0.0) -> np.ndarray:
    """Boolean mask of grid cells holding more than ``threshold`` samples."""
    return grid_counts(m, resolution) > threshold


def cells_to_arcs(mask: np.ndarray) -> list[Arc]:
    """Merge marked grid cells into maximal arcs, circularly."""
    r = mask.size
    if mask.all():
        return [Arc(0.0, 1.0)]
    if not mask.any():
        return []
    # rotate so the scan starts on an unmarked cell
    first_gap = int(np.argmin(mask))
    arcs = []
    run_start = None
    for i in range(1, r + 1):
        j = (first_gap + i) % r
        if mask[j] and run_start is None:
            run_start = j
        elif not mask[j] and run_start is not None:
            length = ((j - run_start) % r) / r
            arcs.append(Arc(run_start / r, length))
            run_start = None
    return sorted(arcs, key=lambda a: a.start)


def support_arcs(m: EmpiricalMeasure, resolution: int, threshold: float = 0.0) -> list[Arc]:
    """Maximal arcs made of grid cells whose mass exceeds ``threshold / N``."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    return cells_to_arcs(support_cells(m, resolution, threshold))


def _cdf_gap(a: EmpiricalMeasure, b: EmpiricalMeasure) -> np.ndarray:
    """Values of F_a - F_b just after each atom of either measure."""
    pts = np.concatenate([a.samples, b.samples])
    fa = np.searchsorted(a.samples, pts, "right") / a.count
    fb = np.searchsorted(b.samples, pts, "right") / b.count
    return fa - fb


def measure_distance(a: EmpiricalMeasure, b: EmpiricalMeasure, rotation_invariant: bool = False) -> float:
    """Kolmogorov distance between cumulative functions cut at 0.

    With ``rotation_invariant`` the cut point is also optimised over all
    sample points: moving the cut to ``c`` turns ``D = F_a - F_b`` into
    ``D - D(c)``.
    """
    a._require_samples()
    b._require_samples()
    d = np.concatenate([[0.0], _cdf_gap(a, b)])
    if rotation_invariant:
        return float(np.min(np.maximum(d.max() - d, d - d.min())))
    return float(np.abs(d).max())
