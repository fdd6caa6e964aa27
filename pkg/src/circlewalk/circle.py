"""Points and closed arcs on the circle R/Z, represented in [0, 1)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

POINT_TOL = 1e-12


def wrap(x):
    """Reduce a real (or array) to its representative in [0, 1)."""
    y = np.mod(x, 1.0)
    # mod can round up to exactly 1.0 for tiny negative inputs
    if np.ndim(y) == 0:
        y = float(y)
        return 0.0 if y >= 1.0 else y
    y = np.asarray(y, dtype=float)
    y[y >= 1.0] = 0.0
    return y


def circle_dist(a, b):
    """Length of the shorter arc between ``a`` and ``b``; works elementwise."""
    # abs before reducing keeps the result exactly symmetric in a, b
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    d = np.minimum(d, 1.0 - d)
    return float(d) if np.ndim(d) == 0 else d


def points_equal(a: float, b: float, tol: float = POINT_TOL) -> bool:
    return circle_dist(a, b) <= tol


@dataclass(frozen=True)
class Arc:
    """Closed arc swept counterclockwise from ``start`` over ``length``.

    ``length == 1`` is the full circle.
    """

    start: float
    length: float

    def __post_init__(self):
        if not 0.0 <= self.length <= 1.0:
            raise ValueError(f"arc length must lie in [0, 1], got {self.length}")
        object.__setattr__(self, "start", wrap(float(self.start)))
        object.__setattr__(self, "length", float(self.length))

    @property
    def end(self) -> float:
        return wrap(self.start + self.length)

    @property
    def is_full(self) -> bool:
        return self.length >= 1.0

    def contains(self, x) -> bool | np.ndarray:
        return arc_contains(self, x)

    def complement(self) -> "Arc":
        if self.is_full:
            raise ValueError("full circle has no complement arc")
        return Arc(self.end, 1.0 - self.length)

    def midpoint(self) -> float:
        return wrap(self.start + 0.5 * self.length)

    def intersects(self, other: "Arc") -> bool:
        return (
            arc_contains(self, other.start)
            or arc_contains(other, self.start)
        )


def arc_contains(arc: Arc, x):
    """True where ``x`` lies on the closed arc (vectorised over ``x``)."""
    if arc.is_full:
        return True if np.ndim(x) == 0 else np.ones(np.shape(x), dtype=bool)
    offset = wrap(np.asarray(x, dtype=float) - arc.start)
    # endpoints recomputed through wrap() may be off by a few ulps
    inside = (offset <= arc.length + POINT_TOL) | (offset >= 1.0 - POINT_TOL)
    return bool(inside) if np.ndim(inside) == 0 else inside


def diam_points(xs) -> float:
    """Length of the shortest arc containing every point of ``xs``."""
    pts = np.sort(wrap(np.atleast_1d(np.asarray(xs, dtype=float))))
    if pts.size == 0:
        raise ValueError("empty point set")
    if pts.size == 1:
        return 0.0
    gaps = np.diff(pts, append=pts[0] + 1.0)
    return float(max(0.0, 1.0 - gaps.max()))


def enclosing_arc(xs) -> Arc:
    """The shortest arc containing ``xs`` (the complement of the largest gap)."""
    pts = np.sort(wrap(np.atleast_1d(np.asarray(xs, dtype=float))))
    if pts.size == 0:
        raise ValueError("empty point set")
    gaps = np.diff(pts, append=pts[0] + 1.0)
    k = int(np.argmax(gaps))
    start = pts[(k + 1) % pts.size]
    return Arc(start, max(0.0, 1.0 - gaps[k]))
