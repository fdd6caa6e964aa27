"""Constructive circle homeomorphisms.

Every map is handled through its lift ``F: R -> R`` with ``F(x + 1) = F(x) + 1``;
points on the circle are the fractional parts. Only orientation-preserving
maps are built here, so ``orientation`` is always ``+1``.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .circle import Arc, wrap

DET_TOL = 1e-9
COMPOSITE_CAP = 64
RESAMPLE_GRID = 4096


class Homeo:
    """Base class: subclasses implement ``_lift_unit`` on [0, 1)."""

    orientation = 1

    def _lift_unit(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def lift(self, x):
        """Continuous lift evaluated at arbitrary reals."""
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        out = self._lift_unit(x - k) + k
        return float(out) if out.ndim == 0 else out

    def __call__(self, x):
        return wrap(self.lift(x))

    def inverse(self) -> "Homeo":
        raise NotImplementedError

    @property
    def is_identity(self) -> bool:
        return False

    def to_dict(self) -> dict:
        raise NotImplementedError


class Rotation(Homeo):
    def __init__(self, angle: float):
        self.angle = wrap(float(angle))

    def lift(self, x):
        out = np.asarray(x, dtype=float) + self.angle
        return float(out) if out.ndim == 0 else out

    def _lift_unit(self, x):
        return x + self.angle

    def inverse(self):
        return Rotation(-self.angle)

    @property
    def is_identity(self):
        return self.angle == 0.0

    def to_dict(self):
        return {"type": "rotation", "angle": self.angle}

    def __repr__(self):
        return f"Rotation({self.angle!r})"


def identity() -> Rotation:
    return Rotation(0.0)


class Mobius(Homeo):
    """Projective action of a matrix in SL(2, R).

    The point ``x`` stands for the line through ``(cos pi x, sin pi x)``.
    """

    def __init__(self, matrix):
        m = np.array(matrix, dtype=float).reshape(2, 2)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det - 1.0) > DET_TOL:
            raise ValueError(f"not unimodular: det = {det!r}")
        self.matrix = m
        self.matrix.setflags(write=False)
        self._phi0 = math.atan2(m[1, 0], m[0, 0])
        self._base = (self._phi0 / math.pi) % 1.0

    def _lift_unit(self, x):
        theta = np.pi * x
        c, s = np.cos(theta), np.sin(theta)
        m = self.matrix
        phi = np.arctan2(m[1, 0] * c + m[1, 1] * s, m[0, 0] * c + m[0, 1] * s)
        d = np.mod(phi - self._phi0, 2 * np.pi)
        # the image direction sweeps exactly half a turn over [0, 1)
        d = np.where(d > 1.5 * np.pi, d - 2 * np.pi, d)
        return self._base + d / np.pi

    def inverse(self):
        a, b, c, d = self.matrix.ravel()
        return Mobius([[d, -b], [-c, a]])

    @property
    def is_identity(self):
        return bool(np.array_equal(self.matrix, np.eye(2)))

    def to_dict(self):
        return {"type": "mobius", "matrix": self.matrix.tolist()}

    def __repr__(self):
        return f"Mobius({self.matrix.tolist()!r})"


class PiecewiseLinear(Homeo):
    """Piecewise-linear circle map through nodes ``(xs[i], ys[i])``.

    ``xs`` are strictly increasing points of [0, 1); ``ys`` are lift values,
    strictly increasing with ``ys[-1] < ys[0] + 1`` so the closing segment
    has positive slope too.
    """

    def __init__(self, xs: Sequence[float], ys: Sequence[float]):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 1:
            raise ValueError("breakpoints must be two equal-length 1-d sequences")
        if xs[0] < 0.0 or xs[-1] >= 1.0 or np.any(np.diff(xs) <= 0):
            raise ValueError("breakpoint inputs must be strictly increasing in [0, 1)")
        if np.any(np.diff(ys) <= 0) or not ys[-1] < ys[0] + 1.0:
            raise ValueError("not a homeomorphism: lift must be strictly increasing")
        self.xs = xs
        self.ys = ys
        self._xe = np.concatenate(([xs[-1] - 1.0], xs, [xs[0] + 1.0]))
        self._ye = np.concatenate(([ys[-1] - 1.0], ys, [ys[0] + 1.0]))
        for arr in (self.xs, self.ys, self._xe, self._ye):
            arr.setflags(write=False)

    def _lift_unit(self, x):
        return np.interp(x, self._xe, self._ye)

    def slopes(self) -> np.ndarray:
        return np.diff(self._ye[1:]) / np.diff(self._xe[1:])

    def inverse(self):
        k = np.floor(self.ys)
        inputs = self.ys - k
        outputs = self.xs - k
        order = np.argsort(inputs, kind="stable")
        return PiecewiseLinear(inputs[order], outputs[order])

    @property
    def is_identity(self):
        return bool(np.allclose(self.ys, self.xs, rtol=0, atol=0))

    def to_dict(self):
        return {"type": "pl", "xs": self.xs.tolist(), "ys": self.ys.tolist()}

    def __repr__(self):
        return f"PiecewiseLinear(xs={self.xs.tolist()!r}, ys={self.ys.tolist()!r})"


class IntervalMap(Homeo):
    """Injective self-map of an arc, extended to a circle homeomorphism.

    The arc ``domain`` carries the chart ``t -> start + length * t`` for
    ``t`` in [0, 1]. The interval map is piecewise linear through
    ``(ts[i], ss[i])``; with two nodes it is affine and is evaluated by the
    exact formula ``slope * t + offset`` so dyadic examples stay bit exact.
    Outside the domain the map follows ``complement`` nodes ``(x, y)`` given
    as lift coordinates with ``start + length < x < start + 1``, or a single
    linear segment by default.
    """

    def __init__(self, ts, ss, domain: Arc = Arc(0.0, 0.5), complement=()):
        ts = np.asarray(ts, dtype=float)
        ss = np.asarray(ss, dtype=float)
        if ts.size < 2 or ts[0] != 0.0 or ts[-1] != 1.0 or np.any(np.diff(ts) <= 0):
            raise ValueError("interval nodes must run strictly from t=0 to t=1")
        if np.any(np.diff(ss) <= 0):
            raise ValueError("not a homeomorphism: interval map must be increasing")
        if ss[0] < 0.0 or ss[-1] > 1.0:
            raise ValueError("interval map must send its domain into itself")
        if domain.is_full:
            raise ValueError("interval domain must be a proper arc")
        self.ts, self.ss, self.domain = ts, ss, domain
        self.complement = [tuple(map(float, p)) for p in complement]
        a, L = domain.start, domain.length
        pts = [(a + L * t, a + L * s) for t, s in zip(ts, ss)]
        pts += self.complement
        pts.sort()
        xs = np.array([p[0] for p in pts])
        ys = np.array([p[1] for p in pts])
        k = np.floor(xs)
        order = np.argsort(xs - k, kind="stable")
        self.underlying = PiecewiseLinear((xs - k)[order], (ys - k)[order])
        self.affine = ts.size == 2
        if self.affine:
            self.slope = ss[1] - ss[0]
            self.offset = ss[0]

    @classmethod
    def affine_map(cls, slope: float, offset: float, domain: Arc = Arc(0.0, 0.5)):
        obj = cls([0.0, 1.0], [offset, offset + slope], domain)
        obj.slope, obj.offset = float(slope), float(offset)
        return obj

    def to_chart(self, x):
        """Circle coordinate -> interval coordinate."""
        return wrap(np.asarray(x, dtype=float) - self.domain.start) / self.domain.length

    def from_chart(self, t):
        return wrap(self.domain.start + self.domain.length * np.asarray(t, dtype=float))

    def interval_eval(self, t):
        t = np.asarray(t, dtype=float)
        if self.affine:
            return self.slope * t + self.offset
        return np.interp(t, self.ts, self.ss)

    def _lift_unit(self, x):
        out = self.underlying._lift_unit(x)
        if not self.affine:
            return out
        a, L = self.domain.start, self.domain.length
        off = x - a
        off = np.where(off < 0, off + 1.0, off)
        inside = off <= L
        exact = a + L * (self.slope * (off / L) + self.offset)
        # lift branch: images of points stored as x - 1 + a stay one turn down
        exact = exact - np.where(x < a, 1.0, 0.0)
        return np.where(inside, exact, out)

    def inverse(self):
        return self.underlying.inverse()

    def to_dict(self):
        d = {"type": "interval_affine" if self.affine else "interval_pl",
             "domain": [self.domain.start, self.domain.length]}
        if self.affine:
            d.update(slope=self.slope, offset=self.offset)
        else:
            d.update(ts=self.ts.tolist(), ss=self.ss.tolist())
        if self.complement:
            d["complement"] = [list(p) for p in self.complement]
        return d

    def __repr__(self):
        return f"IntervalMap({self.to_dict()!r})"


class Composite(Homeo):
    """Composition of ``factors`` applied in list order (first factor first)."""

    def __init__(self, factors: Sequence[Homeo]):
        self.factors = tuple(factors)
        self.resample_error = 0.0

    def lift(self, x):
        y = np.asarray(x, dtype=float)
        for f in self.factors:
            y = np.asarray(f.lift(y))
        return float(y) if y.ndim == 0 else y

    def _lift_unit(self, x):
        return np.asarray(self.lift(x))

    def inverse(self):
        return Composite([f.inverse() for f in reversed(self.factors)])

    @property
    def is_identity(self):
        return len(self.factors) == 0

    def to_dict(self):
        return {"type": "composite", "factors": [f.to_dict() for f in self.factors]}

    def __repr__(self):
        return f"Composite({list(self.factors)!r})"


def evaluate(f: Homeo, x):
    return f(x)


def inverse(f: Homeo) -> Homeo:
    return f.inverse()


def _merge(g: Homeo, f: Homeo) -> Homeo | None:
    """g o f as a single factor when both belong to a closed family."""
    if isinstance(g, Rotation) and isinstance(f, Rotation):
        return Rotation(g.angle + f.angle)
    if isinstance(g, Mobius) and isinstance(f, Mobius):
        return Mobius(g.matrix @ f.matrix)
    return None


def _factors(f: Homeo) -> list[Homeo]:
    if isinstance(f, Composite):
        return list(f.factors)
    return [] if f.is_identity else [f]


def compose(g: Homeo, f: Homeo, cap: int = COMPOSITE_CAP) -> Homeo:
    """Return ``g o f``."""
    merged: list[Homeo] = []
    for h in _factors(f) + _factors(g):
        if merged:
            m = _merge(h, merged[-1])
            if m is not None:
                merged.pop()
                if not m.is_identity:
                    merged.append(m)
                continue
        merged.append(h)
    if not merged:
        return identity()
    if len(merged) == 1:
        return merged[0]
    comp = Composite(merged)
    if len(merged) > cap:
        return collapse(comp)
    return comp


def collapse(comp: Composite, grid: int = RESAMPLE_GRID, probes: int = 16) -> Homeo:
    """Resample a long composite as a piecewise-linear map.

    Strong contraction can flatten the lift below float resolution; the
    composite is then returned unchanged since the resample would not be a
    homeomorphism.
    """
    xs = np.arange(grid) / grid
    ys = np.asarray(comp.lift(xs))
    try:
        pl = PiecewiseLinear(xs, ys)
    except ValueError:
        return comp
    px = (np.arange(probes) + 0.5) / probes
    err = np.max(np.abs(np.asarray(pl.lift(px)) - np.asarray(comp.lift(px))))
    pl.resample_error = float(err)
    return pl


def push_arc(f: Homeo, arc: Arc) -> Arc:
    """Image arc ``f(arc)`` computed from the lift at the endpoints."""
    if arc.is_full:
        raise ValueError("full circle has no proper image arc")
    if isinstance(f, Rotation):
        return Arc(f(arc.start), arc.length)  # isometry: keep the length exact
    lo = f.lift(arc.start)
    hi = f.lift(arc.start + arc.length)
    return Arc(lo, min(1.0, max(0.0, hi - lo)))


def north_south(attractor: float, repeller: float, contraction: float = 0.5) -> PiecewiseLinear:
    """Piecewise-linear map with exactly two fixed points.

    Slope is ``contraction`` at the attractor and ``1 / contraction`` at the
    repeller; slope 1 in between.
    """
    s = float(contraction)
    if not 0.0 < s < 1.0:
        raise ValueError("contraction must lie in (0, 1)")
    a = wrap(attractor)
    d1 = wrap(repeller - a)
    if d1 == 0.0:
        raise ValueError("attractor and repeller must differ")
    d2 = 1.0 - d1
    offsets = [0.0, d1 / 2, d1 - s * d1 / 2, d1, d1 + s * d2 / 2, 1.0 - d2 / 2]
    images = [0.0, s * d1 / 2, d1 / 2, d1, d1 + d2 / 2, 1.0 - s * d2 / 2]
    pts = sorted(
        (wrap(a + p), a + q - math.floor(a + p)) for p, q in zip(offsets, images)
    )
    return PiecewiseLinear([p[0] for p in pts], [p[1] for p in pts])
