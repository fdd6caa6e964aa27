"""Named generator sets, one per dynamical regime, with expected verdicts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circle import Arc
from .homeo import IntervalMap, Mobius, PiecewiseLinear, Rotation, north_south, push_arc
from .walk import GeneratorSet

GOLDEN_SMALL = math.sqrt(5.0) - 2.0
SILVER = math.sqrt(2.0) - 1.0
INTERVAL = Arc(0.0, 0.5)

# (start, length) of the arcs used by the two-basins and swap-2 scenarios
BASIN_A = Arc(0.0, 0.4)
BASIN_B = Arc(0.5, 0.4)
SWAP_A = Arc(0.05, 0.25)
SWAP_B = Arc(0.55, 0.25)


@dataclass
class Scenario:
    name: str
    generator_set: GeneratorSet
    expected: dict = field(default_factory=dict)
    description: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "expected": self.expected,
            "generator_set": self.generator_set.to_dict(),
        }


def _rotations(seed):
    gs = GeneratorSet([("r1/4", Rotation(0.25), 0.5), ("r_golden", Rotation(GOLDEN_SMALL), 0.5)], seed)
    return gs, dict(trichotomy="isometry-like", d=1, period=1, sync=False, h_sign="zero"), (
        "two rotations, one irrational: Lebesgue measure is invariant")


def _pingpong(seed):
    gs = GeneratorSet([
        ("f1", IntervalMap.affine_map(1 / 3, 0.0, INTERVAL), 0.5),
        ("f2", IntervalMap.affine_map(1 / 3, 2 / 3, INTERVAL), 0.5),
    ], seed)
    return gs, dict(trichotomy="locally-contracting", d=1, period=1, sync=True, h_sign="positive",
                    sync_rate=-math.log(3.0), entropy=math.log(2.0)), (
        "t/3 and t/3 + 2/3 on [0, 1], embedded as the arc [0, 1/2]")


def _halving(seed):
    gs = GeneratorSet([
        ("h1", IntervalMap.affine_map(0.5, 0.0, INTERVAL), 0.5),
        ("h2", IntervalMap.affine_map(0.5, 0.5, INTERVAL), 0.5),
    ], seed)
    return gs, dict(trichotomy="locally-contracting", d=1, period=1, sync=True, h_sign="positive",
                    sync_rate=-math.log(2.0)), (
        "t/2 and t/2 + 1/2 on [0, 1]; images of [0, 1] have diameter exactly 2^-n")


def _north_south_rotation(seed):
    gs = GeneratorSet([
        ("ns", north_south(0.25, 0.75, 0.5), 0.5),
        ("r_silver", Rotation(SILVER), 0.5),
    ], seed)
    return gs, dict(trichotomy="locally-contracting", d=1, period=1, sync=True, h_sign="positive"), (
        "north-south map (attractor 1/4, repeller 3/4, slope 1/2) with an irrational rotation")


def _north_south(seed):
    gs = GeneratorSet([("ns", north_south(0.25, 0.75, 0.5), 1.0)], seed)
    return gs, dict(trichotomy="finite-orbit-like", d=1, period=1, sync=True, h_sign=None, plateaus=1), (
        "a single north-south map")


def _sl2(seed):
    c = math.cos(math.pi / 4)
    gs = GeneratorSet([
        ("diag", Mobius([[2.0, 0.0], [0.0, 0.5]]), 0.5),
        ("rot", Mobius([[c, -c], [c, c]]), 0.5),
    ], seed)
    return gs, dict(trichotomy="locally-contracting", d=1, period=1, sync=True, h_sign="positive"), (
        "projective action of diag(2, 1/2) and the rotation by pi/4")


def _pl_through(nodes):
    xs, ys = zip(*sorted(nodes))
    return PiecewiseLinear(xs, ys)


def _two_basins(seed):
    # each map sends A and B strictly inside themselves with 0.02 margins
    g1 = _pl_through([(0.0, 0.02), (0.4, 0.18), (0.5, 0.52), (0.9, 0.68)])
    g2 = _pl_through([(0.0, 0.22), (0.4, 0.38), (0.5, 0.72), (0.9, 0.88)])
    gs = GeneratorSet([("g1", g1, 0.5), ("g2", g2, 0.5)], seed)
    return gs, dict(trichotomy="locally-contracting", d=2, period=1, sync=False, h_sign="positive",
                    plateaus=2), (
        "invariant arcs [0, 0.4] and [0.5, 0.9], each carrying a contracting two-map system")


def _swap2(seed):
    # A = [0.05, 0.30] and B = [0.55, 0.80] are exchanged by both maps; each
    # map is x -> 1/2 + c + (x - c)/2 on A (c = 0.16, 0.24) and commutes with
    # the half turn, so phi(x + 1/2) = -phi(x) test functions alternate cleanly
    g1 = PiecewiseLinear([0.05, 0.30, 0.55, 0.80], [0.605, 0.73, 1.105, 1.23])
    g2 = PiecewiseLinear([0.05, 0.30, 0.55, 0.80], [0.645, 0.77, 1.145, 1.27])
    gs = GeneratorSet([("s1", g1, 0.5), ("s2", g2, 0.5)], seed)
    return gs, dict(trichotomy="locally-contracting", d=1, period=2, sync=False, h_sign="positive",
                    plateaus=2), (
        "two maps exchanging A and B with contraction into the interiors")


def _common_fixed_point(seed):
    # both maps fix t = 0 and t = 1; outside [0, 1/2] points drift to 0 = 1
    complement = [(0.75, 0.9)]
    g1 = IntervalMap([0.0, 0.2, 0.8, 1.0], [0.0, 0.35, 0.65, 1.0], INTERVAL, complement)
    g2 = IntervalMap([0.0, 0.2, 0.6, 0.9, 1.0], [0.0, 0.4, 0.6, 0.7, 1.0], INTERVAL, complement)
    gs = GeneratorSet([("c1", g1, 0.5), ("c2", g2, 0.5)], seed)
    return gs, dict(trichotomy="finite-orbit-like", d=2, period=1, sync=False, h_sign="positive",
                    interval_support=(0.5, 0.6)), (
        "maps of [0, 1] fixing both ends with interior attractors at t = 0.5 and t = 0.6")


CATALOG = {
    "rotations": _rotations,
    "pingpong-interval": _pingpong,
    "halving-fixed": _halving,
    "north-south-rotation": _north_south_rotation,
    "north-south": _north_south,
    "sl2-hyperbolic": _sl2,
    "two-basins": _two_basins,
    "swap-2": _swap2,
    "common-fixed-point": _common_fixed_point,
}


def scenario_names() -> list[str]:
    return list(CATALOG)


def build_scenario(name: str, seed: int = 0) -> Scenario:
    try:
        builder = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; catalog: {', '.join(CATALOG)}") from None
    gs, expected, description = builder(seed)
    if name == "swap-2":
        _check_swap(gs)
    if name == "two-basins":
        _check_basins(gs)
    return Scenario(name, gs, expected, description)


def strictly_inside(inner: Arc, outer: Arc) -> bool:
    """``inner`` lies in the interior of ``outer``."""
    lo = (inner.start - outer.start) % 1.0
    return 0.0 < lo and lo + inner.length < outer.length


def _check_swap(gs: GeneratorSet):
    for f in gs.maps:
        if not (strictly_inside(push_arc(f, SWAP_A), SWAP_B) and strictly_inside(push_arc(f, SWAP_B), SWAP_A)):
            raise AssertionError("swap-2 generator does not exchange A and B")


def _check_basins(gs: GeneratorSet):
    for f in gs.maps:
        for arc in (BASIN_A, BASIN_B):
            img = push_arc(f, arc)
            margin = (img.start - arc.start) % 1.0
            if not (margin >= 0.02 - 1e-12 and arc.length - margin - img.length >= 0.02 - 1e-12):
                raise AssertionError("two-basins generator does not keep its arcs with margin")


def spread_points(k: int, offset: float = 0.5) -> np.ndarray:
    """``k`` evenly spread circle points ``(j + offset) / k``."""
    return (np.arange(k) + offset) / k
