"""Transfer operator on grid functions, arc-transition graphs and the
structure analyses built on them: period detection, staircase profiles,
an invariant-measure proxy and the trichotomy classifier."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from functools import reduce

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .circle import wrap
from .estimators import NO_CONTRACTION, decompose_ergodic, estimate_lambda_con
from .grid import GridFunction
from .measures import grid_counts
from .walk import GeneratorSet, iterate_lifts, parallel_map

UNRESOLVED = "profile not yet resolved"


# transfer operator

def transfer_apply(gs: GeneratorSet, phi: GridFunction) -> GridFunction:
    """``(P phi)(x) = sum_i w_i phi(f_i(x))`` at the grid nodes."""
    nodes = phi.nodes
    out = np.zeros(phi.resolution)
    for g in gs.generators:
        out += g.weight * phi(g.map(nodes))
    return GridFunction(out)


@dataclass
class TransferResult:
    iterates_norms: list
    cesaro: GridFunction
    last: GridFunction
    previous: GridFunction
    cesaro_tail: GridFunction

    @property
    def oscillation(self) -> float:
        """Sup-norm gap between the last two plain iterates."""
        return (self.last - self.previous).sup_norm()

    @property
    def cesaro_tail_gap(self) -> float:
        """Sup-norm distance from the Cesàro average to its own tail average."""
        return (self.cesaro - self.cesaro_tail).sup_norm()

    def to_dict(self) -> dict:
        return {
            "iterates_norms": self.iterates_norms,
            "oscillation": self.oscillation,
            "cesaro_tail_gap": self.cesaro_tail_gap,
            "cesaro_sup": self.cesaro.sup_norm(),
            "last_sup": self.last.sup_norm(),
        }


def transfer_iterate(gs: GeneratorSet, phi: GridFunction, n: int) -> TransferResult:
    """Iterate ``P`` ``n`` times.

    ``cesaro`` averages the iterates ``P^0 phi .. P^(n-1) phi``; the tail
    average is the mean of the Cesàro averages ``C_k`` for ``n/2 <= k <= n``.
    """
    if n < 1:
        raise ValueError("need at least one iteration")
    iterates = [phi.values]
    cur = phi
    for _ in range(n):
        cur = transfer_apply(gs, cur)
        iterates.append(cur.values)
    it = np.array(iterates)
    running = np.cumsum(it[:-1], axis=0) / np.arange(1, n + 1)[:, None]
    cesaro = running[-1]
    tail = running[max(n // 2 - 1, 0):].mean(axis=0)
    norms = np.abs(it - cesaro[None, :]).max(axis=1)
    return TransferResult(
        iterates_norms=[float(v) for v in norms],
        cesaro=GridFunction(cesaro),
        last=GridFunction(it[-1]),
        previous=GridFunction(it[-2]),
        cesaro_tail=GridFunction(tail),
    )


# arc-transition graph

def _cell_cover(lo: float, hi: float, m: int) -> range:
    """Cells ``k`` (unreduced) meeting the lift interval ``[lo, hi]`` in positive length."""
    a, b = lo * m, hi * m
    if b <= a:
        k = math.floor(a)
        return range(k, k + 1)
    return range(math.floor(a), math.ceil(b))


def _cell_images(f, m: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.arange(m + 1) / m
    lifts = np.asarray(f.lift(edges))
    return lifts[:-1], lifts[1:]


@dataclass
class ArcGraph:
    resolution: int
    edges: dict

    @classmethod
    def build(cls, gs: GeneratorSet, resolution: int) -> "ArcGraph":
        m = int(resolution)
        if m < 8:
            raise ValueError("resolution must be at least 8")

        def one(f):
            lo, hi = _cell_images(f, m)
            out = []
            for j in range(m):
                for k in _cell_cover(lo[j], hi[j], m):
                    out.append((j, k % m))
            return sorted(set(out))

        lists = parallel_map(one, gs.maps)
        return cls(m, dict(zip(gs.labels, lists)))

    def union_matrix(self) -> csr_matrix:
        pairs = sorted({e for lst in self.edges.values() for e in lst})
        src = np.array([p[0] for p in pairs])
        dst = np.array([p[1] for p in pairs])
        m = self.resolution
        return csr_matrix((np.ones(len(pairs)), (src, dst)), shape=(m, m))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["generator", "src", "dst"])
            for label, lst in self.edges.items():
                for j, k in lst:
                    w.writerow([label, j, k])


@dataclass
class PeriodResult:
    period: int
    classes: list
    recurrent_classes: list = field(default_factory=list)
    class_periods: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _class_period(adj: csr_matrix, members: np.ndarray) -> tuple[int, list]:
    """Period of a strongly connected class and its cyclic partition."""
    sub = adj[members][:, members].tocsr()
    order, pred = breadth_first_order(sub, 0, directed=True, return_predecessors=True)
    level = np.full(members.size, -1)
    level[0] = 0
    for v in order[1:]:
        level[v] = level[pred[v]] + 1
    coo = sub.tocoo()
    diffs = level[coo.row] + 1 - level[coo.col]
    p = reduce(math.gcd, (int(abs(d)) for d in diffs), 0) or 1
    parts = [sorted(int(members[i]) for i in np.nonzero(level % p == r)[0]) for r in range(p)]
    return p, parts


def decomposability_period(gs: GeneratorSet, resolution: int = 64) -> PeriodResult:
    """Smallest cyclic period over the closed recurrent classes of the arc graph."""
    graph = ArcGraph.build(gs, resolution)
    adj = graph.union_matrix()
    ncomp, labels = connected_components(adj, directed=True, connection="strong")
    coo = adj.tocoo()
    leaves = np.zeros(ncomp, dtype=bool)
    np.logical_or.at(leaves, labels[coo.row], labels[coo.row] != labels[coo.col])
    closed = [c for c in range(ncomp) if not leaves[c]]
    recurrent, periods, partitions = [], [], []
    for c in closed:
        members = np.nonzero(labels == c)[0]
        p, parts = _class_period(adj, members)
        recurrent.append([int(i) for i in members])
        periods.append(p)
        partitions.append(parts)
    best = int(np.argmin(periods))
    period = periods[best]
    classes = partitions[best] if period >= 2 else []
    return PeriodResult(period, classes, recurrent, periods)


# staircase profile

@dataclass
class StaircaseProfile:
    plateau_count: int | None
    jump_locations: list
    flag: str | None = None
    largest_gap: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def staircase_profile(
    gs: GeneratorSet,
    trajectory_index: int = 0,
    n: int = 200,
    resolution: int = 256,
    jump_threshold: float | None = None,
) -> StaircaseProfile:
    """Plateaus and jumps of ``f_w^n`` sampled at the grid nodes.

    A jump is a neighbouring node pair whose images are at least ``Δ``
    apart; jumps at consecutive pairs form one cluster, reported at its
    midpoint. Without any jump the profile is flagged unresolved.
    """
    if n < 100:
        raise ValueError("need n >= 100")
    m = int(resolution)
    if m < 256:
        raise ValueError("need resolution >= 256")
    delta = 16.0 / m if jump_threshold is None else float(jump_threshold)
    nodes = np.arange(m) / m
    lifts = iterate_lifts(gs, gs.word(trajectory_index, n), nodes)
    gaps = np.diff(lifts, append=lifts[0] + 1.0)
    jump = gaps >= delta
    if not jump.any() or jump.all():
        return StaircaseProfile(None, [], UNRESOLVED, float(gaps.max()))
    # clusters of consecutive jump pairs, scanned from a non-jump pair
    start = int(np.argmin(jump))
    locations = []
    run = None
    for i in range(1, m + 1):
        j = (start + i) % m
        if jump[j] and run is None:
            run = j
        elif not jump[j] and run is not None:
            # pairs run .. j-1 span nodes run .. j
            span = (j - run) % m
            locations.append(float(wrap((run + span / 2) / m)))
            run = None
    return StaircaseProfile(len(locations), sorted(locations), None, float(gaps.max()))


# invariant-measure proxy

def pushforward_matrix(f, m: int) -> np.ndarray:
    """Column-stochastic Ulam matrix: mass of cell ``j`` split over the
    cells covering its image, proportional to overlap length."""
    lo, hi = _cell_images(f, m)
    M = np.zeros((m, m))
    for j in range(m):
        length = hi[j] - lo[j]
        cover = _cell_cover(lo[j], hi[j], m)
        if length <= 0:
            M[cover[0] % m, j] += 1.0
            continue
        for k in cover:
            ov = min(hi[j], (k + 1) / m) - max(lo[j], k / m)
            if ov > 0:
                M[k % m, j] += ov / length
    return M


@dataclass
class ResidualResult:
    residual: float
    candidate: np.ndarray

    def to_dict(self) -> dict:
        return {"residual": self.residual, "candidate": self.candidate.tolist()}


def invariant_measure_residual(gs: GeneratorSet, resolution: int = 128, iterations: int = 500) -> ResidualResult:
    """Averaged Ulam iteration from uniform weights; the residual is the worst
    per-generator ``l1`` defect of the final candidate."""
    m = int(resolution)
    if m < 32:
        raise ValueError("resolution must be at least 32")
    mats = parallel_map(lambda f: pushforward_matrix(f, m), gs.maps)
    mean = sum(w * M for w, M in zip(gs.weights, mats))
    w = np.full(m, 1.0 / m)
    for _ in range(iterations):
        w = mean @ w
        w /= w.sum()
    residual = max(float(np.abs(M @ w - w).sum()) for M in mats)
    return ResidualResult(residual, w)


# trichotomy classifier

@dataclass
class ClassifierConfig:
    """Heuristic thresholds of the classifier."""
    residual_tol: float = 0.02
    max_cells: int = 3
    slope_tol: float = 0.05
    resolution: int = 256
    starts: int = 16
    burn_in: int = 1000
    samples: int = 20000
    residual_resolution: int = 128
    residual_iterations: int = 500
    lambda_steps: int = 1000
    lambda_trajectories: int = 8


@dataclass
class Classification:
    verdict: str
    diagnostics: dict

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "diagnostics": self.diagnostics}


def _finite_class(gs: GeneratorSet, mu, cfg: ClassifierConfig) -> bool:
    counts = grid_counts(mu, cfg.resolution)
    cells = counts > 0
    if cells.sum() > cfg.max_cells:
        return False
    for f in gs.maps:
        img = np.minimum((np.asarray(f(mu.samples)) * cfg.resolution).astype(int), cfg.resolution - 1)
        if not cells[img].all():
            return False
    return True


def classify_trichotomy(gs: GeneratorSet, config: ClassifierConfig | None = None) -> Classification:
    """Heuristic verdict: finite-orbit-like, isometry-like or locally-contracting.

    Finite orbits are detected as stationary classes occupying at most
    ``max_cells`` grid cells and mapped into them by every generator.
    Returns ``inconclusive`` when the residual and the slope disagree.
    """
    cfg = config or ClassifierConfig()
    starts = (np.arange(cfg.starts) + 0.5) / cfg.starts
    dec = decompose_ergodic(gs, starts, cfg.burn_in, cfg.samples, cfg.resolution,
                            basin_resolution=8, repeats=1, basin_steps=0)
    cell_counts = [int((grid_counts(mu, cfg.resolution) > 0).sum()) for mu in dec.measures]
    diag = {"d": dec.d, "class_cells": cell_counts}
    finite = [i for i, mu in enumerate(dec.measures) if _finite_class(gs, mu, cfg)]
    diag["finite_classes"] = finite
    if finite:
        return Classification("finite-orbit-like", diag)

    res = invariant_measure_residual(gs, cfg.residual_resolution, cfg.residual_iterations)
    big = int(np.argmax([mu.count for mu in dec.measures]))
    mu = dec.measures[big]
    x = float(mu.samples[mu.count // 2])
    lam = estimate_lambda_con(gs, x, cfg.lambda_steps, cfg.lambda_trajectories)
    diag.update(residual=res.residual, slope=lam.slope, flag=lam.flag, probe_point=x)
    small = res.residual <= cfg.residual_tol
    flat = lam.flag == NO_CONTRACTION
    if small and flat:
        return Classification("isometry-like", diag)
    if small and lam.slope < -cfg.slope_tol:
        return Classification("inconclusive", diag)
    if lam.slope < 0 and not flat:
        return Classification("locally-contracting", diag)
    return Classification("inconclusive", diag)
