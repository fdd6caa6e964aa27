"""Monte-Carlo estimators: contraction exponents, stationary measures and
their ergodic decomposition, approximated Jacobians and entropy, and
synchronization of the two-point motion."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .circle import Arc, circle_dist, wrap
from .grid import GridFunction
from .homeo import push_arc
from .measures import EmpiricalMeasure, arc_mass, cells_to_arcs, support_cells
from .walk import GeneratorSet, WalkStream, run_points

DEFAULT_SCALES = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
DIST_FLOOR = 1e-12
NO_CONTRACTION = "no contraction observed"
# trajectory-index bases, so unrelated estimators never share a random word
BASIN_STREAMS = 1 << 20
PROBE_STREAM = 1 << 30
ENTROPY_LAMBDA_STREAMS = 1 << 31


class EstimatorError(RuntimeError):
    pass


def _ols(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and coefficient of determination."""
    if t.size < 2:
        return 0.0, 0.0
    tc = t - t.mean()
    yc = y - y.mean()
    sxx = float(tc @ tc)
    if sxx == 0.0:
        return 0.0, 0.0
    slope = float(tc @ yc) / sxx
    syy = float(yc @ yc)
    r2 = 1.0 if syy == 0.0 else min(1.0, slope * slope * sxx / syy)
    return slope, r2


@dataclass
class ExponentEstimate:
    point: float
    slope: float
    r2: float
    steps_used: int
    trajectories: int
    lambda_bar: float = 0.0
    probe_scale: float | None = None
    flag: str | None = None
    slopes: list = field(default_factory=list)
    # (trajectories, n + 1) stitched log-distances at the chosen scale
    series: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("series")
        return d


def contraction_series(gs: GeneratorSet, x: float, n: int, trajectory_indices, scales=DEFAULT_SCALES, floor: float = DIST_FLOOR):
    """Stitched log-distance of pairs ``(x, x + s)`` under common words.

    When a pair gets closer than ``floor`` its partner is re-seeded at
    distance ``s`` on the same side and the lost ``log(d / s)`` is carried
    in an offset, so the series keeps measuring contraction after the
    float floor. Returns ``(logd, window_start)``: ``logd`` has shape
    ``(T, n + 1, S)``; ``window_start[t, k]`` is the first step at which
    the pair is strictly closer than its starting scale, or -1.
    """
    scales = np.asarray(scales, dtype=float)
    idx = list(trajectory_indices)
    words = gs.words(idx, n)
    T, S = len(idx), scales.size
    base = np.full(T, wrap(x))
    partner = wrap(base[:, None] + scales[None, :])
    offset = np.zeros((T, S))
    logd = np.empty((T, n + 1, S))
    logd[:, 0] = np.log(scales)[None, :]
    start = np.full((T, S), -1)
    # rounding noise in the distance of an isometric pair stays far below this
    below = scales * (1.0 - 1e-9)
    for step in range(n):
        pts = np.concatenate([base[:, None], partner], axis=1)
        pts = _apply_rows(gs, words[:, step], pts)
        base, partner = pts[:, 0], pts[:, 1:]
        d = circle_dist(base[:, None], partner)
        hit = (start < 0) & (d < below[None, :])
        start[hit] = step + 1
        small = d < floor
        logd[:, step + 1] = offset + np.log(np.maximum(d, 1e-300))
        if small.any():
            side = np.where(wrap(partner - base[:, None]) < 0.5, 1.0, -1.0)
            dd = np.where(d > 0, d, floor * 1e-3)
            offset = np.where(small, offset + np.log(dd / scales[None, :]), offset)
            reseeded = wrap(base[:, None] + side * scales[None, :])
            partner = np.where(small, reseeded, partner)
    return logd, start


def _apply_rows(gs: GeneratorSet, letters: np.ndarray, pts: np.ndarray) -> np.ndarray:
    out = np.empty_like(pts)
    for g, f in enumerate(gs.maps):
        rows = letters == g
        if rows.any():
            out[rows] = f(pts[rows])
    return out


def estimate_lambda_con(
    gs: GeneratorSet,
    x: float,
    n: int = 2000,
    trajectories: int = 16,
    probe_scales=DEFAULT_SCALES,
    first_trajectory: int = 0,
    floor: float = DIST_FLOOR,
) -> ExponentEstimate:
    """Per-step contraction rate of nearby pairs started at ``x``.

    Each trajectory regresses the stitched log-distance on the step index
    from the step the pair first contracts below its probe scale. The
    reported slope is the median over trajectories at the smallest scale
    where most windows cover at least ``n / 2`` steps; ``lambda_bar`` is
    the mean at that scale.
    """
    if n < 100:
        raise ValueError("need at least 100 steps")
    if trajectories < 1:
        raise ValueError("need at least one trajectory")
    scales = np.asarray(probe_scales, dtype=float)
    if np.any(scales <= 0) or np.any(scales >= 0.25) or np.any(np.diff(scales) >= 0):
        raise ValueError("probe scales must be decreasing values in (0, 1/4)")
    idx = range(first_trajectory, first_trajectory + trajectories)
    logd, start = contraction_series(gs, x, n, idx, scales, floor)
    if np.all(start < 0):
        return ExponentEstimate(wrap(x), 0.0, 0.0, 0, trajectories, 0.0, None, NO_CONTRACTION,
                                [0.0] * trajectories)
    coverage = np.where(start >= 0, n - start + 1, 0)
    adequate = np.median(coverage, axis=0) >= n / 2
    if adequate.any():
        k = int(np.nonzero(adequate)[0][-1])
    else:
        k = int(np.argmax(np.median(coverage, axis=0)))
    steps = np.arange(n + 1, dtype=float)
    slopes, r2s, used = [], [], []
    for t in range(trajectories):
        s0 = start[t, k]
        if s0 < 0 or n - s0 + 1 < 2:
            slopes.append(0.0)
            r2s.append(0.0)
            used.append(0)
            continue
        sl, r2 = _ols(steps[s0:], logd[t, s0:, k])
        slopes.append(sl)
        r2s.append(r2)
        used.append(n - s0 + 1)
    order = np.argsort(slopes, kind="stable")
    mid = int(order[len(order) // 2])
    return ExponentEstimate(
        point=wrap(x),
        slope=float(np.median(slopes)),
        r2=float(r2s[mid]),
        steps_used=int(np.median(used)),
        trajectories=trajectories,
        lambda_bar=float(np.mean(slopes)),
        probe_scale=float(scales[k]),
        flag=None,
        slopes=[float(s) for s in slopes],
        series=logd[:, :, k],
    )


def estimate_stationary(
    gs: GeneratorSet,
    x0: float,
    burn_in: int = 1000,
    samples: int = 20000,
    trajectory_index: int = 0,
    trajectories: int = 1,
) -> EmpiricalMeasure:
    """Empirical measure of ``f^n(x0)`` for ``burn_in < n <= burn_in + samples``.

    With ``trajectories > 1`` the samples are pooled from that many
    independent words, each contributing ``samples // trajectories`` points.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    per = samples // trajectories
    idx = range(trajectory_index, trajectory_index + trajectories)
    orbit = run_points(gs, gs.words(idx, burn_in + per), np.array([x0]))[:, burn_in + 1:, 0]
    return EmpiricalMeasure(orbit.ravel())


@dataclass
class ErgodicDecomposition:
    measures: list
    supports: list
    d: int
    basin_estimates: list
    start_classes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "supports": [[[a.start, a.length] for a in arcs] for arcs in self.supports],
            "sample_counts": [m.count for m in self.measures],
            "basin_estimates": [u.values.tolist() for u in self.basin_estimates],
            "start_classes": self.start_classes,
            "warnings": self.warnings,
        }


def _dist_to_arcs(x: np.ndarray, arcs: list[Arc]) -> np.ndarray:
    best = np.full(np.shape(x), np.inf)
    for a in arcs:
        inside = a.contains(x)
        d = np.minimum(circle_dist(x, a.start), circle_dist(x, a.end))
        best = np.minimum(best, np.where(inside, 0.0, d))
    return best


def decompose_ergodic(
    gs: GeneratorSet,
    starts,
    burn_in: int = 1000,
    samples: int = 20000,
    resolution: int = 256,
    threshold: float = 0.0,
    basin_resolution: int = 64,
    repeats: int = 64,
    basin_steps: int | None = None,
) -> ErgodicDecomposition:
    """Cluster stationary runs from many starts into ergodic classes.

    Runs whose grid supports share a cell at ``resolution`` are merged. The
    basin function of class ``i`` at a node is the fraction of ``repeats``
    walks from that node ending within ``1 / resolution`` of its support.
    """
    starts = [wrap(s) for s in starts]
    if len(starts) < 8:
        raise ValueError("need at least 8 starting points")
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    # same words as estimate_stationary(gs, starts[i], trajectory_index=i), run as one batch
    orbits = run_points(gs, gs.words(range(len(starts)), burn_in + samples), np.array(starts)[:, None])
    runs = [EmpiricalMeasure(orbits[i, burn_in + 1:, 0]) for i in range(len(starts))]
    del orbits
    masks = [support_cells(m, resolution, threshold) for m in runs]

    parent = list(range(len(runs)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    notes = []
    for i in range(len(runs)):
        roots = {find(j) for j in range(i) if (masks[i] & masks[j]).any()}
        if len(roots) > 1:
            notes.append(f"run {i} bridges {len(roots)} previously disjoint classes")
        for r in roots:
            parent[r] = i
    roots = []
    for i in range(len(runs)):
        r = find(i)
        if r not in roots:
            roots.append(r)
    members = [[i for i in range(len(runs)) if find(i) == r] for r in roots]
    measures = [EmpiricalMeasure(np.concatenate([runs[i].samples for i in grp])) for grp in members]
    class_masks = [np.logical_or.reduce([masks[i] for i in grp]) for grp in members]
    supports = [cells_to_arcs(mk) for mk in class_masks]
    if len(members) == 1 and notes:
        notes.append("resolution too coarse")
        warnings.warn("resolution too coarse: bridging runs merged every class", RuntimeWarning)

    steps = burn_in if basin_steps is None else basin_steps
    nodes = np.arange(basin_resolution) / basin_resolution
    R = repeats
    idx = [BASIN_STREAMS + j * R + r for j in range(basin_resolution) for r in range(R)]
    words = gs.words(idx, steps)
    finals = run_points(gs, words, np.repeat(nodes, R)[:, None], record=False)[:, 0]
    finals = finals.reshape(basin_resolution, R)
    basins = []
    for arcs in supports:
        near = _dist_to_arcs(finals, arcs) <= 1.0 / resolution
        basins.append(GridFunction(near.mean(axis=1)))
    start_classes = [roots.index(find(i)) for i in range(len(runs))]
    return ErgodicDecomposition(measures, supports, len(members), basins, start_classes, notes)


def _window_positions(mu: EmpiricalMeasure, x: float, k: int):
    """Lift positions of samples ``p-k-1 .. p+k`` around ``x``.

    ``p`` is the first sample index at or after ``x``; returns the index
    array, positions and ``x`` lifted onto the same branch.
    """
    N = mu.count
    s = mu.samples
    p = int(np.searchsorted(s, x, "left"))
    m = np.arange(p - k - 1, p + k + 1)
    pos = s[np.mod(m, N)] + np.floor_divide(m, N)
    return m, pos, float(x)


def estimate_J_eps(
    gs: GeneratorSet,
    mu: EmpiricalMeasure,
    f_label: str,
    x: float,
    eps: float,
    method: str = "stationary",
    min_window: int | None = None,
    smoothing: bool = True,
    interval_windows: bool | None = None,
) -> float:
    """Approximated Jacobian: largest image-to-source mass ratio over windows.

    Windows are runs of ``j`` consecutive order statistics whose arc holds
    ``x``, with ``min_window <= j <= floor(eps * N)``; ``min_window``
    defaults to half the upper bound.

    ``method="direct"`` counts samples in ``f(I)``. ``"stationary"``
    instead evaluates the image mass through the stationary identity
    ``mu(B) = sum_g w_g mu(g^{-1} B)``, which makes the term ``g = f``
    exactly ``w_f * j`` and leaves counting noise only in the others.
    Image masses get ``(count + 1) / (N + 1)`` smoothing.

    For interval-mode generator sets (``interval_windows`` defaults to
    that) windows may not wrap through the complement of the domain arc.
    """
    N = mu.count
    k = int(math.floor(eps * N))
    if k < 4:
        raise ValueError("eps * N must be at least 4")
    if k >= N:
        raise ValueError("eps must be below 1")
    j_lo = max(2, (k + 1) // 2) if min_window is None else max(2, int(min_window))
    if j_lo > k:
        raise ValueError("min_window exceeds eps * N")
    x = wrap(x)
    f = gs.maps[gs.index(f_label)]
    m, pos, xl = _window_positions(mu, x, k)
    # the point must sit inside the bulk of the samples near it
    centre = k + 1
    nearest = min(abs(pos[centre] - xl), abs(xl - pos[centre - 1]))
    # spread of the k/2 samples on each side, not counting the gap around x
    left = pos[centre - 1] - pos[centre - 1 - k // 2]
    right = pos[centre + k // 2] - pos[centre]
    if nearest > max(left, right):
        raise ValueError("point outside effective support")

    img = np.asarray(f.lift(pos))
    if method == "direct":
        terms = [(1.0, mu.cumulative_counts(img, True), mu.cumulative_counts(img, False), None)]
    elif method == "stationary":
        terms = []
        for g in gs.generators:
            if g.map is f:
                terms.append((g.weight, None, None, "self"))
                continue
            back = np.asarray(g.map.inverse().lift(img))
            terms.append((g.weight, mu.cumulative_counts(back, True), mu.cumulative_counts(back, False), None))
    else:
        raise ValueError(f"unknown method {method!r}")

    L = pos.size
    j = np.arange(j_lo, k + 1)
    # only windows starting at or before the point can hold it
    a = centre - np.arange(k + 1)[:, None]
    b = a + j[None, :] - 1
    valid = (b >= centre - 1) & (b < L) & (pos[a] <= xl) & (pos[np.minimum(b, L - 1)] >= xl)
    domain = gs.interval_domain()
    if interval_windows is None:
        interval_windows = domain is not None
    if interval_windows and domain is not None:
        turn = np.floor(pos - domain.start)
        valid &= turn[a] == turn[np.minimum(b, L - 1)]
    if not valid.any():
        raise ValueError("point outside effective support")
    a_v = np.broadcast_to(a, valid.shape)[valid]
    b_v = b[valid]
    j_v = np.broadcast_to(j[None, :], valid.shape)[valid]
    count = np.zeros(a_v.shape)
    for w, c_right, c_left, tag in terms:
        if tag == "self":
            count += w * j_v
        else:
            count += w * (c_right[b_v] - c_left[a_v])
    if smoothing:
        mass = (count + 1.0) / (N + 1.0)
    else:
        mass = count / N
    return float(np.max(mass * N / j_v))


@dataclass
class EntropyEstimate:
    epsilon: float
    h_eps: float
    jacobian_samples: int
    lambda_bound_satisfied: bool
    h_raw: float = 0.0
    lambda_bar: float = 0.0
    skipped_fraction: float = 0.0
    probe_points: list = field(default_factory=list, repr=False)
    probe_log_j: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        del d["probe_points"], d["probe_log_j"]
        return d


def estimate_entropy(
    gs: GeneratorSet,
    mu: EmpiricalMeasure,
    eps: float = 0.01,
    probes: int = 200,
    method: str = "stationary",
    lambda_starts: int = 16,
    lambda_steps: int = 1000,
    lambda_trajectories: int = 1,
    report_tol: float = 0.02,
    bound_slack: float = 0.05,
) -> EntropyEstimate:
    """``h_eps = -E log J_eps(f, x)`` with ``x ~ mu`` and ``f ~ nu``.

    The points are stratified over sample ranks (one uniform draw in each
    of ``probes`` equal-count strata) and each point averages ``log J_eps``
    over all generators with their weights; both keep the expectation and
    remove most of the sampling spread, since ``log J_eps`` varies slowly
    along the support. Also estimates ``lambda_bar`` from ``lambda_starts``
    points drawn from ``mu`` and records whether
    ``lambda_bar <= -h_eps + bound_slack``.
    """
    if probes < 100:
        raise ValueError("need at least 100 probes")
    rng = np.random.Generator(np.random.Philox(key=(PROBE_STREAM << 64) | gs.seed))
    N = mu.count
    ranks = np.minimum(((np.arange(probes) + rng.random(probes)) * N / probes).astype(int), N - 1)
    xs = mu.samples[ranks]
    logs, kept = [], []
    for x in xs:
        try:
            logs.append(sum(
                g.weight * math.log(estimate_J_eps(gs, mu, g.label, x, eps, method))
                for g in gs.generators
            ))
            kept.append(float(x))
        except ValueError as exc:
            if "effective support" not in str(exc):
                raise
    skipped = 1.0 - len(logs) / probes
    if skipped > 0.2:
        raise EstimatorError(f"entropy estimate unreliable: {skipped:.0%} of probes skipped")
    h_raw = -float(np.mean(logs))
    h = max(h_raw, 0.0) if h_raw >= -report_tol else h_raw

    starts = mu.samples[rng.integers(0, N, lambda_starts)]
    slopes = []
    for i, x in enumerate(starts):
        est = estimate_lambda_con(
            gs, x, lambda_steps, lambda_trajectories,
            first_trajectory=ENTROPY_LAMBDA_STREAMS + i * lambda_trajectories,
        )
        slopes.extend(est.slopes)
    lam = float(np.mean(slopes))
    return EntropyEstimate(eps, h, len(logs) * len(gs), bool(lam <= -h + bound_slack), h_raw, lam, skipped,
                           kept, [float(v) for v in logs])


@dataclass
class SyncResult:
    fraction_synced: float
    median_rate: float | None
    synced: int
    pairs: int
    rates: list = field(default_factory=list)
    final_distances: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        del d["final_distances"]
        return d


def sync_test(gs: GeneratorSet, pairs, n: int = 500, tol: float = 1e-6, first_trajectory: int = 0) -> SyncResult:
    """Drive each pair with its own word and test ``dist < tol`` at step ``n``."""
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if n < 100:
        raise ValueError("need at least 100 steps")
    if pairs.shape[0] == 0:
        raise ValueError("need at least one pair")
    P = pairs.shape[0]
    words = gs.words(range(first_trajectory, first_trajectory + P), n)
    orbits = run_points(gs, words, pairs)
    dist = circle_dist(orbits[:, :, 0], orbits[:, :, 1])
    synced = dist[:, -1] < tol
    steps = np.arange(n + 1, dtype=float)
    rates = []
    for p in np.nonzero(synced)[0]:
        keep = dist[p] > 0
        rates.append(_ols(steps[keep], np.log(dist[p, keep]))[0])
    median = float(np.median(rates)) if rates else None
    return SyncResult(float(synced.mean()), median, int(synced.sum()), P, [float(r) for r in rates],
                      [float(v) for v in dist[:, -1]])


@dataclass
class DominationResult:
    fraction_holding: float
    majority: bool
    trajectories: int
    h_eps: float
    margin: float
    initial_mass: float

    def to_dict(self) -> dict:
        return asdict(self)


def mass_domination_check(
    gs: GeneratorSet,
    mu: EmpiricalMeasure,
    h_eps: float,
    n_min: int = 20,
    n_max: int = 200,
    trajectories: int = 100,
    margin: float = 0.1,
    window_mass: float = 0.01,
    first_trajectory: int = 0,
) -> DominationResult:
    """Check ``mu(f^n(I)) <= exp(-n (h_eps - margin)) mu(I)`` for ``n_min <= n <= n_max``.

    ``I`` is the arc spanned by ``window_mass * N`` consecutive samples
    around a point drawn from ``mu``; each trajectory holds when the bound
    is met at every step of the range.
    """
    rng = np.random.Generator(np.random.Philox(key=((PROBE_STREAM + 1) << 64) | gs.seed))
    N = mu.count
    j = max(2, int(window_mass * N))
    rate = h_eps - margin
    holds = 0
    m0s = []
    for t in range(trajectories):
        i = int(rng.integers(0, N))
        lo = mu.samples[(i - j // 2) % N]
        hi = mu.samples[(i - j // 2 + j - 1) % N]
        arc = Arc(lo, wrap(hi - lo))
        m0 = arc_mass(mu, arc)
        m0s.append(m0)
        ws = WalkStream(gs, first_trajectory + t)
        ok = True
        cur = arc
        for step, g in enumerate(ws.word(n_max), start=1):
            cur = push_arc(gs.maps[g], cur)
            if step >= n_min and arc_mass(mu, cur) > math.exp(-step * rate) * m0:
                ok = False
                break
        holds += ok
    frac = holds / trajectories
    return DominationResult(frac, frac > 0.5, trajectories, h_eps, margin, float(np.mean(m0s)))
