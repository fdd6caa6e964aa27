"""Random words and reproducible iteration of points, arcs and pairs.

The generator used at step ``n`` of trajectory ``t`` is the inverse-CDF image
of the ``n``-th double of a Philox stream keyed by ``(seed, t)``. It depends
on nothing else, so trajectory batches can run in any order or in parallel.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .circle import Arc, wrap
from .homeo import Homeo, IntervalMap, push_arc

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Generator:
    label: str
    map: Homeo
    weight: float


class GeneratorSet:
    """Finitely supported driving measure: weighted generators and a seed."""

    def __init__(self, generators: Iterable, seed: int = 0):
        gens = [g if isinstance(g, Generator) else Generator(*g) for g in generators]
        if not gens:
            raise ValueError("generator set must be nonempty")
        labels = [g.label for g in gens]
        if len(set(labels)) != len(labels):
            raise ValueError(f"generator labels must be unique: {labels}")
        w = np.array([g.weight for g in gens], dtype=float)
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("generator weights must be positive")
        w = w / w.sum()
        self.generators = tuple(
            Generator(g.label, g.map, float(wi)) for g, wi in zip(gens, w)
        )
        self.weights = w
        self.weights.setflags(write=False)
        self._cum = np.cumsum(w)
        self.seed = int(seed) & MASK64

    @property
    def labels(self) -> list[str]:
        return [g.label for g in self.generators]

    @property
    def maps(self) -> list[Homeo]:
        return [g.map for g in self.generators]

    def __len__(self):
        return len(self.generators)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown generator label {label!r}") from None

    def with_seed(self, seed: int) -> "GeneratorSet":
        return GeneratorSet(self.generators, seed)

    def interval_domain(self) -> Arc | None:
        """Common domain arc when every generator is an interval map."""
        doms = {g.map.domain for g in self.generators if isinstance(g.map, IntervalMap)}
        if len(doms) == 1 and all(isinstance(g.map, IntervalMap) for g in self.generators):
            return doms.pop()
        return None

    def uniforms(self, trajectory_index: int, n: int) -> np.ndarray:
        key = (int(trajectory_index) & MASK64) << 64 | self.seed
        return np.random.Generator(np.random.Philox(key=key)).random(n)

    def word(self, trajectory_index: int, n: int) -> np.ndarray:
        """Generator indices for steps ``0 .. n-1``."""
        if n < 0:
            raise ValueError("step count must be non-negative")
        idx = np.searchsorted(self._cum, self.uniforms(trajectory_index, n), side="right")
        return np.minimum(idx, len(self.generators) - 1)

    def words(self, trajectory_indices: Sequence[int], n: int) -> np.ndarray:
        return np.stack([self.word(t, n) for t in trajectory_indices]) if len(
            trajectory_indices
        ) else np.empty((0, n), dtype=int)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "generators": [
                {"label": g.label, "weight": g.weight, **g.map.to_dict()}
                for g in self.generators
            ],
        }


@dataclass(frozen=True)
class WalkStream:
    source: GeneratorSet
    trajectory_index: int = 0
    position: int = field(default=0)

    def word(self, n: int) -> np.ndarray:
        return self.source.word(self.trajectory_index, self.position + n)[self.position:]


def sample_word(ws: WalkStream, n: int) -> list[str]:
    labels = ws.source.labels
    return [labels[i] for i in ws.word(n)]


def apply_word_step(gs: GeneratorSet, letters: np.ndarray, y: np.ndarray, lift=False) -> np.ndarray:
    """Apply generator ``letters[i]`` to row ``i`` of ``y``."""
    out = np.empty_like(y)
    for g, f in enumerate(gs.maps):
        rows = letters == g
        if rows.any():
            out[rows] = f.lift(y[rows]) if lift else f(y[rows])
    return out


def run_points(gs: GeneratorSet, words: np.ndarray, x0, record: bool = True) -> np.ndarray:
    """Iterate points along many words at once.

    ``words`` has shape ``(T, n)``; ``x0`` broadcasts to ``(T, k)``. Returns
    the orbit array ``(T, n + 1, k)`` or only the final points ``(T, k)``.
    """
    words = np.atleast_2d(words)
    T, n = words.shape
    x0 = np.atleast_1d(wrap(np.asarray(x0, dtype=float)))
    y = np.array(np.broadcast_to(x0, (T, x0.shape[-1])), dtype=float)
    if record:
        out = np.empty((T, n + 1, y.shape[1]))
        out[:, 0] = y
    maps = gs.maps
    for step in range(n):
        col = words[:, step]
        if T == 1:
            y = np.asarray(maps[col[0]](y))
        else:
            y = apply_word_step(gs, col, y)
        if record:
            out[:, step + 1] = y
    return out if record else y


def iterate_lifts(gs: GeneratorSet, word: np.ndarray, xs) -> np.ndarray:
    """Lift values of ``f_w^n`` at ``xs``, shifted by one common integer.

    Differences between entries are meaningful lift differences; the common
    shift keeps magnitudes bounded over long words.
    """
    y = np.asarray(xs, dtype=float).copy()
    maps = gs.maps
    for g in word:
        y = np.asarray(maps[g].lift(y))
        y -= np.floor(y[0])
    return y


def iterate_point(ws: WalkStream, x: float, n: int) -> np.ndarray:
    """Orbit ``[x, f^1(x), ..., f^n(x)]``."""
    return run_points(ws.source, ws.word(n)[None, :], np.array([x]))[0, :, 0]


def iterate_pair(ws: WalkStream, x: float, y: float, n: int) -> np.ndarray:
    """Two-point motion under a common word; shape ``(n + 1, 2)``."""
    return run_points(ws.source, ws.word(n)[None, :], np.array([x, y]))[0]


def iterate_interval(ws: WalkStream, arc: Arc, n: int) -> list[Arc]:
    arcs = [arc]
    maps = ws.source.maps
    for g in ws.word(n):
        arcs.append(push_arc(maps[g], arcs[-1]))
    return arcs


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("RDS_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Order-preserving map, threaded up to ``RDS_THREADS`` workers."""
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
