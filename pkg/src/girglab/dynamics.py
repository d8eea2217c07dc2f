"""Sequential majority-vote opinion dynamics on a fixed graph.

Each step picks a uniformly random vertex and converts it to the majority
opinion of its neighbourhood, keeping its opinion on ties (including the
degenerate degree-0 case).  The run terminates at a stable configuration,
i.e. when no vertex disagrees with its neighbourhood majority, or when the
step budget is exhausted.

State is kept incrementally: per-vertex neighbour spin sums and an unstable
flag, updated in O(degree) per flip, which makes the uniform-selection loop
O(1) per non-flipping step.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .girg import Graph
from .rng import as_generator, draw_u64

__all__ = [
    "Square",
    "Ball",
    "HalfSpace",
    "UniformRandom",
    "OpinionConfig",
    "RunStats",
    "init_opinions",
    "step",
    "run_until_stable",
    "classify_survival",
    "survival_threshold",
    "default_max_steps",
    "write_snapshot",
]


@dataclass(frozen=True)
class Square:
    """Axis-aligned hypercube of the given side length, centered at the origin."""
    side: float


@dataclass(frozen=True)
class Ball:
    """Euclidean ball of the given radius, centered at the origin."""
    radius: float


@dataclass(frozen=True)
class HalfSpace:
    """Blue where the first coordinate is >= 0."""


@dataclass(frozen=True)
class UniformRandom:
    """Each vertex blue independently with probability p_blue."""
    p_blue: float


@dataclass
class RunStats:
    steps_taken: int
    flips: int
    final_blue_count: int
    survived: bool
    elapsed: float
    converged: bool = True


@dataclass
class OpinionConfig:
    """Spin assignment plus incremental instability bookkeeping.

    ``neighbor_sums[v]`` is the sum of the spins of v's neighbours and
    ``unstable[v]`` is true iff that sum is nonzero with sign opposite to
    ``spins[v]``.
    """

    spins: np.ndarray
    neighbor_sums: np.ndarray
    unstable: np.ndarray
    unstable_count: int = field(default=0)

    @property
    def unstable_set(self) -> np.ndarray:
        return np.flatnonzero(self.unstable)

    @property
    def blue_count(self) -> int:
        return int(np.count_nonzero(self.spins > 0))

    def copy(self) -> "OpinionConfig":
        return OpinionConfig(
            self.spins.copy(), self.neighbor_sums.copy(),
            self.unstable.copy(), self.unstable_count,
        )


@njit(cache=True)
def _neighbor_sums(offsets, neighbors, spins):
    n = spins.shape[0]
    out = np.zeros(n, np.int64)
    for v in range(n):
        s = 0
        for idx in range(offsets[v], offsets[v + 1]):
            s += spins[neighbors[idx]]
        out[v] = s
    return out


@njit(inline="always")
def _next_u64(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True)
def _run_dynamics(offsets, neighbors, spins, sums, unstable, unstable_count,
                  max_steps, state):
    """Uniform-selection majority loop.

    Returns (steps, flips, unstable_count, state); the splitmix64 state makes
    chunked calls equivalent to one long run.
    """
    n = spins.shape[0]
    state = np.uint64(state)
    steps = 0
    flips = 0
    while unstable_count > 0 and steps < max_steps:
        state, z = _next_u64(state)
        v = int(z % np.uint64(n))
        steps += 1
        if not unstable[v]:
            continue
        # an unstable vertex always flips to the majority sign
        new_spin = np.int8(1) if sums[v] > 0 else np.int8(-1)
        old_spin = spins[v]
        spins[v] = new_spin
        flips += 1
        unstable[v] = False
        unstable_count -= 1
        delta = np.int64(new_spin) - np.int64(old_spin)
        for idx in range(offsets[v], offsets[v + 1]):
            u = neighbors[idx]
            su = sums[u] + delta
            sums[u] = su
            now = su != 0 and (su > 0) != (spins[u] > 0)
            if now != unstable[u]:
                unstable[u] = now
                unstable_count += 1 if now else -1
    return steps, flips, unstable_count, state


def _recompute(graph: Graph, spins: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    sums = _neighbor_sums(graph.offsets, graph.neighbors, spins)
    unstable = (sums != 0) & ((sums > 0) != (spins > 0))
    return sums, unstable, int(unstable.sum())


def init_opinions(graph: Graph, shape, rng=None) -> OpinionConfig:
    """Shaped initial configuration: +1 (blue) inside the region, -1 outside.

    Region boundaries are inclusive.  ``UniformRandom`` draws from ``rng``
    (default: a stream derived from the graph seed).
    """
    pos = graph.positions
    L = graph.params.L
    if isinstance(shape, Square):
        if not 0.0 < shape.side <= L:
            raise ValueError(f"square side must be in (0, L={L:g}]")
        inside = np.all(np.abs(pos) <= 0.5 * shape.side, axis=1)
    elif isinstance(shape, Ball):
        if not 0.0 < 2.0 * shape.radius <= L:
            raise ValueError(f"ball diameter must be in (0, L={L:g}]")
        inside = np.sqrt(np.sum(pos * pos, axis=1)) <= shape.radius
    elif isinstance(shape, HalfSpace):
        inside = pos[:, 0] >= 0.0
    elif isinstance(shape, UniformRandom):
        if not 0.0 <= shape.p_blue <= 1.0:
            raise ValueError("p_blue must lie in [0, 1]")
        if rng is None:
            rng = as_generator(graph.params.seed ^ 0x5D7A9F)
        inside = as_generator(rng).random(graph.n) < shape.p_blue
    else:
        raise TypeError(f"unknown initial shape: {shape!r}")
    spins = np.where(inside, 1, -1).astype(np.int8)
    sums, unstable, count = _recompute(graph, spins)
    return OpinionConfig(spins, sums, unstable, count)


def step(graph: Graph, config: OpinionConfig, v: int) -> tuple[OpinionConfig, bool]:
    """Apply the majority rule at vertex ``v`` (in place); returns (config, flipped)."""
    s = int(config.neighbor_sums[v])
    if s == 0:
        return config, False
    new_spin = 1 if s > 0 else -1
    old_spin = int(config.spins[v])
    if new_spin == old_spin:
        return config, False
    config.spins[v] = new_spin
    if config.unstable[v]:
        config.unstable[v] = False
        config.unstable_count -= 1
    delta = new_spin - old_spin
    for u in graph.neighbors_of(v):
        config.neighbor_sums[u] += delta
        su = int(config.neighbor_sums[u])
        now = su != 0 and (su > 0) != (config.spins[u] > 0)
        if now != bool(config.unstable[u]):
            config.unstable[u] = now
            config.unstable_count += 1 if now else -1
    return config, True


def default_max_steps(n: int) -> int:
    return int(100 * n * math.log(max(n, 2))) + 1


def run_until_stable(graph: Graph, config: OpinionConfig, rng,
                     max_steps: int | None = None,
                     survival_min_count: int = 50,
                     survival_fraction: float = 0.005,
                     snapshot_every: int | None = None,
                     on_snapshot=None,
                     ) -> tuple[OpinionConfig, RunStats]:
    """Run uniform random-vertex majority updates until stable.

    Termination by stability means a full sweep of the majority rule would
    change nothing.  Hitting ``max_steps`` first is reported as
    ``converged=False`` (and counted as non-survival).  With
    ``snapshot_every`` set, ``on_snapshot(step_count, config)`` fires every
    that many steps; chunking does not change the sampled trajectory.
    """
    if max_steps is None:
        max_steps = default_max_steps(graph.n)
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    t0 = time.perf_counter()
    state = np.uint64(draw_u64(rng))
    steps = 0
    flips = 0
    remaining = config.unstable_count
    chunk = max_steps if not snapshot_every else max(1, snapshot_every)
    while True:
        budget = min(chunk, max_steps - steps)
        if budget <= 0 or remaining == 0:
            break
        got, fl, remaining, state = _run_dynamics(
            graph.offsets, graph.neighbors, config.spins, config.neighbor_sums,
            config.unstable, config.unstable_count, budget, np.uint64(state),
        )
        config.unstable_count = int(remaining)
        steps += int(got)
        flips += int(fl)
        if on_snapshot is not None and remaining > 0 and steps < max_steps:
            on_snapshot(steps, config)
    config.unstable_count = int(remaining)
    converged = remaining == 0
    survived = converged and classify_survival(
        graph, config, min_count=survival_min_count, fraction=survival_fraction
    )
    stats = RunStats(
        steps_taken=int(steps),
        flips=int(flips),
        final_blue_count=config.blue_count,
        survived=survived,
        elapsed=time.perf_counter() - t0,
        converged=converged,
    )
    return config, stats


def survival_threshold(n: int, min_count: int = 50, fraction: float = 0.005) -> int:
    return max(min_count, int(math.ceil(fraction * n)))


def classify_survival(graph: Graph, config: OpinionConfig,
                      min_count: int = 50, fraction: float = 0.005) -> bool:
    """Blue survives iff its largest connected component (within the blue-
    induced subgraph) reaches ``max(min_count, fraction*n)`` vertices.

    This excludes the tiny frozen components that persist after the bulk of a
    small region has been eaten.
    """
    blue = config.spins > 0
    n_blue = int(blue.sum())
    thr = survival_threshold(graph.n, min_count, fraction)
    if n_blue < thr:
        return False
    ids = np.cumsum(blue) - 1  # blue vertex -> compact index
    src_all = np.repeat(np.arange(graph.n), np.diff(graph.offsets))
    dst_all = graph.neighbors
    mask = blue[src_all] & blue[dst_all]
    src = ids[src_all[mask]]
    dst = ids[dst_all[mask]]
    adj = csr_matrix(
        (np.ones(src.shape[0], dtype=np.int8), (src, dst)), shape=(n_blue, n_blue)
    )
    _, labels = connected_components(adj, directed=False)
    if labels.size == 0:
        return False
    largest = int(np.bincount(labels).max())
    return largest >= thr


def write_snapshot(config: OpinionConfig, path: str) -> str:
    """Write a per-vertex ``id spin`` text file."""
    with open(path, "w") as fh:
        for v, s in enumerate(config.spins):
            fh.write(f"{v} {int(s)}\n")
    return path
