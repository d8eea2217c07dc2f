"""Exact zero-temperature GIRG sampling on the d-dimensional euclidean torus.

Vertices carry i.i.d. power-law weights ``w >= 1`` with density
``(tau - 1) * w**-tau`` and uniform positions on a torus of volume ``n``
centered at the origin.  A pair ``(u, v)`` is adjacent iff

    torus_distance(x_u, x_v) ** d  <=  k * w_u * w_v

with an inclusive threshold and no epsilon slack.  Construction uses a
uniform cell grid with per-cell weight-sorted candidate pruning; the output
is bit-for-bit identical to the quadratic all-pairs reference on the same
seed (both paths evaluate the same compiled predicate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import gamma as _gamma

from .rng import as_generator

__all__ = [
    "GirgParams",
    "Graph",
    "DegreeReport",
    "unit_ball_volume",
    "mean_weight",
    "sample_weights",
    "sample_positions",
    "torus_distance",
    "ball_of_influence_radius",
    "expected_degree",
    "calibrate_k",
    "build_graph",
    "degree_report",
    "write_edge_list",
]


def unit_ball_volume(d: int) -> float:
    """Volume of the d-dimensional unit euclidean ball, pi^(d/2)/Gamma(d/2+1)."""
    return math.pi ** (d / 2.0) / float(_gamma(d / 2.0 + 1.0))


def mean_weight(tau: float) -> float:
    """Mean of the power-law weight distribution, (tau-1)/(tau-2)."""
    return (tau - 1.0) / (tau - 2.0)


@dataclass(frozen=True)
class GirgParams:
    """Model parameters; the torus side ``L = n**(1/d)`` is always derived."""

    d: int
    tau: float
    k: float
    n: int
    seed: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension d must be a positive integer")
        if not self.tau > 2.0:
            raise ValueError("power-law exponent tau must satisfy tau > 2")
        if not self.k > 0.0:
            raise ValueError("density parameter k must be positive")
        if self.n < 1:
            raise ValueError("vertex count n must be at least 1")

    @property
    def L(self) -> float:
        return self.n ** (1.0 / self.d)


@dataclass(frozen=True)
class Graph:
    """Immutable GIRG realization with compressed sparse adjacency.

    ``offsets``/``neighbors`` form a CSR structure: the neighbors of ``v`` are
    ``neighbors[offsets[v]:offsets[v+1]]``, sorted ascending, symmetric, and
    free of self loops.
    """

    params: GirgParams
    weights: np.ndarray
    positions: np.ndarray
    offsets: np.ndarray
    neighbors: np.ndarray

    def __post_init__(self):
        for arr in (self.weights, self.positions, self.offsets, self.neighbors):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def num_edges(self) -> int:
        return self.neighbors.shape[0] // 2

    def degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    def neighbors_of(self, v: int) -> np.ndarray:
        return self.neighbors[self.offsets[v]:self.offsets[v + 1]]

    def to_bytes(self) -> bytes:
        """Canonical byte serialization used for determinism checks."""
        return (
            self.weights.tobytes()
            + self.positions.tobytes()
            + self.offsets.tobytes()
            + self.neighbors.tobytes()
        )


@dataclass(frozen=True)
class DegreeReport:
    """Empirical degree statistics split into near/far neighbour contributions.

    A neighbour ``u`` of ``v`` is *near* when it lies inside the ball of
    influence of ``v`` (distance at most ``(k*w_v)**(1/d)``), far otherwise.
    Bucket statistics aggregate by weight decade ``[10^i, 10^(i+1))``.
    """

    mean_degree: float
    mean_near: float
    mean_far: float
    bucket_edges: np.ndarray
    bucket_counts: np.ndarray
    bucket_mean_degree: np.ndarray
    bucket_mean_near: np.ndarray
    bucket_mean_far: np.ndarray


# ----------------------------------------------------------------------------
# sampling
# ----------------------------------------------------------------------------

def sample_weights(params: GirgParams, rng) -> np.ndarray:
    """Draw i.i.d. power-law weights via the inverse CDF ``w = u**(-1/(tau-1))``.

    ``u`` is uniform on (0, 1]; ``u == 1`` maps to the lower endpoint ``w = 1``.
    """
    rng = as_generator(rng)
    u = 1.0 - rng.random(params.n)
    return u ** (-1.0 / (params.tau - 1.0))


def sample_positions(params: GirgParams, rng) -> np.ndarray:
    """Draw uniform torus positions with coordinates in [-L/2, L/2)."""
    rng = as_generator(rng)
    return (rng.random((params.n, params.d)) - 0.5) * params.L


def torus_distance(x, y, L: float) -> float:
    """l2 distance on the torus: minimum-image difference per coordinate."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    diff = x - y
    diff = diff - L * np.rint(diff / L)
    return float(np.sqrt(np.sum(diff * diff, axis=-1)))


def ball_of_influence_radius(w: float, params: GirgParams) -> float:
    """Radius ``(k*w)**(1/d)`` inside which a vertex dominates all weights."""
    return (params.k * w) ** (1.0 / params.d)


def expected_degree(w: float, params: GirgParams) -> tuple[float, float]:
    """Expected (near, far) neighbour counts of a vertex of weight ``w``.

    near = V_d * k * w,  far = V_d * k * w / (tau - 2).
    """
    vd = unit_ball_volume(params.d)
    near = vd * params.k * w
    far = near / (params.tau - 2.0)
    return near, far


def calibrate_k(target_mean_degree: float, d: int, tau: float) -> float:
    """Density parameter making the weight-averaged expected degree hit a target.

    Inverts ``target = V_d * k * E[w] * (1 + 1/(tau-2))`` with
    ``E[w] = (tau-1)/(tau-2)``.
    """
    if not tau > 2.0:
        raise ValueError("tau must satisfy tau > 2")
    if not target_mean_degree > 0.0:
        raise ValueError("target mean degree must be positive")
    vd = unit_ball_volume(d)
    return target_mean_degree / (vd * mean_weight(tau) * (1.0 + 1.0 / (tau - 2.0)))


# ----------------------------------------------------------------------------
# compiled kernels
# ----------------------------------------------------------------------------

@njit(inline="always")
def _dist_pow_d(pos, u, v, L, d):
    # torus distance, raised to the d-th power by repeated multiplication so
    # the cell and brute-force paths evaluate the identical float expression
    s = 0.0
    for j in range(d):
        diff = pos[u, j] - pos[v, j]
        diff = diff - L * np.rint(diff / L)
        s += diff * diff
    t = np.sqrt(s)
    p = t
    for _ in range(d - 1):
        p *= t
    return p


@njit(inline="always")
def _edge_ok(pos, w, u, v, L, kpar, d):
    return _dist_pow_d(pos, u, v, L, d) <= kpar * w[u] * w[v]


@njit(cache=True)
def _collect_brute(pos, w, L, kpar, d):
    n = w.shape[0]
    cap = 1024
    eu = np.empty(cap, np.int64)
    ev = np.empty(cap, np.int64)
    cnt = 0
    for u in range(n):
        for v in range(u + 1, n):
            if _edge_ok(pos, w, u, v, L, kpar, d):
                if cnt == cap:
                    cap *= 2
                    eu2 = np.empty(cap, np.int64)
                    ev2 = np.empty(cap, np.int64)
                    eu2[:cnt] = eu
                    ev2[:cnt] = ev
                    eu = eu2
                    ev = ev2
                eu[cnt] = u
                ev[cnt] = v
                cnt += 1
    return eu[:cnt], ev[:cnt]


@njit(cache=True)
def _collect_cells(pos, w, L, kpar, d, m, order, cell_start, cell_wmax,
                   w_light, heavy):
    """Candidate scan over a uniform cell grid with weight-layered pruning.

    ``order`` lists vertices grouped by flat cell id, weight-descending within
    each cell; ``cell_start`` are the group offsets and ``cell_wmax`` the
    per-cell maximum weight (0 for empty cells).  Vertices with weight above
    ``w_light`` form the (small) heavy layer ``heavy``.  Pairs are enumerated
    in three passes that partition the pair set:

      1. light-light: per light vertex, cells within reach
         ``(k*w_u*w_light)**(1/d)``, pruning cells whose minimum distance
         rules out every light partner and breaking out of each cell's
         weight-sorted list once no remaining partner can connect;
      2. heavy-light: the same scan run from each heavy vertex, falling back
         to a direct pass over all vertices when the scan box would cover the
         torus (global hubs);
      3. heavy-heavy: direct double loop over the heavy layer.
    """
    n = w.shape[0]
    c = L / m
    cap = 1024 + 8 * n
    eu = np.empty(cap, np.int64)
    ev = np.empty(cap, np.int64)
    cnt = 0

    # per-dimension scratch: wrapped cell index and squared coordinate gap
    idx_scr = np.empty((d, m), np.int64)
    gap_scr = np.empty((d, m), np.float64)
    tcoord = np.empty(d, np.int64)
    # slack keeps the cell-level prune conservative against float rounding
    slack = 1.0 + 1e-9

    n_heavy = heavy.shape[0]
    for pass_heavy in range(2):
        n_outer = n_heavy if pass_heavy else n
        for outer in range(n_outer):
            u = heavy[outer] if pass_heavy else outer
            wu = w[u]
            if not pass_heavy and wu > w_light:
                continue  # heavy vertices are handled in pass 2
            # reach against the heaviest light partner anywhere
            reach = (kpar * wu * w_light) ** (1.0 / d)
            delta = int(reach / c) + 1
            span = 2 * delta + 1
            thr_u = kpar * wu * slack
            if span >= m:
                # global hub: direct scan, same predicate as everywhere else
                for v in range(n):
                    if v != u and w[v] <= w_light and (v > u or pass_heavy):
                        if _edge_ok(pos, w, u, v, L, kpar, d):
                            if cnt == cap:
                                cap *= 2
                                eu2 = np.empty(cap, np.int64)
                                ev2 = np.empty(cap, np.int64)
                                eu2[:cnt] = eu
                                ev2[:cnt] = ev
                                eu = eu2
                                ev = ev2
                            eu[cnt] = min(u, v)
                            ev[cnt] = max(u, v)
                            cnt += 1
                continue

            for j in range(d):
                x = (pos[u, j] + 0.5 * L) / c
                cj = int(x)
                if cj >= m:
                    cj = m - 1
                for t in range(span):
                    cc = (cj - delta + t) % m
                    idx_scr[j, t] = cc
                    center = (cc + 0.5) * c - 0.5 * L
                    diff = pos[u, j] - center
                    diff = diff - L * np.rint(diff / L)
                    gj = abs(diff) - 0.5 * c
                    if gj < 0.0:
                        gj = 0.0
                    gap_scr[j, t] = gj * gj
                tcoord[j] = 0

            while True:
                cid = 0
                s = 0.0
                for j in range(d):
                    t = tcoord[j]
                    cid = cid * m + idx_scr[j, t]
                    s += gap_scr[j, t]
                wc = cell_wmax[cid]
                if wc > 0.0:
                    if wc > w_light:
                        wc = w_light
                    # squared-distance bound s**d <= (k*w_u*w_c)**2 via
                    # integer powers, avoiding pow() in the hot loop
                    s_pow = s
                    for _ in range(d - 1):
                        s_pow *= s
                    rhs = thr_u * wc
                    if s_pow <= rhs * rhs:
                        for idx in range(cell_start[cid], cell_start[cid + 1]):
                            v = order[idx]
                            if w[v] > w_light:
                                continue  # heavy partners come from pass 2/3
                            rhs_v = thr_u * w[v]
                            if s_pow > rhs_v * rhs_v:
                                break  # weight-descending: nothing left connects
                            if (v > u or pass_heavy) and v != u:
                                if _edge_ok(pos, w, u, v, L, kpar, d):
                                    if cnt == cap:
                                        cap *= 2
                                        eu2 = np.empty(cap, np.int64)
                                        ev2 = np.empty(cap, np.int64)
                                        eu2[:cnt] = eu
                                        ev2[:cnt] = ev
                                        eu = eu2
                                        ev = ev2
                                    eu[cnt] = min(u, v)
                                    ev[cnt] = max(u, v)
                                    cnt += 1
                # odometer over the d-dimensional offset box
                j = d - 1
                while j >= 0:
                    tcoord[j] += 1
                    if tcoord[j] < span:
                        break
                    tcoord[j] = 0
                    j -= 1
                if j < 0:
                    break

    # heavy-heavy pairs: the layer is O(sqrt(n)), a direct loop is cheap
    for a in range(n_heavy):
        u = heavy[a]
        for b in range(a + 1, n_heavy):
            v = heavy[b]
            if _edge_ok(pos, w, u, v, L, kpar, d):
                if cnt == cap:
                    cap *= 2
                    eu2 = np.empty(cap, np.int64)
                    ev2 = np.empty(cap, np.int64)
                    eu2[:cnt] = eu
                    ev2[:cnt] = ev
                    eu = eu2
                    ev = ev2
                eu[cnt] = min(u, v)
                ev[cnt] = max(u, v)
                cnt += 1
    return eu[:cnt], ev[:cnt]


@njit(cache=True)
def _near_far_counts(pos, w, offsets, neighbors, L, kpar, d):
    n = w.shape[0]
    near = np.zeros(n, np.int64)
    far = np.zeros(n, np.int64)
    for v in range(n):
        r_i = (kpar * w[v]) ** (1.0 / d)
        for idx in range(offsets[v], offsets[v + 1]):
            u = neighbors[idx]
            s = 0.0
            for j in range(d):
                diff = pos[v, j] - pos[u, j]
                diff = diff - L * np.rint(diff / L)
                s += diff * diff
            if np.sqrt(s) <= r_i:
                near[v] += 1
            else:
                far[v] += 1
    return near, far


# ----------------------------------------------------------------------------
# construction
# ----------------------------------------------------------------------------

def _csr_from_pairs(n: int, eu: np.ndarray, ev: np.ndarray):
    src = np.concatenate([eu, ev])
    dst = np.concatenate([ev, eu])
    order = np.lexsort((dst, src))
    neighbors = dst[order].astype(np.int32)
    counts = np.bincount(src, minlength=n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return offsets, neighbors


def build_graph(params: GirgParams, method: str = "cells") -> Graph:
    """Sample a GIRG realization for ``params``.

    ``method="cells"`` (default) uses the spatial cell grid; ``"brute"`` runs
    the all-pairs reference.  Both give identical graphs on the same seed.
    """
    rng = as_generator(params.seed)
    weights = sample_weights(params, rng)
    positions = np.ascontiguousarray(sample_positions(params, rng))
    L = params.L
    d = params.d
    n = params.n

    if method == "brute":
        eu, ev = _collect_brute(positions, weights, L, params.k, d)
    elif method == "cells":
        # cell side at least max(k^(1/d), 1): ~unit vertex density per cell,
        # aligned so that m cells of side L/m tile the torus exactly
        c0 = max(params.k ** (1.0 / d), 1.0)
        m = max(1, int(L / c0))
        cell = np.zeros(n, dtype=np.int64)
        for j in range(d):
            cj = np.floor((positions[:, j] + 0.5 * L) / (L / m)).astype(np.int64)
            np.clip(cj, 0, m - 1, out=cj)
            cell = cell * m + cj
        order = np.lexsort((-weights, cell)).astype(np.int64)
        counts = np.bincount(cell, minlength=m ** d)
        cell_start = np.zeros(m ** d + 1, dtype=np.int64)
        np.cumsum(counts, out=cell_start[1:])
        cell_wmax = np.zeros(m ** d, dtype=np.float64)
        nonempty = counts > 0
        cell_wmax[nonempty] = weights[order[cell_start[:-1][nonempty]]]
        # heavy layer: the ~sqrt(n) heaviest vertices get their own passes so
        # the light-light scan box is not inflated by the global maximum weight
        n_heavy_target = min(n - 1, int(math.ceil(math.sqrt(n))))
        if n_heavy_target > 0:
            w_light = float(np.partition(weights, n - 1 - n_heavy_target)[n - 1 - n_heavy_target])
        else:
            w_light = float(weights.max(initial=1.0))
        heavy = np.flatnonzero(weights > w_light).astype(np.int64)
        eu, ev = _collect_cells(
            positions, weights, L, params.k, d, m, order, cell_start, cell_wmax,
            w_light, heavy,
        )
    else:
        raise ValueError(f"unknown construction method: {method!r}")

    offsets, neighbors = _csr_from_pairs(n, eu, ev)
    return Graph(params, weights, positions, offsets, neighbors)


def degree_report(graph: Graph) -> DegreeReport:
    """Aggregate empirical near/far degree means, overall and by weight decade."""
    p = graph.params
    near, far = _near_far_counts(
        graph.positions, graph.weights, graph.offsets, graph.neighbors,
        p.L, p.k, p.d,
    )
    deg = near + far
    n = p.n
    wmax = float(graph.weights.max()) if n else 1.0
    n_buckets = max(1, int(math.floor(math.log10(wmax))) + 1)
    edges = 10.0 ** np.arange(n_buckets + 1)
    which = np.clip(np.floor(np.log10(graph.weights)).astype(np.int64), 0, n_buckets - 1)
    counts = np.bincount(which, minlength=n_buckets)
    safe = np.maximum(counts, 1)
    b_deg = np.bincount(which, weights=deg, minlength=n_buckets) / safe
    b_near = np.bincount(which, weights=near, minlength=n_buckets) / safe
    b_far = np.bincount(which, weights=far, minlength=n_buckets) / safe
    return DegreeReport(
        mean_degree=float(deg.mean()),
        mean_near=float(near.mean()),
        mean_far=float(far.mean()),
        bucket_edges=edges,
        bucket_counts=counts,
        bucket_mean_degree=b_deg,
        bucket_mean_near=b_near,
        bucket_mean_far=b_far,
    )


def write_edge_list(graph: Graph, out_prefix: str) -> tuple[str, str]:
    """Write ``<prefix>.edges`` ("u v" per line, u < v) and ``<prefix>.vertices``.

    The vertex file has one line ``id weight x0 ... x{d-1}`` with 17
    significant digits, enough to round-trip IEEE doubles exactly.
    """
    edges_path = f"{out_prefix}.edges"
    verts_path = f"{out_prefix}.vertices"
    with open(edges_path, "w") as fh:
        for u in range(graph.n):
            row = graph.neighbors_of(u)
            for v in row[row > u]:
                fh.write(f"{u} {v}\n")
    with open(verts_path, "w") as fh:
        for v in range(graph.n):
            coords = " ".join(f"{x:.17g}" for x in graph.positions[v])
            fh.write(f"{v} {graph.weights[v]:.17g} {coords}\n")
    return edges_path, verts_path
