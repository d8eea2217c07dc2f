"""Discretized mean-field opinion profiles and the interface update operator.

A profile assigns each vertex type ``(w, z)`` the probability of holding the
blue opinion; ``z`` is the signed distance to a half-space boundary, or the
distance ``rho`` to the origin in the radial geometry.  One update maps a
profile f to

    (T f)(w, z) = Phi( mu_f(w, z) / sqrt(2 * lambda(w)) )

where ``mu_f`` is the expected blue-minus-red neighbour count under f (the
advantage), ``lambda(w)`` the expected degree, and ``Phi`` the CDF of the
Gaussian with variance 1/2, i.e. ``Phi(x) = (1 + erf(x)) / 2``.  This is the
convention under which ``Phi(mu / sqrt(2*lambda))`` equals the variance-
lambda normal CDF evaluated at mu, the Gaussian surrogate for the Skellam
difference of the blue and red neighbour counts.

Profiles are stored on a log-spaced weight grid and a uniform interface
grid, with bilinear interpolation in (log w, z) and constant extrapolation
beyond the grid.  The weight measure is the power-law density restricted to
``[1, w_cap]`` (no renormalization).
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from . import _operators as ops
from .girg import unit_ball_volume, mean_weight

__all__ = [
    "QuadratureError",
    "MeanFieldParams",
    "HalfSpace",
    "Radial",
    "Profile",
    "AdvantageResult",
    "phi",
    "lambda_of_w",
    "kernel_mass",
    "interface_width",
    "halfspace_params",
    "radial_params",
    "constant_profile",
    "halfspace_indicator",
    "ball_indicator",
    "advantage_halfspace",
    "advantage_radial",
    "apply_T",
    "iterate",
    "survival_margin",
    "crossing_radius",
    "save_profile_csv",
    "load_profile_csv",
]


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature cannot reach the requested tolerance."""


@dataclass(frozen=True)
class HalfSpace:
    pass


@dataclass(frozen=True)
class Radial:
    r: float


@dataclass(eq=False)
class MeanFieldParams:
    """Discretization of the mean-field state space.

    ``z_grid`` holds the interface grid: symmetric about 0 for the half-space
    geometry, ``[~0, r_max]`` for the radial one.  ``truncate_lambda_tail``
    selects the lambda(w) variant whose far term integrates partner weights
    only up to ``w_cap``; the default keeps the closed-form untruncated value.
    """

    d: int
    tau: float
    k: float
    w_cap: float
    w_grid: np.ndarray
    z_grid: np.ndarray
    quad_tol: float = 1e-6
    truncate_lambda_tail: bool = False
    n_theta: int = 192
    _op_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.tau > 2.0:
            raise ValueError("tau must satisfy tau > 2")
        if not self.k > 0.0:
            raise ValueError("k must be positive")
        if not (math.isfinite(self.w_cap) and self.w_cap >= 1.0):
            raise ValueError("w_cap must be finite and >= 1")
        if not 0.0 < self.quad_tol <= 1e-3:
            raise ValueError("quad_tol must lie in (0, 1e-3]")
        for g in (self.w_grid, self.z_grid):
            if np.any(np.diff(g) <= 0):
                raise ValueError("grids must be strictly increasing")
        if lambda_of_w(1.0, self) < 30.0:
            warnings.warn(
                "min lambda(w) < 30: the Gaussian surrogate for the Skellam "
                "update is dubious at this density", stacklevel=3,
            )

    @property
    def z_extent(self) -> float:
        return float(self.z_grid[-1])


def phi(x):
    """Gaussian CDF at variance 1/2: (1 + erf(x)) / 2."""
    return 0.5 * (1.0 + erf(np.asarray(x, dtype=np.float64)))


def lambda_of_w(w, params: MeanFieldParams | None = None, *, d=None, tau=None,
                k=None, w_cap=None, truncate_tail=None):
    """Expected degree of a vertex of weight w.

    Untruncated: ``V_d * k * w * (1 + 1/(tau-2))``.  The truncated-tail
    variant keeps the near term and integrates the far term over partner
    weights in ``[1, w_cap]`` only.
    """
    if params is not None:
        d, tau, k, w_cap = params.d, params.tau, params.k, params.w_cap
        if truncate_tail is None:
            truncate_tail = params.truncate_lambda_tail
    w = np.asarray(w, dtype=np.float64)
    near = unit_ball_volume(d) * k * w
    if truncate_tail:
        # int_1^W (w'-1) rho(w') dw'
        tail = (mean_weight(tau) * (1.0 - w_cap ** (2.0 - tau))
                - (1.0 - w_cap ** (1.0 - tau)))
        far = near * tail
    else:
        far = near / (tau - 2.0)
    out = near + far
    return float(out) if out.ndim == 0 else out


def kernel_mass(w, params: MeanFieldParams):
    """Total partner measure seen by the advantage integral (truncated at w_cap)."""
    w = np.asarray(w, dtype=np.float64)
    e_trunc = mean_weight(params.tau) * (1.0 - params.w_cap ** (2.0 - params.tau))
    out = unit_ball_volume(params.d) * params.k * w * e_trunc
    return float(out) if out.ndim == 0 else out


def interface_width(d: int, tau: float, k: float, w_cap: float) -> float:
    """Rough width of the stationary interface at the minimum weight.

    Ratio of the update's noise scale ``sqrt(2*lambda(1))`` to the advantage
    slope of a sharp interface; grid steps should resolve this length.
    """
    lam1 = unit_ball_volume(d) * k * (1.0 + 1.0 / (tau - 2.0))
    p = (d - 1.0) / d
    e_frac = (tau - 1.0) / (tau - 1.0 - p) * (1.0 - w_cap ** (1.0 + p - tau))
    slope = 2.0 * unit_ball_volume(d - 1) * k ** p * e_frac
    return math.sqrt(2.0 * lam1) / slope


@dataclass(eq=False)
class Profile:
    """Grid values of an opinion profile, with its evaluation rule.

    ``values[i, j]`` lives at ``(w_grid[i], z_grid[j])``; evaluation is
    bilinear in (log w, z) with constant extrapolation beyond the grid.
    Profiles tagged ``symmetric`` must satisfy f(w,z) + f(w,-z) = 1 at the
    (mirror-paired) grid nodes to 1e-12.
    """

    params: MeanFieldParams
    geometry: HalfSpace | Radial
    values: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        v = self.values
        if v.shape != (self.params.w_grid.shape[0], self.params.z_grid.shape[0]):
            raise ValueError("values shape does not match the parameter grids")
        if v.min() < -1e-12 or v.max() > 1.0 + 1e-12:
            raise ValueError("profile values must lie in [0, 1]")
        if self.symmetric:
            if not isinstance(self.geometry, HalfSpace):
                raise ValueError("only half-space profiles can be tagged symmetric")
            resid = np.abs(v + v[:, ::-1] - 1.0).max()
            if resid > 1e-12:
                raise ValueError(f"symmetry violated at grid nodes by {resid:.3e}")

    def evaluate(self, w, z):
        """Bilinear interpolation in (log w, z), constant beyond the grid."""
        wg = self.params.w_grid
        zg = self.params.z_grid
        lw = np.log(np.clip(np.asarray(w, dtype=np.float64), wg[0], wg[-1]))
        zz = np.clip(np.asarray(z, dtype=np.float64), zg[0], zg[-1])
        lwg = np.log(wg)
        iw = np.clip(np.searchsorted(lwg, lw) - 1, 0, wg.shape[0] - 2)
        jz = np.clip(np.searchsorted(zg, zz) - 1, 0, zg.shape[0] - 2)
        tw = (lw - lwg[iw]) / (lwg[iw + 1] - lwg[iw])
        tz = (zz - zg[jz]) / (zg[jz + 1] - zg[jz])
        v = self.values
        out = ((1 - tw) * (1 - tz) * v[iw, jz] + tw * (1 - tz) * v[iw + 1, jz]
               + (1 - tw) * tz * v[iw, jz + 1] + tw * tz * v[iw + 1, jz + 1])
        return float(out) if out.ndim == 0 else out

    def row(self, i: int) -> np.ndarray:
        return self.values[i]

    def with_values(self, values: np.ndarray, symmetric: bool | None = None) -> "Profile":
        return Profile(self.params, self.geometry, values,
                       self.symmetric if symmetric is None else symmetric)


@dataclass(frozen=True)
class AdvantageResult:
    """Advantage decomposition at one vertex type.

    ``mu = lambda_plus - lambda_minus`` holds exactly;
    ``lambda_plus + lambda_minus`` equals the truncated partner measure,
    which matches ``lambda_total`` (the configured lambda(w)) up to the
    truncated tail mass plus quadrature error.
    """

    mu: float
    lambda_total: float
    lambda_plus: float
    lambda_minus: float
    quad_error_estimate: float


# ----------------------------------------------------------------------------
# parameter/profile constructors
# ----------------------------------------------------------------------------

def halfspace_params(d: int, tau: float, k: float, *, w_cap: float = 1e3,
                     n_w: int = 64, n_z: int | None = None,
                     z_extent: float | None = None, dz_target: float | None = None,
                     quad_tol: float = 1e-6, truncate_lambda_tail: bool = False,
                     ) -> MeanFieldParams:
    """Half-space discretization with interface-resolving defaults.

    The default extent covers the largest ball of influence
    ``(k*w_cap)^(1/d)`` (profiles are constant beyond it; tails are handled
    in closed form), and the default step resolves the stationary interface
    width.
    """
    if not tau > 2.0:
        raise ValueError("tau must satisfy tau > 2")
    if not k > 0.0:
        raise ValueError("k must be positive")
    if w_cap <= 1.0:
        raise ValueError("w_cap must exceed 1 for a weight grid")
    width = interface_width(d, tau, k, w_cap)
    r_cap = (k * w_cap) ** (1.0 / d)
    if z_extent is None:
        z_extent = 1.05 * r_cap + 8.0 * width + 2.0
    if n_z is None:
        if dz_target is None:
            dz_target = width / 3.0
        n_z = 2 * int(math.ceil(z_extent / dz_target))  # nodes span [-Z, Z]
        n_z = min(max(n_z, 64), 8192)
    if n_z % 2:
        n_z += 1
    dz = 2.0 * z_extent / n_z
    halfgrid = (np.arange(n_z // 2) + 0.5) * dz
    z_grid = np.concatenate([-halfgrid[::-1], halfgrid])
    w_grid = np.geomspace(1.0, w_cap, n_w)
    w_grid[0] = 1.0
    w_grid[-1] = w_cap
    return MeanFieldParams(d=d, tau=tau, k=k, w_cap=w_cap, w_grid=w_grid,
                           z_grid=z_grid, quad_tol=quad_tol,
                           truncate_lambda_tail=truncate_lambda_tail)


def radial_params(tau: float, k: float, r: float, *, d: int = 2,
                  w_cap: float, n_w: int = 16, drho: float | None = None,
                  pad: float | None = None, quad_tol: float = 1e-6,
                  n_theta: int = 192, truncate_lambda_tail: bool = False,
                  ) -> MeanFieldParams:
    """Radial discretization whose grid straddles the ball boundary ``r``.

    Nodes sit at half-odd offsets from ``r`` so that the map
    ``z = r - rho`` lands exactly on the half-space grid built with the same
    step, and a sharp ball indicator has its interpolated 1/2-crossing at
    ``r`` exactly.
    """
    if d != 2:
        raise NotImplementedError("radial profiles are implemented for d = 2")
    if not tau > 2.0:
        raise ValueError("tau must satisfy tau > 2")
    if not k > 0.0:
        raise ValueError("k must be positive")
    if w_cap <= 1.0:
        raise ValueError("w_cap must exceed 1 for a weight grid")
    if r <= 0:
        raise ValueError("ball radius must be positive")
    width = interface_width(d, tau, k, w_cap)
    if drho is None:
        drho = width / 3.0
    if pad is None:
        pad = (k * w_cap * w_cap) ** (1.0 / d) + 8.0 * width + 2.0
    m_lo = int(math.floor(r / drho - 0.5))
    if m_lo < 2:
        raise ValueError("ball radius too small for the chosen grid step")
    m_hi = int(math.ceil(pad / drho + 0.5))
    rho = r + (np.arange(m_lo + m_hi + 1) - m_lo - 0.5) * drho
    w_grid = np.geomspace(1.0, w_cap, n_w)
    w_grid[0] = 1.0
    w_grid[-1] = w_cap
    return MeanFieldParams(d=d, tau=tau, k=k, w_cap=w_cap, w_grid=w_grid,
                           z_grid=rho, quad_tol=quad_tol, n_theta=n_theta,
                           truncate_lambda_tail=truncate_lambda_tail)


def constant_profile(params: MeanFieldParams, value: float, geometry=None) -> Profile:
    geometry = HalfSpace() if geometry is None else geometry
    vals = np.full((params.w_grid.shape[0], params.z_grid.shape[0]), float(value))
    symmetric = isinstance(geometry, HalfSpace) and value == 0.5
    return Profile(params, geometry, vals, symmetric)


def halfspace_indicator(params: MeanFieldParams) -> Profile:
    """The half-space initialization 1{z >= 0} sampled at the grid nodes."""
    vals = np.broadcast_to((params.z_grid > 0).astype(np.float64),
                           (params.w_grid.shape[0], params.z_grid.shape[0])).copy()
    return Profile(params, HalfSpace(), vals, symmetric=True)


def ball_indicator(params: MeanFieldParams, r: float) -> Profile:
    """The ball initialization 1{rho <= r} sampled at the grid nodes."""
    vals = np.broadcast_to((params.z_grid <= r).astype(np.float64),
                           (params.w_grid.shape[0], params.z_grid.shape[0])).copy()
    return Profile(params, Radial(r), vals)


# ----------------------------------------------------------------------------
# advantage evaluation
# ----------------------------------------------------------------------------

def _blend_row(profile: Profile, wprime: float) -> np.ndarray:
    wg = profile.params.w_grid
    lw = math.log(min(max(wprime, wg[0]), wg[-1]))
    lwg = np.log(wg)
    i = min(max(np.searchsorted(lwg, lw) - 1, 0), wg.shape[0] - 2)
    t = (lw - lwg[i]) / (lwg[i + 1] - lwg[i])
    return (1.0 - t) * profile.values[i] + t * profile.values[i + 1]


def _outer_panels(params: MeanFieldParams):
    return list(zip(params.w_grid[:-1], params.w_grid[1:]))


def _adaptive_outer(fn, params: MeanFieldParams, rel_scale: float, rel_tol: float):
    """Panel-adaptive Gauss-Legendre over the partner-weight measure.

    ``fn(wprime_array) -> values`` evaluates the (exact) inner integral at
    partner weights; panels are bisected until the GL8/GL16 discrepancy is
    below ``rel_tol * rel_scale``.
    """
    tau = params.tau

    def panel_eval(a, b):
        la, lb = math.log(a), math.log(b)
        x16, w16 = ops.gauss_legendre(16, la, lb)
        x8, w8 = ops.gauss_legendre(8, la, lb)
        wp16 = np.exp(x16)
        wp8 = np.exp(x8)
        meas16 = w16 * (tau - 1.0) * wp16 ** (1.0 - tau)
        meas8 = w8 * (tau - 1.0) * wp8 ** (1.0 - tau)
        v16 = float(meas16 @ fn(wp16))
        v8 = float(meas8 @ fn(wp8))
        return v16, abs(v16 - v8)

    queue = []
    for a, b in _outer_panels(params):
        v, e = panel_eval(a, b)
        queue.append((e, a, b, v))
    tol = rel_tol * max(rel_scale, 1e-300)
    for _ in range(200):
        err = sum(e for e, *_ in queue)
        if err <= tol:
            break
        queue.sort(key=lambda t: -t[0])
        e, a, b, v = queue.pop(0)
        mid = math.sqrt(a * b)
        if mid <= a or mid >= b:
            queue.append((0.0, a, b, v))  # panel at float resolution: accept
            continue
        for lo, hi in ((a, mid), (mid, b)):
            v2, e2 = panel_eval(lo, hi)
            queue.append((e2, lo, hi, v2))
    err = sum(e for e, *_ in queue)
    if err > tol:
        raise QuadratureError(
            f"outer quadrature did not reach tolerance: err {err:.3e} > {tol:.3e}")
    total = sum(v for _, _, _, v in queue)
    return total, err


def advantage_halfspace(profile: Profile, w: float, z: float,
                        rel_tol: float | None = None) -> AdvantageResult:
    """Advantage of a vertex of type (w, z) under a half-space profile.

    The transverse coordinates are integrated out in closed form (chord
    kernel); the partner-weight integral is adaptive Gauss-Legendre.
    """
    if not isinstance(profile.geometry, HalfSpace):
        raise ValueError("profile geometry must be HalfSpace")
    params = profile.params
    if rel_tol is None:
        rel_tol = params.quad_tol
    zg = params.z_grid
    d = params.d

    def fn(wprimes):
        out = np.empty(wprimes.shape[0])
        for ix, wp in enumerate(wprimes):
            h = 2.0 * _blend_row(profile, wp) - 1.0
            R = (params.k * w * wp) ** (1.0 / d)
            out[ix] = ops.exact_row_convolution(h, zg, z, R, d)
        return out

    scale = kernel_mass(w, params)
    mu, err = _adaptive_outer(fn, params, scale, rel_tol)
    return _advantage_result(mu, scale, float(lambda_of_w(w, params)), err)


def advantage_radial(profile: Profile, w: float, rho: float,
                     rel_tol: float | None = None) -> AdvantageResult:
    """Advantage of a vertex at distance rho from the origin (radial, d=2).

    The angular reduction uses the flux form of the disk integral of the
    radial row (equivalent to weighting by the in-disk arc length
    ``2*rho'*arccos((rho^2+rho'^2-R^2)/(2*rho*rho'))``); the degenerate
    center case integrates the full circles directly.
    """
    if not isinstance(profile.geometry, Radial):
        raise ValueError("profile geometry must be Radial")
    params = profile.params
    if rel_tol is None:
        rel_tol = params.quad_tol
    rg = params.z_grid
    inner_err = 0.0

    def fn(wprimes):
        nonlocal inner_err
        out = np.empty(wprimes.shape[0])
        for ix, wp in enumerate(wprimes):
            gam = 2.0 * _blend_row(profile, wp) - 1.0
            g_nodes = ops.radial_G_nodes(rg, gam)[0]
            R = (params.k * w * wp) ** 0.5
            if rho < 1e-12:
                out[ix] = 2.0 * math.pi * ops._g_eval_vec(rg, g_nodes, gam, np.array([R]))[0]
            else:
                coarse = ops.disk_average_flux(rg, g_nodes, gam, rho, R, 256)
                fine = ops.disk_average_flux(rg, g_nodes, gam, rho, R, 512)
                inner_err = max(inner_err, abs(fine - coarse))
                out[ix] = fine
        return out

    scale = kernel_mass(w, params)
    mu, err = _adaptive_outer(fn, params, scale, rel_tol)
    err += inner_err
    return _advantage_result(mu, scale, float(lambda_of_w(w, params)), err)


def _advantage_result(mu: float, scale: float, lam_total: float,
                      err: float) -> AdvantageResult:
    # round so that mu == lambda_plus - lambda_minus holds bit-exactly
    lam_plus = 0.5 * (scale + mu)
    lam_minus = lam_plus - mu
    return AdvantageResult(mu=lam_plus - lam_minus, lambda_total=lam_total,
                           lambda_plus=lam_plus, lambda_minus=lam_minus,
                           quad_error_estimate=err)


# ----------------------------------------------------------------------------
# the update operator
# ----------------------------------------------------------------------------

def _grid_operator(params: MeanFieldParams, geometry):
    key = "radial" if isinstance(geometry, Radial) else "halfspace"
    op = params._op_cache.get(key)
    if op is None:
        op = (ops.RadialOperator(params) if key == "radial"
              else ops.HalfspaceOperator(params))
        params._op_cache[key] = op
    return op


def advantage_grid(profile: Profile) -> np.ndarray:
    """Advantage at every grid node (exact for the interpolated profile)."""
    return _grid_operator(profile.params, profile.geometry).mu(profile.values)


def apply_T(profile: Profile) -> Profile:
    """One mean-field update; the input profile is unchanged.

    For symmetric-tagged inputs the output is re-symmetrized (the exact
    operator preserves symmetry; this removes float round-off so the tag's
    1e-12 validation stays meaningful downstream).
    """
    params = profile.params
    mu = advantage_grid(profile)
    lam = lambda_of_w(params.w_grid, params)
    vals = phi(mu / np.sqrt(2.0 * lam)[:, None])
    if profile.symmetric:
        vals = 0.5 * (vals + 1.0 - vals[:, ::-1])
    np.clip(vals, 0.0, 1.0, out=vals)
    return Profile(params, profile.geometry, vals, profile.symmetric)


def iterate(profile0: Profile, max_iter: int, conv_tol: float
            ) -> tuple[Profile, int, list[float]]:
    """Repeatedly apply the update until the sup-norm step change drops
    below ``conv_tol`` or ``max_iter`` is reached.

    Non-convergence is data (radial profiles are expected to keep eroding);
    the full sup-delta history is returned.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    sup_deltas: list[float] = []
    current = profile0
    for it in range(1, max_iter + 1):
        nxt = apply_T(current)
        delta = float(np.abs(nxt.values - current.values).max())
        sup_deltas.append(delta)
        current = nxt
        if delta < conv_tol:
            return current, it, sup_deltas
    return current, max_iter, sup_deltas


def survival_margin(profile: Profile) -> float:
    """min over grid weights of f(w, z0(w)) - 1/2 at z0(w) = (k*w)^(1/d).

    Positivity certifies two-opinion survival: the symmetric red-side bound
    follows from the symmetry condition.
    """
    if not isinstance(profile.geometry, HalfSpace):
        raise ValueError("survival margin is defined for half-space profiles")
    p = profile.params
    z0 = (p.k * p.w_grid) ** (1.0 / p.d)
    zg = p.z_grid
    vals = np.empty(p.w_grid.shape[0])
    for i, z in enumerate(z0):
        zz = min(max(z, zg[0]), zg[-1])
        j = min(max(np.searchsorted(zg, zz) - 1, 0), zg.shape[0] - 2)
        t = (zz - zg[j]) / (zg[j + 1] - zg[j])
        vals[i] = (1 - t) * profile.values[i, j] + t * profile.values[i, j + 1]
    return float((vals - 0.5).min())


def crossing_radius(profile: Profile) -> float | None:
    """Interpolated rho where the minimum-weight row crosses 1/2.

    Returns None when the row never crosses (entirely on one side).
    """
    if not isinstance(profile.geometry, Radial):
        raise ValueError("crossing radius is defined for radial profiles")
    row = profile.values[0] - 0.5
    rg = profile.params.z_grid
    if row[0] <= 0.0 or row[-1] >= 0.0:
        return None
    below = np.flatnonzero(row <= 0.0)
    j = below[0]
    a, b = row[j - 1], row[j]
    t = a / (a - b)
    return float(rg[j - 1] + t * (rg[j] - rg[j - 1]))


# ----------------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------------

def save_profile_csv(profile: Profile, path: str) -> str:
    """CSV with one row per grid node; parameters ride in a comment line.

    Values use 17 significant digits and round-trip exactly.
    """
    p = profile.params
    geom = profile.geometry
    zname = "rho" if isinstance(geom, Radial) else "z"
    fname = "g" if isinstance(geom, Radial) else "f"
    meta = (f"# girg-lab profile geometry={'radial' if isinstance(geom, Radial) else 'halfspace'}"
            f" d={p.d} tau={p.tau:.17g} k={p.k:.17g} w_cap={p.w_cap:.17g}"
            f" quad_tol={p.quad_tol:.17g} n_w={p.w_grid.shape[0]} n_z={p.z_grid.shape[0]}"
            f" truncate_lambda_tail={int(p.truncate_lambda_tail)}"
            f" symmetric={int(profile.symmetric)}")
    if isinstance(geom, Radial):
        meta += f" r={geom.r:.17g}"
    lines = [meta, f"w,{zname},{fname}"]
    for i, wv in enumerate(p.w_grid):
        for j, zv in enumerate(p.z_grid):
            lines.append(f"{wv:.17g},{zv:.17g},{profile.values[i, j]:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def load_profile_csv(path: str) -> Profile:
    with open(path) as fh:
        meta_line = fh.readline().strip()
        header = fh.readline().strip()
        body = fh.read()
    if not meta_line.startswith("# girg-lab profile"):
        raise ValueError("missing girg-lab profile metadata line")
    meta = dict(tok.split("=", 1) for tok in meta_line.split()[3:])
    raw = np.loadtxt(io.StringIO(body), delimiter=",").reshape(-1, 3)
    n_w = int(meta["n_w"])
    n_z = int(meta["n_z"])
    w_grid = raw[::n_z, 0].copy()
    z_grid = raw[:n_z, 1].copy()
    values = raw[:, 2].reshape(n_w, n_z).copy()
    params = MeanFieldParams(
        d=int(meta["d"]), tau=float(meta["tau"]), k=float(meta["k"]),
        w_cap=float(meta["w_cap"]), w_grid=w_grid, z_grid=z_grid,
        quad_tol=float(meta["quad_tol"]),
        truncate_lambda_tail=bool(int(meta["truncate_lambda_tail"])),
    )
    geom = Radial(float(meta["r"])) if meta["geometry"] == "radial" else HalfSpace()
    return Profile(params, geom, values, symmetric=bool(int(meta["symmetric"])))
