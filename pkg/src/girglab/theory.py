"""Constructive checks for interface survival: the explicit subsolution, its
validity conditions, the comparison principle, and curvature/erosion bounds.

The survival certificate is a "valid subsolution": a symmetric profile,
monotone in z everywhere and in w on ``[1, z^d/k]``, with f <= Tf on z >= 0.
Any such profile lower-bounds every iterate of the update operator started
from the half-space indicator, so a subsolution bounded away from 1/2
certifies that both opinions survive.

The explicit construction bounds the advantage of a vertex at height
``0 <= z <= r_I(w)`` from below by the blue mass of a cone inscribed in the
upper cap of its ball of influence, reduced by the reflected far-side tail:

    mu_blue(w, z) = 2 C(d) z^((d+1)/2) r_I^((d-1)/2)
                    * (1 - (1 + z/(2 r_I))^(d(1-tau))) * (delta* - 1/2)

with the cone constant C(d) = pi^((d-1)/2) / (2^((d+1)/2) d Gamma((d+1)/2))
and r_I = (k w)^(1/d).  Requiring self-consistency at (w, z) = (1, k^(1/d))
gives the scalar fixed point ``delta = Phi(y (delta - 1/2))`` whose
coefficient y grows like sqrt(k); a nontrivial root exists iff y > sqrt(pi).
The constants here are explicit and conservative, so the resulting minimum
density k_min is sufficient, not tight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma

from . import meanfield as mf
from .girg import unit_ball_volume

__all__ = [
    "SubsolutionSpec",
    "ValidityReport",
    "ComparisonResult",
    "ErosionParams",
    "ErosionReport",
    "cone_constant",
    "y_coefficient",
    "k_min",
    "solve_delta_star",
    "delta_star_brackets",
    "mu_blue_lower",
    "build_subsolution",
    "check_valid",
    "check_comparison",
    "erosion_params",
    "check_erosion_domination",
    "write_validity_report",
    "write_erosion_report",
]


def cone_constant(d: int) -> float:
    """C(d) = pi^((d-1)/2) / (2^((d+1)/2) * d * Gamma((d+1)/2))."""
    return math.pi ** ((d - 1) / 2.0) / (2.0 ** ((d + 1) / 2.0) * d * float(_gamma((d + 1) / 2.0)))


def y_coefficient(d: int, tau: float, k: float) -> float:
    """Coefficient y with delta* = Phi(y*(delta*-1/2)) at (w, z) = (1, k^(1/d)).

    y = 2 C(d) (1 - (3/2)^(d(1-tau))) k / sqrt(2 V_d k (1 + 1/(tau-2)));
    proportional to sqrt(k).
    """
    if not tau > 2.0:
        raise ValueError("tau must satisfy tau > 2")
    if not k > 0.0:
        raise ValueError("k must be positive")
    blue_tail = 1.0 - 1.5 ** (d * (1.0 - tau))
    lam1 = 2.0 * unit_ball_volume(d) * k * (1.0 + 1.0 / (tau - 2.0))
    return 2.0 * cone_constant(d) * blue_tail * k / math.sqrt(lam1)


def k_min(d: int, tau: float) -> float:
    """Smallest density with y(k) > sqrt(pi) (sufficient, not tight)."""
    c = y_coefficient(d, tau, 1.0)
    return math.pi / (c * c)


def _phi(x):
    return mf.phi(x)


def delta_star_brackets(y: float, n_scan: int = 1000) -> list[tuple[float, float]]:
    """Sign-change brackets of ``Phi(y (delta-1/2)) - delta`` above 1/2."""
    lo = 0.5 + 1e-6
    xs = np.linspace(lo, 1.0, n_scan + 1)
    gs = _phi(y * (xs - 0.5)) - xs
    out = []
    for i in range(n_scan):
        if gs[i] > 0.0 >= gs[i + 1]:
            out.append((float(xs[i]), float(xs[i + 1])))
    return out


def solve_delta_star(y: float, tol: float = 1e-10) -> float | None:
    """Smallest root of ``delta = Phi(y (delta - 1/2))`` in (1/2, 1).

    Returns None for y <= sqrt(pi): there g'(1/2) <= 0 and g' only decreases
    away from 1/2, so no root exists above the trivial one.  Roots are found
    by a bracketing scan followed by bisection.
    """
    if not math.isfinite(y):
        raise ValueError("y must be finite")
    if y <= math.sqrt(math.pi):
        return None
    brackets = delta_star_brackets(y)
    if not brackets:
        return None
    a, b = brackets[0]

    def g(x):
        return float(_phi(y * (x - 0.5))) - x

    while b - a > tol:
        mid = 0.5 * (a + b)
        if g(mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


@dataclass(frozen=True)
class SubsolutionSpec:
    """Parameters and exact evaluator of the explicit valid subsolution."""

    d: int
    tau: float
    k: float
    delta_star: float
    cone_constant: float
    y_coefficient: float

    def r_influence(self, w):
        return (self.k * np.asarray(w, dtype=np.float64)) ** (1.0 / self.d)

    def mu_blue(self, w, z):
        """Advantage lower bound from the blue cone, clamped at z = r_I(w)."""
        return mu_blue_lower(w, z, self.d, self.tau, self.k, self.delta_star)

    def evaluate(self, w, z):
        """Exact subsolution value; symmetric continuation for z < 0."""
        w = np.asarray(w, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        w, z = np.broadcast_arrays(w, z)
        lam = unit_ball_volume(self.d) * self.k * w * (1.0 + 1.0 / (self.tau - 2.0))
        pos = _phi(self.mu_blue(w, np.abs(z)) / np.sqrt(2.0 * lam))
        out = np.where(z >= 0.0, pos, 1.0 - pos)
        return float(out) if out.ndim == 0 else out


def mu_blue_lower(w, z, d: int, tau: float, k: float, delta_star: float):
    """Explicit lower bound on the blue-region advantage at height z in [0, r_I]."""
    w = np.asarray(w, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    r_i = (k * w) ** (1.0 / d)
    zc = np.minimum(z, r_i)
    tail = 1.0 - (1.0 + zc / (2.0 * r_i)) ** (d * (1.0 - tau))
    out = (2.0 * cone_constant(d) * zc ** (0.5 * (d + 1)) * r_i ** (0.5 * (d - 1))
           * tail * (delta_star - 0.5))
    return float(out) if out.ndim == 0 else out


def build_subsolution(d: int, tau: float, k: float,
                      params: mf.MeanFieldParams | None = None,
                      ) -> tuple[SubsolutionSpec, mf.Profile]:
    """Materialize the explicit subsolution on a half-space grid.

    Rejects densities below k_min (no nontrivial delta* exists there).
    """
    y = y_coefficient(d, tau, k)
    delta = solve_delta_star(y)
    if delta is None:
        raise ValueError(
            f"k={k:g} is below k_min={k_min(d, tau):g}: no nontrivial fixed point")
    spec = SubsolutionSpec(d=d, tau=tau, k=k, delta_star=delta,
                           cone_constant=cone_constant(d), y_coefficient=y)
    if params is None:
        params = mf.halfspace_params(d, tau, k)
    w = params.w_grid[:, None]
    zpos = np.abs(params.z_grid[None, :])
    lam = unit_ball_volume(d) * k * w * (1.0 + 1.0 / (tau - 2.0))
    pos = _phi(mu_blue_lower(w, zpos, d, tau, k, delta) / np.sqrt(2.0 * lam))
    vals = np.where(params.z_grid[None, :] >= 0.0, pos, 1.0 - pos)
    # exact mirror symmetry at the paired nodes
    n = params.z_grid.shape[0]
    vals[:, :n // 2] = 1.0 - vals[:, :n // 2 - 1:-1]
    profile = mf.Profile(params, mf.HalfSpace(), vals, symmetric=True)
    return spec, profile


# ----------------------------------------------------------------------------
# validity / comparison
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidityReport:
    symmetry_max_violation: float
    z_monotonicity_max_violation: float
    w_monotonicity_max_violation: float
    subsolution_max_violation: float
    passed: bool
    tolerances: dict = field(default_factory=dict)
    operator_checked: bool = False


def _condition_tolerance(params: mf.MeanFieldParams) -> np.ndarray:
    """Per-row tolerance for operator-based comparisons.

    The advantage error budget quad_tol*lambda maps to profile units through
    Phi's maximal slope: quad_tol * sqrt(lambda / (2 pi)); 10x per policy.
    """
    lam = mf.lambda_of_w(params.w_grid, params)
    return 10.0 * params.quad_tol * np.sqrt(lam / (2.0 * math.pi))


def check_valid(profile: mf.Profile, use_operator: bool = True,
                sym_tol: float = 1e-12, mono_tol: float = 1e-12,
                sub_tol: np.ndarray | float | None = None) -> ValidityReport:
    """Check the four validity conditions on a half-space profile grid.

    Conditions 1-3 (symmetry, z-monotonicity, w-monotonicity on
    ``w <= z^d/k`` for ``z >= k^(1/d)``) are grid-exact checks; condition 4
    applies the update operator and compares at nodes with z >= 0.
    """
    if not isinstance(profile.geometry, mf.HalfSpace):
        raise ValueError("validity is defined for half-space profiles")
    p = profile.params
    v = profile.values
    sym = float(np.abs(v + v[:, ::-1] - 1.0).max())
    zmono = float(np.maximum(v[:, :-1] - v[:, 1:], 0.0).max())

    wmono = 0.0
    zg = p.z_grid
    wg = p.w_grid
    r1 = p.k ** (1.0 / p.d)
    applicable = zg >= r1
    if applicable.any() and wg.shape[0] > 1:
        zcols = np.flatnonzero(applicable)
        wmax_for_z = (zg[zcols] ** p.d) / p.k
        pair_ok = wg[1:, None] <= wmax_for_z[None, :]  # (n_w-1, n_cols)
        drop = np.maximum(v[:-1, zcols] - v[1:, zcols], 0.0)
        wmono = float((drop * pair_ok).max()) if pair_ok.any() else 0.0

    subv = 0.0
    tol_rows = None
    if use_operator:
        tf = mf.apply_T(profile)
        if sub_tol is None:
            tol_rows = _condition_tolerance(p)
        else:
            tol_rows = np.broadcast_to(np.asarray(sub_tol, dtype=np.float64),
                                       (p.w_grid.shape[0],)).copy()
        pos = p.z_grid >= 0.0
        diff = profile.values[:, pos] - tf.values[:, pos]
        subv = float(diff.max())
        sub_ok = bool((diff <= tol_rows[:, None]).all())
    else:
        sub_ok = True

    tols = {"symmetry": sym_tol, "z_monotonicity": mono_tol,
            "w_monotonicity": mono_tol}
    if tol_rows is not None:
        tols["subsolution"] = float(tol_rows.max())
    passed = (sym <= sym_tol and zmono <= mono_tol and wmono <= mono_tol and sub_ok)
    return ValidityReport(
        symmetry_max_violation=sym,
        z_monotonicity_max_violation=zmono,
        w_monotonicity_max_violation=wmono,
        subsolution_max_violation=subv,
        passed=passed,
        tolerances=tols,
        operator_checked=use_operator,
    )


@dataclass(frozen=True)
class ComparisonResult:
    ok: bool
    t_max: int
    max_deficit: float
    first_violation: tuple[int, float, float] | None  # (t, w, z)


def check_comparison(sub: mf.Profile, t_max: int,
                     tol: np.ndarray | float | None = None) -> ComparisonResult:
    """Comparison principle: the subsolution stays below every iterate.

    Iterates ``f_t`` from the half-space indicator on the subsolution's own
    grid and asserts ``sub <= f_t + tol`` at all nodes with z >= 0 for every
    ``t <= t_max``.
    """
    p = sub.params
    if tol is None:
        tol_rows = _condition_tolerance(p)
    else:
        tol_rows = np.broadcast_to(np.asarray(tol, dtype=np.float64),
                                   (p.w_grid.shape[0],)).copy()
    f = mf.halfspace_indicator(p)
    pos = p.z_grid >= 0.0
    if (sub.values[:, pos] > f.values[:, pos] + 1e-12).any():
        raise ValueError("subsolution exceeds the half-space indicator on z >= 0")
    worst = -math.inf
    first = None
    ok = True
    for t in range(1, t_max + 1):
        f = mf.apply_T(f)
        deficit = sub.values[:, pos] - f.values[:, pos]
        worst = max(worst, float(deficit.max()))
        bad = deficit > tol_rows[:, None]
        if ok and bad.any():
            i, j = np.unravel_index(np.argmax(deficit - tol_rows[:, None]), deficit.shape)
            first = (t, float(p.w_grid[i]), float(p.z_grid[pos][j]))
            ok = False
    return ComparisonResult(ok=ok, t_max=t_max, max_deficit=worst, first_violation=first)


# ----------------------------------------------------------------------------
# erosion
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ErosionParams:
    """Curvature-control parameters for a ball of radius r.

    ``r_max = k^(1/d) r^((1-eps)/2)`` bounds the reach of all neighbours once
    weights are capped at ``w_max = r_max^(d/2) / k^(1/2) = r^(d(1-eps)/4)``;
    within that reach the sphere-vs-tangent-plane discrepancy is at most
    ``delta_bound = r_max^2 / (2r) = k^(2/d) r^(-eps) / 2``.
    """

    r: float
    eps: float
    d: int
    k: float
    r_max: float
    w_max: float
    delta_bound: float


def erosion_params(r: float, eps: float, d: int, k: float) -> ErosionParams:
    if not r > 1.0:
        raise ValueError("ball radius must exceed 1")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    r_max = k ** (1.0 / d) * r ** ((1.0 - eps) / 2.0)
    w_max = r ** (d * (1.0 - eps) / 4.0)
    delta_bound = k ** (2.0 / d) * r ** (-eps) / 2.0
    return ErosionParams(r=r, eps=eps, d=d, k=k, r_max=r_max, w_max=w_max,
                         delta_bound=delta_bound)


@dataclass(frozen=True)
class ErosionReport:
    params: ErosionParams
    t_max: int
    ok: bool
    max_deficit: float
    first_violation: tuple[int, float, float] | None  # (t, w, rho)
    crossings: list[float | None]
    recession_per_step: float
    crossing_non_increasing: bool
    tolerance_max: float


def check_erosion_domination(r: float, eps: float, tau: float, k: float,
                             t_max: int, *, d: int = 2, n_w: int = 16,
                             quad_tol: float = 1e-6, n_theta: int = 192,
                             drho: float | None = None) -> ErosionReport:
    """Check ``g_t(w, rho) >= f_t(w, z - t*Delta)`` at all radial grid nodes.

    ``g_t`` is the radial iteration from the ball indicator and ``f_t`` the
    half-space iteration from the half-space indicator, both with weights
    capped at ``w_max(r)``; ``z = r - rho`` is the signed distance to the
    initial boundary and ``Delta`` the curvature bound.  Also measures the
    per-step recession of the 1/2-crossing for comparison with Delta.
    """
    ep = erosion_params(r, eps, d, k)
    if ep.w_max <= 1.0:
        raise ValueError("w_max(r) <= 1: no weight range survives the cutoff")
    hs = mf.halfspace_params(d, tau, k, w_cap=ep.w_max, n_w=n_w,
                             quad_tol=quad_tol, dz_target=drho)
    dz = float(hs.z_grid[1] - hs.z_grid[0])
    rad = mf.radial_params(tau, k, r, d=d, w_cap=ep.w_max, n_w=n_w,
                           drho=dz, quad_tol=quad_tol, n_theta=n_theta)
    g = mf.ball_indicator(rad, r)
    f = mf.halfspace_indicator(hs)

    # tolerance: 10x the estimated numerical error (quadrature budget through
    # Phi's slope, angular-rule refinement residual, and z-interpolation of f)
    lam = mf.lambda_of_w(rad.w_grid, rad)
    base = quad_tol * np.sqrt(lam / (2.0 * math.pi))
    fine = mf.MeanFieldParams(d=d, tau=tau, k=k, w_cap=ep.w_max,
                              w_grid=rad.w_grid, z_grid=rad.z_grid,
                              quad_tol=quad_tol, n_theta=2 * n_theta)
    g1 = mf.apply_T(g)
    mu_coarse = mf.advantage_grid(g1)
    mu_fine = mf.advantage_grid(mf.Profile(fine, mf.Radial(r), g1.values))
    theta_err = np.abs(mu_coarse - mu_fine).max(axis=1) / np.sqrt(2.0 * lam) / math.sqrt(math.pi)

    delta = ep.delta_bound
    zs = r - rad.z_grid
    crossings: list[float | None] = [mf.crossing_radius(g)]
    worst = -math.inf
    tol_max = 0.0
    first = None
    ok = True
    for t in range(0, t_max + 1):
        if t > 0:
            g = mf.apply_T(g)
            f = mf.apply_T(f)
            crossings.append(mf.crossing_radius(g))
            interp_err = np.abs(np.diff(f.values, n=2, axis=1)).max(axis=1) / 8.0
        else:
            interp_err = 0.0  # indicators are sampled on aligned lattices
        tol_rows = 10.0 * (base + theta_err) + interp_err
        tol_max = max(tol_max, float(tol_rows.max()))
        for i, wv in enumerate(rad.w_grid):
            fvals = np.interp(zs - t * delta, hs.z_grid, f.values[i])
            deficit = fvals - g.values[i]
            dmax = float(deficit.max())
            worst = max(worst, dmax)
            if ok and dmax > tol_rows[i]:
                j = int(np.argmax(deficit))
                first = (t, float(wv), float(rad.z_grid[j]))
                ok = False

    xs = [c for c in crossings if c is not None]
    non_increasing = all(b <= a + 1e-9 for a, b in zip(xs, xs[1:]))
    recession = (xs[0] - xs[-1]) / max(len(xs) - 1, 1) if len(xs) >= 2 else math.nan
    return ErosionReport(params=ep, t_max=t_max, ok=ok, max_deficit=worst,
                         first_violation=first, crossings=crossings,
                         recession_per_step=recession,
                         crossing_non_increasing=non_increasing,
                         tolerance_max=tol_max)


# ----------------------------------------------------------------------------
# report serialization
# ----------------------------------------------------------------------------

def write_validity_report(report: ValidityReport, path: str) -> str:
    lines = [
        f"symmetry_max_violation={report.symmetry_max_violation:.17g}",
        f"z_monotonicity_max_violation={report.z_monotonicity_max_violation:.17g}",
        f"w_monotonicity_max_violation={report.w_monotonicity_max_violation:.17g}",
        f"subsolution_max_violation={report.subsolution_max_violation:.17g}",
        f"operator_checked={int(report.operator_checked)}",
        f"pass={int(report.passed)}",
    ]
    for name, tol in report.tolerances.items():
        lines.append(f"tolerance_{name}={tol:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_validity_violations(profile: mf.Profile, report: ValidityReport,
                              path: str) -> str:
    """CSV of grid nodes exceeding the report's tolerances, per condition."""
    p = profile.params
    v = profile.values
    tols = report.tolerances
    rows = []

    sym = np.abs(v + v[:, ::-1] - 1.0)
    for i, j in zip(*np.nonzero(sym > tols["symmetry"])):
        rows.append(("symmetry", p.w_grid[i], p.z_grid[j], sym[i, j]))

    zdrop = np.maximum(v[:, :-1] - v[:, 1:], 0.0)
    for i, j in zip(*np.nonzero(zdrop > tols["z_monotonicity"])):
        rows.append(("z_monotonicity", p.w_grid[i], p.z_grid[j], zdrop[i, j]))

    r1 = p.k ** (1.0 / p.d)
    zcols = np.flatnonzero(p.z_grid >= r1)
    if zcols.size and p.w_grid.shape[0] > 1:
        wmax_for_z = (p.z_grid[zcols] ** p.d) / p.k
        pair_ok = p.w_grid[1:, None] <= wmax_for_z[None, :]
        drop = np.maximum(v[:-1, zcols] - v[1:, zcols], 0.0) * pair_ok
        for i, jj in zip(*np.nonzero(drop > tols["w_monotonicity"])):
            rows.append(("w_monotonicity", p.w_grid[i], p.z_grid[zcols[jj]],
                         drop[i, jj]))

    if report.operator_checked:
        tf = mf.apply_T(profile)
        tol_rows = _condition_tolerance(p)
        pos = np.flatnonzero(p.z_grid >= 0.0)
        diff = v[:, pos] - tf.values[:, pos]
        for i, jj in zip(*np.nonzero(diff > tol_rows[:, None])):
            rows.append(("subsolution", p.w_grid[i], p.z_grid[pos[jj]],
                         diff[i, jj]))

    with open(path, "w") as fh:
        fh.write("condition,w,z,violation\n")
        for cond, wv, zv, amt in rows:
            fh.write(f"{cond},{wv:.17g},{zv:.17g},{amt:.17g}\n")
    return path


def write_erosion_report(report: ErosionReport, path: str,
                         series_path: str | None = None) -> str:
    ep = report.params
    lines = [
        f"r={ep.r:.17g}",
        f"eps={ep.eps:.17g}",
        f"r_max={ep.r_max:.17g}",
        f"w_max={ep.w_max:.17g}",
        f"delta_bound={ep.delta_bound:.17g}",
        f"t_max={report.t_max}",
        f"max_deficit={report.max_deficit:.17g}",
        f"tolerance_max={report.tolerance_max:.17g}",
        f"recession_per_step={report.recession_per_step:.17g}",
        f"crossing_non_increasing={int(report.crossing_non_increasing)}",
        f"pass={int(report.ok)}",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if series_path is not None:
        with open(series_path, "w") as fh:
            fh.write("t,crossing_radius\n")
            for t, c in enumerate(report.crossings):
                fh.write(f"{t},{'' if c is None else format(c, '.17g')}\n")
    return path
