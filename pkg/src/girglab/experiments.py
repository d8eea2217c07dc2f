"""Survival-probability sweeps over initial square size and tau, logistic
transition fits, and an end-to-end mean-field verification suite.

Each sweep point runs independent graph + dynamics realizations whose seeds
are derived from ``(seed_base, tau index, side index, run index)`` with the
splitmix64 chain, so results are reproducible and independent of execution
order.  Runs that hit the step budget are excluded from the survival
fraction and counted separately.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dyn
from . import girg
from . import meanfield as mf
from . import theory as th
from .rng import derive_seed

__all__ = [
    "SweepConfig",
    "SurvivalPoint",
    "SurvivalCurve",
    "LogisticFit",
    "survival_sweep",
    "fit_logistic",
    "logistic_standard_errors",
    "critical_size",
    "write_curves_csv",
    "write_fits_csv",
    "read_curves_csv",
    "read_fits_csv",
    "MeanfieldSuiteConfig",
    "run_meanfield_suite",
]

DEFAULT_SIDES = (4.0, 6.0, 9.0, 13.0, 18.0, 25.0, 34.0, 46.0, 62.0, 80.0)


@dataclass(frozen=True)
class SweepConfig:
    """Sweep definition; ``avg_degree`` is resolved to k per tau."""

    n: int = 10_000
    d: int = 2
    avg_degree: float = 20.0
    tau_values: tuple[float, ...] = (2.15, 2.5, 3.0)
    side_values: tuple[float, ...] = DEFAULT_SIDES
    runs_per_point: int = 20
    seed_base: int = 1
    max_steps: int | None = None
    survival_min_count: int = 50
    survival_fraction: float = 0.005

    def __post_init__(self):
        if self.runs_per_point < 1:
            raise ValueError("runs_per_point must be >= 1")
        if any(t <= 2.0 for t in self.tau_values):
            raise ValueError("all tau values must exceed 2")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        data = dict(data)
        for key in ("tau_values", "side_values"):
            if key in data:
                data[key] = tuple(float(x) for x in data[key])
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "d": self.d, "avg_degree": self.avg_degree,
            "tau_values": list(self.tau_values),
            "side_values": list(self.side_values),
            "runs_per_point": self.runs_per_point,
            "seed_base": self.seed_base,
            "max_steps": self.max_steps,
            "survival_min_count": self.survival_min_count,
            "survival_fraction": self.survival_fraction,
        }


@dataclass(frozen=True)
class SurvivalPoint:
    side: float
    survived: int
    runs: int            # converged runs entering p_hat
    nonconverged: int
    p_hat: float


@dataclass(frozen=True)
class SurvivalCurve:
    tau: float
    points: tuple[SurvivalPoint, ...]


@dataclass(frozen=True)
class LogisticFit:
    """Binomial MLE of p(s) = 1 / (1 + exp(-(s - s0)/b)) with b > 0."""

    s0: float
    b: float
    log_likelihood: float
    converged: bool


def _one_run(cfg: SweepConfig, tau: float, k: float, side: float,
             ti: int, si: int, run: int) -> tuple[bool, bool]:
    gseed = derive_seed(cfg.seed_base, ti, si, run, 0)
    dseed = derive_seed(cfg.seed_base, ti, si, run, 1)
    params = girg.GirgParams(d=cfg.d, tau=tau, k=k, n=cfg.n, seed=gseed)
    graph = girg.build_graph(params)
    config = dyn.init_opinions(graph, dyn.Square(side=side))
    _, stats = dyn.run_until_stable(
        graph, config, rng=dseed, max_steps=cfg.max_steps,
        survival_min_count=cfg.survival_min_count,
        survival_fraction=cfg.survival_fraction,
    )
    return stats.survived, stats.converged


def survival_sweep(cfg: SweepConfig, jobs: int = 1) -> list[SurvivalCurve]:
    """Run the sweep; deterministic for a given config regardless of ``jobs``."""
    tasks = [
        (ti, tau, si, side, run)
        for ti, tau in enumerate(cfg.tau_values)
        for si, side in enumerate(sorted(cfg.side_values))
        for run in range(cfg.runs_per_point)
    ]
    ks = {tau: girg.calibrate_k(cfg.avg_degree, cfg.d, tau) for tau in cfg.tau_values}

    results: dict[tuple[int, int], list[tuple[bool, bool]]] = {}

    def work(task):
        ti, tau, si, side, run = task
        return (ti, si), _one_run(cfg, tau, ks[tau], side, ti, si, run)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for key, res in pool.map(work, tasks):
                results.setdefault(key, []).append(res)
    else:
        for task in tasks:
            key, res = work(task)
            results.setdefault(key, []).append(res)

    curves = []
    for ti, tau in enumerate(cfg.tau_values):
        pts = []
        for si, side in enumerate(sorted(cfg.side_values)):
            runs = results[(ti, si)]
            conv = [s for s, c in runs if c]
            bad = sum(1 for _, c in runs if not c)
            surv = sum(conv)
            p_hat = surv / len(conv) if conv else math.nan
            pts.append(SurvivalPoint(side=side, survived=surv, runs=len(conv),
                                     nonconverged=bad, p_hat=p_hat))
        curves.append(SurvivalCurve(tau=tau, points=tuple(pts)))
    return curves


# ----------------------------------------------------------------------------
# logistic fitting
# ----------------------------------------------------------------------------

def _loglik_and_derivs(s, kk, nn, s0, b):
    u = (s - s0) / b
    # clipped logistic keeps the likelihood finite on separated data
    p = 1.0 / (1.0 + np.exp(-np.clip(u, -500, 500)))
    eps = 1e-300
    ll = float(np.sum(kk * np.log(p + eps) + (nn - kk) * np.log(1 - p + eps)))
    r = kk - nn * p
    wq = nn * p * (1.0 - p)
    g = np.array([-r.sum() / b, -(r * u).sum() / b])
    h00 = -wq.sum() / b ** 2
    h01 = (r.sum() - (wq * u).sum()) / b ** 2
    h11 = (2.0 * (r * u).sum() - (wq * u * u).sum()) / b ** 2
    return ll, g, np.array([[h00, h01], [h01, h11]])


def _separated(s, kk, nn):
    """Perfect separation: below some gap all fail, above it all survive."""
    fails = s[kk == 0]
    fulls = s[kk == nn]
    mixed = s[(kk > 0) & (kk < nn)]
    if mixed.size or not fails.size or not fulls.size:
        return None
    lo = fails.max()
    hi = fulls.min()
    if lo < hi and (s[s > lo] >= hi).all():
        return 0.5 * (lo + hi)
    return None


def fit_logistic(curve: SurvivalCurve) -> LogisticFit:
    """Binomial maximum likelihood fit of (s0, b).

    Coarse grid search then Newton refinement; the converged flag requires
    gradient norm < 1e-8.  Perfectly separated data fall back to the midpoint
    between the largest all-fail size and the smallest all-survive size, with
    b pinned at the search floor and ``converged=False``.
    """
    pts = [p for p in curve.points if p.runs > 0]
    if len(pts) < 2:
        raise ValueError("need at least two sweep points with converged runs")
    s = np.array([p.side for p in pts])
    kk = np.array([p.survived for p in pts], dtype=float)
    nn = np.array([p.runs for p in pts], dtype=float)

    span = float(s.max() - s.min()) or 1.0
    b_floor = 0.01 * span
    mid = _separated(s, kk, nn)
    if mid is not None:
        ll = _loglik_and_derivs(s, kk, nn, mid, b_floor)[0]
        return LogisticFit(s0=mid, b=b_floor, log_likelihood=ll, converged=False)

    s0_grid = np.linspace(s.min(), s.max(), 41)
    b_grid = np.geomspace(b_floor, 2.0 * span, 31)
    best = (-math.inf, s.mean(), span / 4.0)
    for s0 in s0_grid:
        for b in b_grid:
            ll = _loglik_and_derivs(s, kk, nn, s0, b)[0]
            if ll > best[0]:
                best = (ll, float(s0), float(b))
    _, s0, b = best

    converged = False
    for _ in range(100):
        ll, g, h = _loglik_and_derivs(s, kk, nn, s0, b)
        if np.linalg.norm(g) < 1e-8:
            converged = True
            break
        try:
            stp = np.linalg.solve(h - 1e-12 * np.eye(2), g)
        except np.linalg.LinAlgError:
            break
        # backtracking on the likelihood, keeping b positive
        scale = 1.0
        for _ in range(40):
            s0_new = s0 - scale * stp[0]
            b_new = b - scale * stp[1]
            if b_new > 0 and _loglik_and_derivs(s, kk, nn, s0_new, b_new)[0] >= ll:
                break
            scale *= 0.5
        else:
            break
        s0, b = s0_new, b_new
    ll = _loglik_and_derivs(s, kk, nn, s0, b)[0]
    return LogisticFit(s0=float(s0), b=float(b), log_likelihood=ll,
                       converged=converged)


def logistic_standard_errors(curve: SurvivalCurve, fit: LogisticFit
                             ) -> tuple[float, float]:
    """Asymptotic standard errors from the observed information matrix."""
    pts = [p for p in curve.points if p.runs > 0]
    s = np.array([p.side for p in pts])
    kk = np.array([p.survived for p in pts], dtype=float)
    nn = np.array([p.runs for p in pts], dtype=float)
    _, _, h = _loglik_and_derivs(s, kk, nn, fit.s0, fit.b)
    cov = np.linalg.inv(-h)
    return float(math.sqrt(max(cov[0, 0], 0.0))), float(math.sqrt(max(cov[1, 1], 0.0)))


def critical_size(fit: LogisticFit) -> float:
    """The transition midpoint; callers should heed ``fit.converged``."""
    if not fit.converged:
        import warnings
        warnings.warn("logistic fit did not converge; s0 is a fallback midpoint",
                      stacklevel=2)
    return fit.s0


def write_curves_csv(curves: list[SurvivalCurve], path: str) -> str:
    with open(path, "w") as fh:
        fh.write("tau,s,survived,runs,p_hat\n")
        for c in curves:
            for p in c.points:
                fh.write(f"{c.tau:.17g},{p.side:.17g},{p.survived},{p.runs},"
                         f"{p.p_hat:.17g}\n")
    return path


def write_fits_csv(rows: list[tuple[float, LogisticFit]], path: str) -> str:
    with open(path, "w") as fh:
        fh.write("tau,s0,b,loglik,converged\n")
        for tau, fit in rows:
            fh.write(f"{tau:.17g},{fit.s0:.17g},{fit.b:.17g},"
                     f"{fit.log_likelihood:.17g},{int(fit.converged)}\n")
    return path


def read_curves_csv(path: str) -> list[SurvivalCurve]:
    """Exact-value reader for ``curves.csv`` (inverse of write_curves_csv)."""
    by_tau: dict[float, list[SurvivalPoint]] = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "tau,s,survived,runs,p_hat":
            raise ValueError(f"unexpected curves header: {header!r}")
        for line in fh:
            tau_s, s_s, sv_s, runs_s, p_s = line.strip().split(",")
            by_tau.setdefault(float(tau_s), []).append(SurvivalPoint(
                side=float(s_s), survived=int(sv_s), runs=int(runs_s),
                nonconverged=0, p_hat=float(p_s)))
    return [SurvivalCurve(tau=t, points=tuple(pts)) for t, pts in by_tau.items()]


def read_fits_csv(path: str) -> list[tuple[float, LogisticFit]]:
    """Exact-value reader for ``fits.csv`` (inverse of write_fits_csv)."""
    out = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "tau,s0,b,loglik,converged":
            raise ValueError(f"unexpected fits header: {header!r}")
        for line in fh:
            tau_s, s0_s, b_s, ll_s, c_s = line.strip().split(",")
            out.append((float(tau_s), LogisticFit(
                s0=float(s0_s), b=float(b_s), log_likelihood=float(ll_s),
                converged=bool(int(c_s)))))
    return out


# ----------------------------------------------------------------------------
# mean-field suite
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class MeanfieldSuiteConfig:
    d: int = 2
    tau: float = 3.0
    k_factor: float = 1.2          # multiple of k_min(d, tau)
    w_cap: float = 1e3
    iters: int = 200
    conv_tol: float = 1e-6
    comparison_t_max: int = 100
    erosion_radii: tuple[float, ...] = (50.0, 100.0, 200.0)
    erosion_eps: float = 0.5
    erosion_t_max: int = 20
    quad_tol: float = 1e-6


@dataclass
class MeanfieldSuiteReport:
    config: MeanfieldSuiteConfig
    k: float
    delta_star: float
    iterations: int
    sup_deltas: list[float]
    survival_margin: float
    validity: th.ValidityReport
    comparison: th.ComparisonResult
    erosion: list[th.ErosionReport]
    passed: bool
    files: list[str] = field(default_factory=list)


def run_meanfield_suite(cfg: MeanfieldSuiteConfig, out_dir: str | None = None
                        ) -> MeanfieldSuiteReport:
    """Half-space convergence, subsolution checks, comparison, erosion series.

    Emits ``halfspace_profile.csv``, ``erosion_series.csv`` and
    ``validity_report.txt`` when ``out_dir`` is given, and aggregates a
    pass/fail summary against the standing thresholds.
    """
    k = cfg.k_factor * th.k_min(cfg.d, cfg.tau)
    params = mf.halfspace_params(cfg.d, cfg.tau, k, w_cap=cfg.w_cap,
                                 quad_tol=cfg.quad_tol)
    spec, sub = th.build_subsolution(cfg.d, cfg.tau, k, params=params)
    f0 = mf.halfspace_indicator(params)
    prof, iters, deltas = mf.iterate(f0, cfg.iters, cfg.conv_tol)
    margin = mf.survival_margin(prof)
    validity = th.check_valid(sub, use_operator=True)
    comparison = th.check_comparison(sub, t_max=cfg.comparison_t_max)
    erosion = [
        th.check_erosion_domination(r, cfg.erosion_eps, cfg.tau, k,
                                    cfg.erosion_t_max, d=cfg.d,
                                    quad_tol=cfg.quad_tol)
        for r in cfg.erosion_radii
    ]
    recessions = [rep.recession_per_step for rep in erosion]
    passed = (
        iters < cfg.iters
        and deltas[-1] < cfg.conv_tol
        and margin >= spec.delta_star - 0.5 - 0.01
        and validity.passed
        and comparison.ok
        and all(rep.ok and rep.crossing_non_increasing for rep in erosion)
        and all(b < a for a, b in zip(recessions, recessions[1:]))
    )
    report = MeanfieldSuiteReport(
        config=cfg, k=k, delta_star=spec.delta_star, iterations=iters,
        sup_deltas=deltas, survival_margin=margin, validity=validity,
        comparison=comparison, erosion=erosion, passed=passed,
    )
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        files = []
        files.append(mf.save_profile_csv(
            prof, os.path.join(out_dir, "halfspace_profile.csv")))
        files.append(th.write_validity_report(
            validity, os.path.join(out_dir, "validity_report.txt")))
        series = os.path.join(out_dir, "erosion_series.csv")
        with open(series, "w") as fh:
            fh.write("r,t,crossing_radius,delta_bound\n")
            for rep in erosion:
                for t, c in enumerate(rep.crossings):
                    cc = "" if c is None else format(c, ".17g")
                    fh.write(f"{rep.params.r:.17g},{t},{cc},"
                             f"{rep.params.delta_bound:.17g}\n")
        files.append(series)
        summary = os.path.join(out_dir, "meanfield_summary.txt")
        with open(summary, "w") as fh:
            fh.write(f"k={k:.17g}\n")
            fh.write(f"delta_star={spec.delta_star:.17g}\n")
            fh.write(f"iterations={iters}\n")
            fh.write(f"final_sup_delta={deltas[-1]:.17g}\n")
            fh.write(f"survival_margin={margin:.17g}\n")
            fh.write(f"validity_pass={int(validity.passed)}\n")
            fh.write(f"comparison_pass={int(comparison.ok)}\n")
            for rep in erosion:
                fh.write(f"erosion_r{rep.params.r:g}_pass={int(rep.ok)}\n")
                fh.write(f"erosion_r{rep.params.r:g}_recession="
                         f"{rep.recession_per_step:.17g}\n")
            fh.write(f"pass={int(passed)}\n")
        files.append(summary)
        report.files = files
    return report
