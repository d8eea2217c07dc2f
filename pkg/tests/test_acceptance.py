"""Acceptance criteria, one test per criterion.

Each test checks its stated tolerances and runtime budget and prints one
PASS/FAIL line (visible with ``pytest -s`` or on failure).
"""

import math
import time

import numpy as np
import pytest

from girglab import dynamics as dyn
from girglab import experiments as xp
from girglab import girg
from girglab import meanfield as mf
from girglab import theory as th
from oracles import bisect_delta_star, mc_advantage_halfspace, mc_advantage_radial


def _report(num, name, ok, detail, elapsed, budget):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {num}] {status} {name}: {detail} "
          f"({elapsed:.1f}s / budget {budget:.0f}s)")


def test_criterion_1_degree_law():
    budget = 30.0
    t0 = time.perf_counter()
    params = girg.GirgParams(d=2, tau=3.0, k=1.0, n=100_000, seed=1)
    graph = girg.build_graph(params)
    rep = girg.degree_report(graph)
    elapsed = time.perf_counter() - t0
    target = 4.0 * math.pi
    rel = abs(rep.mean_degree / target - 1.0)
    ratio = rep.mean_far / rep.mean_near
    ok = rel <= 0.03 and abs(ratio - 1.0) <= 0.05 and elapsed < budget
    _report(1, "degree law", ok,
            f"mean {rep.mean_degree:.3f} vs {target:.3f} (rel {rel:.3%}), "
            f"far/near {ratio:.3f}", elapsed, budget)
    assert rel <= 0.03
    assert abs(ratio - 1.0) <= 0.05
    assert elapsed < budget


def test_criterion_2_generator_exactness():
    budget = 10.0
    t0 = time.perf_counter()
    taus = (2.2, 2.5, 2.8, 3.2)
    ok = True
    for seed in range(20):
        n = 120 + 19 * seed  # up to 481
        p = girg.GirgParams(d=2, tau=taus[seed % 4], k=0.8 + 0.1 * (seed % 5),
                            n=n, seed=seed)
        g_cells = girg.build_graph(p, method="cells")
        g_brute = girg.build_graph(p, method="brute")
        ok = ok and g_cells.to_bytes() == g_brute.to_bytes()
        assert g_cells.to_bytes() == g_brute.to_bytes(), f"seed {seed}"
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < budget
    _report(2, "generator exactness", ok, "20 seeds bit-identical to brute force",
            elapsed, budget)
    assert elapsed < budget


def test_criterion_3_arrested_coarsening():
    budget = 1200.0
    t0 = time.perf_counter()
    cfg = xp.SweepConfig(n=10_000, d=2, avg_degree=20.0,
                         tau_values=(2.15, 2.5, 3.0),
                         side_values=xp.DEFAULT_SIDES,
                         runs_per_point=20, seed_base=1)
    curves = xp.survival_sweep(cfg)
    fits = [xp.fit_logistic(c) for c in curves]
    elapsed = time.perf_counter() - t0

    p215 = [pt.p_hat for pt in curves[0].points]
    has_low = min(p215) <= 0.2
    has_high = max(p215) >= 0.8
    s0s = [f.s0 for f in fits]
    decreasing = s0s[0] > s0s[1] > s0s[2]
    ok = has_low and has_high and decreasing and elapsed < budget
    _report(3, "arrested coarsening", ok,
            f"tau=2.15 p_hat range [{min(p215):.2f}, {max(p215):.2f}]; "
            f"s0 = {s0s[0]:.1f} > {s0s[1]:.1f} > {s0s[2]:.1f}", elapsed, budget)
    assert has_low and has_high
    assert decreasing
    assert all(f.b > 0 for f in fits)
    # the increasing transition beats the best decreasing-curve alternative
    for curve, fit in zip(curves, fits):
        mirrored = xp.SurvivalCurve(tau=curve.tau, points=tuple(
            xp.SurvivalPoint(side=-p.side, survived=p.survived, runs=p.runs,
                             nonconverged=p.nonconverged, p_hat=p.p_hat)
            for p in reversed(curve.points)))
        assert fit.log_likelihood >= xp.fit_logistic(mirrored).log_likelihood
    assert elapsed < budget


def test_criterion_4_fixed_point_and_symmetry():
    budget = 60.0
    t0 = time.perf_counter()
    k = 1.2 * th.k_min(2, 3.0)
    params = mf.halfspace_params(2, 3.0, k, w_cap=1e3)
    half = mf.constant_profile(params, 0.5)
    resid_fp = float(np.abs(mf.apply_T(half).values - 0.5).max())

    rng = np.random.default_rng(12)
    n = params.z_grid.shape[0]
    lam = mf.lambda_of_w(params.w_grid, params)
    resid_sym = 0.0
    for _ in range(3):
        upper = rng.random((params.w_grid.shape[0], n // 2))
        vals = np.concatenate([1.0 - upper[:, ::-1], upper], axis=1)
        prof = mf.Profile(params, mf.HalfSpace(), vals, symmetric=True)
        raw = mf.phi(mf.advantage_grid(prof) / np.sqrt(2.0 * lam)[:, None])
        resid_sym = max(resid_sym, float(np.abs(raw + raw[:, ::-1] - 1.0).max()))
    elapsed = time.perf_counter() - t0
    ok = resid_fp <= 1e-6 and resid_sym <= 1e-9 and elapsed < budget
    _report(4, "fixed point and symmetry", ok,
            f"|T(1/2)-1/2| = {resid_fp:.2e}, symmetry residual {resid_sym:.2e}",
            elapsed, budget)
    assert resid_fp <= 1e-6
    assert resid_sym <= 1e-9
    assert elapsed < budget


def test_criterion_5_survival_theorem():
    budget = 600.0
    t0 = time.perf_counter()
    k = 1.2 * th.k_min(2, 3.0)
    assert th.k_min(2, 3.0) == pytest.approx(122.6, abs=0.1)
    y = th.y_coefficient(2, 3.0, k)
    delta_star = th.solve_delta_star(y)
    params = mf.halfspace_params(2, 3.0, k, w_cap=1e3)
    f0 = mf.halfspace_indicator(params)
    prof, iters, deltas = mf.iterate(f0, 200, 1e-6)
    margin = mf.survival_margin(prof)
    elapsed = time.perf_counter() - t0
    need = delta_star - 0.5 - 0.01
    nonconstant = float(prof.values.max() - prof.values.min()) > 0.4
    ok = (deltas[-1] < 1e-6 and iters <= 200 and margin >= need
          and nonconstant and elapsed < budget)
    _report(5, "survival theorem", ok,
            f"{iters} iters, final delta {deltas[-1]:.2e}, margin {margin:.4f} "
            f">= {need:.4f} (delta* = {delta_star:.4f})", elapsed, budget)
    assert deltas[-1] < 1e-6
    assert margin >= need
    assert nonconstant
    assert elapsed < budget


def test_criterion_6_subsolution_machinery():
    budget = 600.0
    t0 = time.perf_counter()
    for y in (2.0, 3.0, 5.0):
        assert th.solve_delta_star(y) == pytest.approx(bisect_delta_star(y), abs=1e-8)
    assert th.solve_delta_star(1.0) is None
    assert th.solve_delta_star(math.sqrt(math.pi)) is None

    k = 1.2 * th.k_min(2, 3.0)
    params = mf.halfspace_params(2, 3.0, k, w_cap=1e3)
    spec, sub = th.build_subsolution(2, 3.0, k, params=params)
    validity = th.check_valid(sub, use_operator=True)
    comparison = th.check_comparison(sub, t_max=100)
    elapsed = time.perf_counter() - t0
    ok = validity.passed and comparison.ok and elapsed < budget
    _report(6, "subsolution machinery", ok,
            f"delta* matches oracle to 1e-8; validity "
            f"(sym {validity.symmetry_max_violation:.1e}, "
            f"sub {validity.subsolution_max_violation:.1e}) pass={validity.passed}; "
            f"comparison t<=100 ok={comparison.ok}", elapsed, budget)
    assert validity.passed, validity
    assert comparison.ok, comparison
    assert elapsed < budget


def test_criterion_7_erosion_bounds():
    budget = 900.0
    t0 = time.perf_counter()
    k = 1.2 * th.k_min(2, 3.0)
    reports = {}
    for r in (50.0, 100.0, 200.0):
        reports[r] = th.check_erosion_domination(r, 0.5, 3.0, k, t_max=20)
    elapsed = time.perf_counter() - t0
    dominated = all(rep.ok for rep in reports.values())
    shrinking = all(rep.crossing_non_increasing for rep in reports.values())
    slower = reports[200.0].recession_per_step < reports[50.0].recession_per_step
    ok = dominated and shrinking and slower and elapsed < budget
    recs = {r: rep.recession_per_step for r, rep in reports.items()}
    _report(7, "erosion bounds", ok,
            f"domination ok={dominated}, crossings non-increasing={shrinking}, "
            f"recession/step {recs[50.0]:.3f} (r=50) vs {recs[200.0]:.3f} (r=200), "
            f"delta bounds {reports[50.0].params.delta_bound:.3f}/"
            f"{reports[200.0].params.delta_bound:.3f}", elapsed, budget)
    for r, rep in reports.items():
        assert rep.ok, (r, rep.first_violation)
        assert rep.crossing_non_increasing, r
        assert rep.recession_per_step <= rep.params.delta_bound, r
    assert slower
    assert elapsed < budget


def _smooth_random_profile(params, rng, geometry):
    n_w = params.w_grid.shape[0]
    n_z = params.z_grid.shape[0]
    vals = rng.random((n_w, n_z))
    kernel = np.ones(9) / 9.0
    vals = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="same"),
                               1, vals)
    return mf.Profile(params, geometry, np.clip(vals, 0.0, 1.0))


def test_criterion_8_quadrature_vs_monte_carlo():
    budget = 300.0
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    cases = 0

    # half-space geometry, mostly d=2 plus d=1 and d=3 spot checks
    for d, n_cases in ((2, 14), (1, 3), (3, 3)):
        params = mf.halfspace_params(d, 3.0, 40.0, w_cap=50.0, n_w=12, n_z=512)
        for _ in range(n_cases):
            prof = _smooth_random_profile(params, rng, mf.HalfSpace())
            w = float(rng.uniform(1.0, 20.0))
            z = float(rng.uniform(-0.4, 0.4) * params.z_extent)
            res = mf.advantage_halfspace(prof, w, z)
            mu_mc, se = mc_advantage_halfspace(prof, w, z, 400_000,
                                               int(rng.integers(1 << 31)))
            dev = abs(res.mu - mu_mc) / math.sqrt(
                se ** 2 + res.quad_error_estimate ** 2)
            worst = max(worst, dev)
            cases += 1
            assert dev <= 3.0, (d, w, z, res.mu, mu_mc, se)

    rparams = mf.radial_params(3.0, 40.0, 30.0, w_cap=5.0, n_w=8)
    for _ in range(20):
        prof = _smooth_random_profile(rparams, rng, mf.Radial(30.0))
        w = float(rng.uniform(1.0, 5.0))
        rho = float(rng.uniform(0.5, 55.0))
        res = mf.advantage_radial(prof, w, rho)
        mu_mc, se = mc_advantage_radial(prof, w, rho, 400_000,
                                        int(rng.integers(1 << 31)))
        dev = abs(res.mu - mu_mc) / math.sqrt(
            se ** 2 + res.quad_error_estimate ** 2)
        worst = max(worst, dev)
        cases += 1
        assert dev <= 3.0, (w, rho, res.mu, mu_mc, se)

    elapsed = time.perf_counter() - t0
    ok = worst <= 3.0 and cases >= 40 and elapsed < budget
    _report(8, "quadrature vs Monte Carlo", ok,
            f"{cases} randomized cases, worst deviation {worst:.2f} combined SE",
            elapsed, budget)
    assert elapsed < budget
