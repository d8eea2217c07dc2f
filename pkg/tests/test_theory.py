import math

import numpy as np
import pytest

from girglab import meanfield as mf
from girglab import theory as th
from oracles import bisect_delta_star


def test_cone_constant():
    assert th.cone_constant(2) == pytest.approx(1.0 / (2.0 * math.sqrt(2.0)))
    assert th.cone_constant(2) == pytest.approx(0.35355, abs=1e-5)
    assert th.cone_constant(1) == pytest.approx(0.5)  # pi^0 / (2^1 * 1 * Gamma(1))


def test_y_coefficient_values_and_scaling():
    y1 = th.y_coefficient(2, 3.0, 1.0)
    assert y1 == pytest.approx(0.16007, abs=2e-5)
    assert th.y_coefficient(2, 3.0, 4.0) == pytest.approx(2.0 * y1, rel=1e-12)
    # y(k)/sqrt(k) constant in k
    ks = np.array([0.5, 3.0, 40.0, 700.0])
    ratios = [th.y_coefficient(2, 3.0, k) / math.sqrt(k) for k in ks]
    assert max(ratios) - min(ratios) < 1e-12
    assert th.k_min(2, 3.0) == pytest.approx(122.6, abs=0.1)


def test_solve_delta_star_against_oracle():
    for y in (2.0, 3.0, 5.0):
        got = th.solve_delta_star(y)
        want = bisect_delta_star(y)
        assert got == pytest.approx(want, abs=1e-8)
    assert th.solve_delta_star(1.0) is None
    assert th.solve_delta_star(math.sqrt(math.pi)) is None
    # y = 2 pins delta* ~ 0.8087 (solves erf(2t) = 2t at t ~ 0.309)
    assert th.solve_delta_star(2.0) == pytest.approx(0.8087, abs=5e-4)


def test_delta_star_root_quality_and_monotonicity():
    prev = 0.5
    for y in (1.8, 2.0, 3.0, 5.0, 12.0, 40.0):
        ds = th.solve_delta_star(y)
        assert 0.5 < ds < 1.0
        resid = float(mf.phi(y * (ds - 0.5))) - ds
        assert abs(resid) <= 1e-10
        assert ds >= prev  # delta* increases towards 1 with y
        prev = ds
    # strictly before saturation, approaching 1 after
    assert th.solve_delta_star(3.0) > th.solve_delta_star(2.0) > th.solve_delta_star(1.8)
    assert th.solve_delta_star(40.0) > 1.0 - 1e-9


def test_build_subsolution_pointwise_values():
    k = 1.2 * th.k_min(2, 3.0)
    spec, prof = th.build_subsolution(2, 3.0, k)
    # f(w, 0) = 1/2 for all w
    for w in (1.0, 3.0, 100.0):
        assert spec.evaluate(w, 0.0) == pytest.approx(0.5, abs=1e-15)
    # f(1, k^(1/d)) = delta*
    assert spec.evaluate(1.0, k ** 0.5) == pytest.approx(spec.delta_star, abs=1e-9)
    # constant in z beyond the ball of influence
    r_i = (2.0 * k) ** 0.5
    assert spec.evaluate(2.0, r_i) == spec.evaluate(2.0, 10 * r_i)
    # symmetric continuation
    assert spec.evaluate(3.0, -2.0) == pytest.approx(1.0 - spec.evaluate(3.0, 2.0))
    # grid profile is tagged symmetric and matches the evaluator at nodes
    p = prof.params
    i, j = 5, p.z_grid.shape[0] // 2 + 40
    assert prof.values[i, j] == pytest.approx(
        float(spec.evaluate(p.w_grid[i], p.z_grid[j])), abs=1e-12)
    assert prof.symmetric


def test_build_subsolution_rejects_small_k():
    with pytest.raises(ValueError):
        th.build_subsolution(2, 3.0, 0.5 * th.k_min(2, 3.0))


def test_check_valid_trivial_profiles(small_hs_params):
    # the half-space indicator satisfies conditions 1-3
    f0 = mf.halfspace_indicator(small_hs_params)
    rep = th.check_valid(f0, use_operator=False)
    assert rep.symmetry_max_violation == 0.0
    assert rep.z_monotonicity_max_violation == 0.0
    assert rep.w_monotonicity_max_violation == 0.0
    assert rep.passed
    # the constant 1/2 is a degenerate subsolution: all four conditions
    half = mf.constant_profile(small_hs_params, 0.5)
    rep = th.check_valid(half, use_operator=True)
    assert rep.passed and rep.subsolution_max_violation == 0.0


def test_check_valid_detects_violations(small_hs_params):
    p = small_hs_params
    n = p.z_grid.shape[0]
    vals = mf.halfspace_indicator(p).values.copy()
    vals[3, n // 2 + 5] = 0.0  # breaks z-monotonicity and symmetry
    prof = mf.Profile(p, mf.HalfSpace(), vals)
    rep = th.check_valid(prof, use_operator=False)
    assert not rep.passed
    assert rep.z_monotonicity_max_violation == pytest.approx(1.0)
    assert rep.symmetry_max_violation == pytest.approx(1.0)


def test_check_valid_built_subsolution_small():
    # smaller grid than the acceptance run, all four conditions
    k = 1.3 * th.k_min(2, 3.0)
    params = mf.halfspace_params(2, 3.0, k, w_cap=100.0, n_w=24)
    spec, sub = th.build_subsolution(2, 3.0, k, params=params)
    rep = th.check_valid(sub, use_operator=True)
    assert rep.passed, rep


def test_check_comparison_holds_for_half_and_detects_f0():
    k = 1.3 * th.k_min(2, 3.0)
    params = mf.halfspace_params(2, 3.0, k, w_cap=100.0, n_w=24)
    half = mf.constant_profile(params, 0.5)
    res = th.check_comparison(half, t_max=3)
    assert res.ok
    # f0 itself is not a subsolution: one update pulls f(w, 0+) below 1
    f0 = mf.halfspace_indicator(params)
    res = th.check_comparison(f0, t_max=3)
    assert not res.ok
    t, w, z = res.first_violation
    dz = float(params.z_grid[1] - params.z_grid[0])
    assert t == 1
    assert 0.0 <= z < 3.0 * dz


def test_check_comparison_built_subsolution_small():
    k = 1.3 * th.k_min(2, 3.0)
    params = mf.halfspace_params(2, 3.0, k, w_cap=100.0, n_w=24)
    spec, sub = th.build_subsolution(2, 3.0, k, params=params)
    pos = params.z_grid >= 0
    f0 = mf.halfspace_indicator(params)
    assert (sub.values[:, pos] <= f0.values[:, pos] + 1e-12).all()
    res = th.check_comparison(sub, t_max=15)
    assert res.ok, res


def test_erosion_params_formulas():
    ep = th.erosion_params(100.0, 0.5, 2, 1.0)
    assert ep.r_max == pytest.approx(100.0 ** 0.25)
    assert ep.w_max == pytest.approx(100.0 ** 0.25)
    assert ep.delta_bound == pytest.approx(0.05)
    # the bound halves when r quadruples at eps = 1/2
    ep4 = th.erosion_params(400.0, 0.5, 2, 1.0)
    assert ep4.delta_bound == pytest.approx(0.025)
    # strictly decreasing in r
    rs = [50.0, 100.0, 200.0, 400.0]
    ds = [th.erosion_params(r, 0.5, 2, 7.0).delta_bound for r in rs]
    assert all(b < a for a, b in zip(ds, ds[1:]))
    # consistency: w_max = r_max^(d/2) / k^(1/2)
    ep7 = th.erosion_params(123.0, 0.4, 2, 7.0)
    assert ep7.w_max == pytest.approx(ep7.r_max / math.sqrt(7.0))
    with pytest.raises(ValueError):
        th.erosion_params(0.9, 0.5, 2, 1.0)
    with pytest.raises(ValueError):
        th.erosion_params(10.0, 1.5, 2, 1.0)


@pytest.mark.parametrize("k", [1.0, 147.0])
def test_curvature_bound_geometric_sanity(k):
    # for points within r_max of a vertex near the sphere, the gap between
    # distance-to-sphere and distance-to-tangent-plane stays below the bound.
    # The clean r_max^2/(2r) form is exact for points on the ball side of the
    # tangent plane; points just outside can exceed it by at most the
    # finite-radius factor r/(r - r_max) (the gap is x1^2 / (2(r + x0))).
    rng = np.random.default_rng(17)
    r, eps = 100.0, 0.5
    ep = th.erosion_params(r, eps, 2, k)
    # tangent point at the origin, ball on the +x0 side, center at (r, 0);
    # the exact gap is x1^2 / (2 (r - x0)) <= slack * delta_bound
    slack = r / (r - 2.0 * ep.r_max)
    for z_v in (0.0, 1.0, -2.0, ep.r_max / 2):
        center = np.array([r, 0.0])
        x_v = np.array([z_v, 0.0])
        pts = x_v + ep.r_max * rng.standard_normal((1000, 2))
        keep = np.linalg.norm(pts - x_v, axis=1) <= ep.r_max
        pts = pts[keep]
        dist_sphere = np.abs(np.linalg.norm(pts - center, axis=1) - r)
        dist_plane = np.abs(pts[:, 0])
        gap = np.abs(dist_sphere - dist_plane)
        assert (gap <= slack * ep.delta_bound + 1e-12).all()
        outside = pts[:, 0] <= 0.0
        assert (gap[outside] <= ep.delta_bound + 1e-12).all()


def test_erosion_domination_quick():
    k = 1.2 * th.k_min(2, 3.0)
    rep = th.check_erosion_domination(30.0, 0.5, 3.0, k, t_max=3)
    assert rep.ok, rep.first_violation
    assert rep.crossing_non_increasing
    assert rep.crossings[0] == pytest.approx(30.0, abs=1e-9)
    # the ball strictly erodes, at a rate within the curvature bound
    assert 0.0 < rep.recession_per_step <= rep.params.delta_bound
    assert rep.crossings[-1] < rep.crossings[0]
    assert math.isfinite(rep.max_deficit)


def test_validity_report_io(tmp_path, small_hs_params):
    half = mf.constant_profile(small_hs_params, 0.5)
    rep = th.check_valid(half, use_operator=False)
    path = th.write_validity_report(rep, str(tmp_path / "report.txt"))
    text = open(path).read()
    assert "pass=1" in text and "symmetry_max_violation=0" in text
    viol = th.write_validity_violations(half, rep, str(tmp_path / "viol.csv"))
    assert open(viol).read().strip() == "condition,w,z,violation"
