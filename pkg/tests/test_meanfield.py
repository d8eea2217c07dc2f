import math

import numpy as np
import pytest

from girglab import meanfield as mf
from girglab import _operators as ops
from oracles import erf_series, mc_advantage_halfspace, mc_advantage_radial, \
    mc_red_region_advantage


def test_phi_basics():
    assert mf.phi(0.0) == 0.5
    for x in (0.5, 1.0, 3.0):
        assert mf.phi(x) + mf.phi(-x) == pytest.approx(1.0, abs=1e-15)
    xs = np.linspace(-4, 4, 101)
    assert (np.diff(mf.phi(xs)) > 0).all()
    # series oracle: erf(1) ~ 0.84270
    assert mf.phi(1.0) == pytest.approx(0.5 * (1 + erf_series(1.0)), abs=1e-14)
    assert mf.phi(1.0) == pytest.approx(0.92135, abs=5e-6)


def test_lambda_of_w():
    lam = mf.lambda_of_w(1.0, d=2, tau=3.0, k=1.0, w_cap=1e3, truncate_tail=False)
    assert lam == pytest.approx(2 * math.pi)
    assert mf.lambda_of_w(2.0, d=2, tau=3.0, k=1.0, w_cap=1e3,
                          truncate_tail=False) == pytest.approx(2 * lam)
    # truncated tail with w_cap = 1: the far term vanishes
    lam1 = mf.lambda_of_w(1.0, d=2, tau=3.0, k=1.0, w_cap=1.0, truncate_tail=True)
    assert lam1 == pytest.approx(math.pi)
    # truncated converges to untruncated as w_cap grows
    lam_big = mf.lambda_of_w(1.0, d=2, tau=3.0, k=1.0, w_cap=1e9, truncate_tail=True)
    assert lam_big == pytest.approx(2 * math.pi, rel=1e-8)


def test_params_validation():
    with pytest.raises(ValueError):
        mf.halfspace_params(2, 2.0, 1.0)
    with pytest.raises(ValueError):
        mf.halfspace_params(2, 3.0, -1.0)
    with pytest.raises(ValueError):
        mf.halfspace_params(2, 3.0, 40.0, quad_tol=1e-2)
    with pytest.warns(UserWarning):
        mf.halfspace_params(2, 3.0, 1.0, w_cap=10.0)  # lambda(1) < 30


def test_profile_validation(small_hs_params):
    shape = (small_hs_params.w_grid.shape[0], small_hs_params.z_grid.shape[0])
    with pytest.raises(ValueError):
        mf.Profile(small_hs_params, mf.HalfSpace(), np.full(shape, 1.5))
    bad = np.full(shape, 0.4)
    with pytest.raises(ValueError):
        mf.Profile(small_hs_params, mf.HalfSpace(), bad, symmetric=True)


def test_profile_evaluate_bilinear(small_hs_params):
    p = small_hs_params
    vals = np.random.default_rng(0).random(
        (p.w_grid.shape[0], p.z_grid.shape[0]))
    prof = mf.Profile(p, mf.HalfSpace(), vals)
    # exact at nodes
    assert prof.evaluate(p.w_grid[3], p.z_grid[10]) == pytest.approx(vals[3, 10])
    # constant extrapolation beyond the grid
    assert prof.evaluate(p.w_grid[0] , p.z_grid[-1] + 50.0) == pytest.approx(vals[0, -1])
    assert prof.evaluate(p.w_cap * 10, p.z_grid[5]) == pytest.approx(vals[-1, 5])
    # midpoint in z is the average of the bracketing nodes
    zmid = 0.5 * (p.z_grid[7] + p.z_grid[8])
    assert prof.evaluate(p.w_grid[0], zmid) == pytest.approx(0.5 * (vals[0, 7] + vals[0, 8]))


def test_chord_kernel_mass():
    for d in (1, 2, 3, 4, 6):
        R = 1.37
        assert float(ops.chord_A(R, R, d)) == pytest.approx(float(ops.chord_mass(R, d)))
        assert float(ops.chord_B(-R, R, d)) == 0.0
        # B(u) - B(-u) = mass * u for all u
        for u in (0.2, 0.9, 2.0):
            got = float(ops.chord_B(u, R, d) - ops.chord_B(-u, R, d))
            assert got == pytest.approx(float(ops.chord_mass(R, d)) * u, rel=1e-12)


def test_advantage_constant_half_is_zero(small_hs_params):
    prof = mf.constant_profile(small_hs_params, 0.5)
    assert np.abs(mf.advantage_grid(prof)).max() == 0.0
    res = mf.advantage_halfspace(prof, 2.0, 1.0)
    assert res.mu == pytest.approx(0.0, abs=1e-12)


def test_advantage_all_blue(small_hs_params):
    prof = mf.constant_profile(small_hs_params, 1.0)
    res = mf.advantage_halfspace(prof, 1.5, -3.0)
    # lambda_minus vanishes; mu equals the truncated partner measure, which
    # matches lambda(w) up to the w_cap tail mass
    assert res.lambda_minus == pytest.approx(0.0, abs=1e-9 * res.mu)
    assert res.mu == pytest.approx(mf.kernel_mass(1.5, small_hs_params), rel=1e-12)
    tail = small_hs_params.w_cap ** (2.0 - small_hs_params.tau)
    assert res.mu == pytest.approx(res.lambda_total, rel=2 * tail)


def test_advantage_result_invariants(small_hs_indicator):
    res = mf.advantage_halfspace(small_hs_indicator, 2.0, 0.7)
    assert res.mu == res.lambda_plus - res.lambda_minus  # exact by construction
    assert res.lambda_plus + res.lambda_minus == pytest.approx(
        mf.kernel_mass(2.0, small_hs_indicator.params), rel=1e-12)
    assert res.quad_error_estimate < 1e-6 * res.lambda_total


def test_apply_T_fixed_point(small_hs_params):
    prof = mf.constant_profile(small_hs_params, 0.5)
    out = mf.apply_T(prof)
    assert np.abs(out.values - 0.5).max() == 0.0


def test_apply_T_symmetry_preservation(small_hs_params):
    rng = np.random.default_rng(7)
    p = small_hs_params
    n = p.z_grid.shape[0]
    worst = 0.0
    for _ in range(5):
        half = rng.random((p.w_grid.shape[0], n // 2))
        vals = np.concatenate([1.0 - half[:, ::-1], half], axis=1)
        prof = mf.Profile(p, mf.HalfSpace(), vals, symmetric=True)
        mu = mf.advantage_grid(prof)
        lam = mf.lambda_of_w(p.w_grid, p)
        raw = mf.phi(mu / np.sqrt(2 * lam)[:, None])
        worst = max(worst, float(np.abs(raw + raw[:, ::-1] - 1.0).max()))
    assert worst <= 1e-9
    # tagged outputs stay exactly symmetric
    out = mf.apply_T(mf.halfspace_indicator(p))
    assert out.symmetric
    assert np.abs(out.values + out.values[:, ::-1] - 1.0).max() <= 1e-12


def test_apply_T_monotone_everywhere(small_hs_params):
    rng = np.random.default_rng(3)
    p = small_hs_params
    shape = (p.w_grid.shape[0], p.z_grid.shape[0])
    for _ in range(50):
        a = rng.random(shape)
        b = np.clip(a + rng.random(shape) * (1 - a), 0, 1)
        ta = mf.apply_T(mf.Profile(p, mf.HalfSpace(), a))
        tb = mf.apply_T(mf.Profile(p, mf.HalfSpace(), b))
        assert (ta.values <= tb.values + 1e-9).all()


def test_apply_T_monotone_symmetric_pairs(small_hs_params):
    # symmetric f <= g on z >= 0 implies T f <= T g on z >= 0
    rng = np.random.default_rng(4)
    p = small_hs_params
    n = p.z_grid.shape[0]
    for _ in range(5):
        half = rng.random((p.w_grid.shape[0], n // 2))
        bump = rng.random((p.w_grid.shape[0], n // 2)) * (1 - half)
        f = np.concatenate([1.0 - half[:, ::-1], half], axis=1)
        g = np.concatenate([1.0 - (half + bump)[:, ::-1], half + bump], axis=1)
        tf = mf.apply_T(mf.Profile(p, mf.HalfSpace(), f, symmetric=True))
        tg = mf.apply_T(mf.Profile(p, mf.HalfSpace(), g, symmetric=True))
        assert (tf.values[:, n // 2:] <= tg.values[:, n // 2:] + 1e-9).all()


def test_operator_continuity_proxy(small_hs_indicator):
    # |(T f)(w, z+h) - (T f)(w, z)| shrinks as h halves
    prof = small_hs_indicator
    p = prof.params
    lam = mf.lambda_of_w(3.0, p)
    z = 1.3
    base = mf.phi(mf.advantage_halfspace(prof, 3.0, z).mu / math.sqrt(2 * lam))
    gaps = []
    for h in (0.8, 0.4, 0.2, 0.1):
        shifted = mf.phi(mf.advantage_halfspace(prof, 3.0, z + h).mu / math.sqrt(2 * lam))
        gaps.append(abs(shifted - base))
    assert gaps[0] > gaps[1] > gaps[2] > gaps[3]


def test_advantage_vs_monte_carlo_halfspace(small_hs_indicator):
    res = mf.advantage_halfspace(small_hs_indicator, 1.0, 0.5)
    mu_mc, se = mc_advantage_halfspace(small_hs_indicator, 1.0, 0.5, 2_000_000, 42)
    dev = abs(res.mu - mu_mc) / math.sqrt(se ** 2 + res.quad_error_estimate ** 2)
    assert dev < 3.0


def test_advantage_vs_monte_carlo_paper_example():
    # half-space indicator, d=2, tau=3, k=1, w=1, z=0.5 vs a 1e7-sample oracle
    with pytest.warns(UserWarning):
        params = mf.halfspace_params(2, 3.0, 1.0, w_cap=1e3, n_w=32, n_z=1024)
    f0 = mf.halfspace_indicator(params)
    res = mf.advantage_halfspace(f0, 1.0, 0.5)
    mu_mc, se = mc_advantage_halfspace(f0, 1.0, 0.5, 10_000_000, 123)
    assert abs(res.mu - mu_mc) <= 3.0 * math.sqrt(se ** 2 + res.quad_error_estimate ** 2)


def test_red_region_advantage_nonnegative(small_hs_params):
    # Monte Carlo estimate of the red-region contribution stays nonnegative
    # (within 3 standard errors) for valid profiles and z >= 0
    rng = np.random.default_rng(11)
    p = small_hs_params
    n = p.z_grid.shape[0]
    half = np.sort(rng.random((p.w_grid.shape[0], n // 2)), axis=1)
    half = 0.5 + 0.5 * half  # in [1/2, 1], nondecreasing in z
    vals = np.concatenate([1.0 - half[:, ::-1], half], axis=1)
    prof = mf.Profile(p, mf.HalfSpace(), vals, symmetric=True)
    for (w, z, seed) in [(1.0, 0.5, 1), (2.0, 3.0, 2), (5.0, 0.0, 3)]:
        mu_r, se = mc_red_region_advantage(prof, w, z, 400_000, seed)
        assert mu_r > -3.0 * se - 1e-9


def test_radial_fixed_point_and_center():
    params = mf.radial_params(3.0, 40.0, 30.0, w_cap=5.0, n_w=8)
    half = mf.constant_profile(params, 0.5, mf.Radial(30.0))
    assert np.abs(mf.advantage_grid(half)).max() == 0.0
    # all-blue ball seen from its center: the full neighbourhood is blue
    g0 = mf.ball_indicator(params, 30.0)
    res = mf.advantage_radial(g0, 1.0, 0.0)
    assert res.mu == pytest.approx(mf.kernel_mass(1.0, params), rel=1e-9)
    assert res.lambda_minus == pytest.approx(0.0, abs=1e-9 * res.mu)


def test_radial_grid_vs_pointwise_and_mc():
    params = mf.radial_params(3.0, 40.0, 30.0, w_cap=5.0, n_w=8)
    g0 = mf.ball_indicator(params, 30.0)
    mus = mf.advantage_grid(g0)
    rg = params.z_grid
    j = int(np.searchsorted(rg, 29.5))
    res = mf.advantage_radial(g0, params.w_grid[3], rg[j])
    assert res.mu == pytest.approx(mus[3, j], abs=5e-4 * res.lambda_total)
    mu_mc, se = mc_advantage_radial(g0, params.w_grid[3], float(rg[j]), 2_000_000, 9)
    assert abs(res.mu - mu_mc) <= 3.0 * math.sqrt(se ** 2 + res.quad_error_estimate ** 2)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_radial_flux_matches_arc_formula():
    # the flux evaluator agrees with the literal in-disk arc-length kernel,
    # including the full-circle core when the disk covers the origin
    from scipy import integrate
    params = mf.radial_params(3.0, 40.0, 30.0, w_cap=5.0, n_w=8)
    rg = params.z_grid
    rng = np.random.default_rng(2)
    gam = rng.random(rg.shape[0]) * 2 - 1
    g_nodes = ops.radial_G_nodes(rg, gam)[0]

    def gam_at(x):
        return float(np.interp(x, rg, gam))

    def arc_integral(rho_v, R):
        def integrand(rp):
            c = (rho_v ** 2 + rp ** 2 - R ** 2) / (2 * rho_v * rp)
            return gam_at(rp) * 2.0 * rp * math.acos(min(1.0, max(-1.0, c)))
        lo = abs(rho_v - R)
        total = integrate.quad(integrand, lo, rho_v + R, limit=500)[0]
        if R > rho_v:  # circles of radius < R - rho lie entirely inside
            core = integrate.quad(lambda rp: gam_at(rp) * 2 * math.pi * rp,
                                  0.0, R - rho_v, limit=200)[0]
            total += core
        return total

    for rho_v, R in [(29.5, 3.0), (5.0, 2.0), (2.0, 5.0), (10.0, 12.0)]:
        direct = arc_integral(rho_v, R)
        flux = ops.disk_average_flux(rg, g_nodes, gam, rho_v, R, 4096)
        assert flux == pytest.approx(direct, rel=2e-4, abs=2e-4)


def test_iterate_trivial_fixed_point(small_hs_params):
    prof = mf.constant_profile(small_hs_params, 0.5)
    out, iters, deltas = mf.iterate(prof, 10, 1e-9)
    assert iters == 1 and deltas == [0.0]
    assert np.abs(out.values - 0.5).max() == 0.0


def test_survival_margin_examples(small_hs_params):
    assert mf.survival_margin(mf.constant_profile(small_hs_params, 0.5)) == 0.0
    assert mf.survival_margin(mf.halfspace_indicator(small_hs_params)) == pytest.approx(0.5)


def test_crossing_radius_examples():
    params = mf.radial_params(3.0, 40.0, 50.0, w_cap=5.0, n_w=8)
    g0 = mf.ball_indicator(params, 50.0)
    # the sharp step straddles r on the half-offset grid: crossing exactly 50
    assert mf.crossing_radius(g0) == pytest.approx(50.0, abs=1e-12)
    flat = mf.constant_profile(params, 0.5, mf.Radial(50.0))
    assert mf.crossing_radius(flat) is None


def test_profile_csv_roundtrip(tmp_path, small_hs_indicator):
    prof1, _, _ = mf.iterate(small_hs_indicator, 2, 0.0)
    path = str(tmp_path / "prof.csv")
    mf.save_profile_csv(prof1, path)
    prof2 = mf.load_profile_csv(path)
    assert (prof1.values == prof2.values).all()
    assert (prof1.params.w_grid == prof2.params.w_grid).all()
    assert (prof1.params.z_grid == prof2.params.z_grid).all()
    assert prof2.symmetric == prof1.symmetric
    assert isinstance(prof2.geometry, mf.HalfSpace)

    rparams = mf.radial_params(3.0, 40.0, 20.0, w_cap=5.0, n_w=6)
    g = mf.ball_indicator(rparams, 20.0)
    path2 = str(tmp_path / "rad.csv")
    mf.save_profile_csv(g, path2)
    g2 = mf.load_profile_csv(path2)
    assert isinstance(g2.geometry, mf.Radial) and g2.geometry.r == 20.0
    assert (g2.values == g.values).all()
