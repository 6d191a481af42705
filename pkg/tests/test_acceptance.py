"""Acceptance checks, one group per criterion.

Each test records what it measured under the ``measured`` property; the
terminal summary (see conftest.py) prints one pass/fail line per criterion.
"""

import math
import time

import numpy as np
import pytest

from rsucoop.antenna import build_array, steering_matrix
from rsucoop.beamforming import (
    BabaConfig,
    angle_grid,
    baba,
    beampattern,
    beamwidth_error,
    default_angle_grid,
    desired_amplitude_response,
    improved_lcmv,
    pattern_axes,
)
from rsucoop.budget import NoiseClutterParams, dbm_to_watts
from rsucoop.detection import (
    FusionSignal,
    fused_amplitudes,
    pd_vs_unit_radius,
    roc_case1,
    roc_case2,
    roc_monte_carlo,
    roc_numeric_at,
)
from rsucoop.antenna import steering_vector
from rsucoop.geometry import BeamSpec, CartesianCoord, CsaPlane, RsuSite, sensing_unit, solve_pitch_width
from rsucoop.hbf import hbf_sweep
from rsucoop.registration import PatternMode, p_dfc_realized, plan_for_radius, reference_index, unit_overlap
from rsucoop.geometry import SensingUnit
from rsucoop.scenario import four_rsu_scenario


def lens_area(r1, r2, d):
    """Intersection area of two circles with centres ``d`` apart."""
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return math.pi * min(r1, r2) ** 2
    a1 = r1 * r1 * math.acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    a2 = r2 * r2 * math.acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    k = 0.5 * math.sqrt((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2))
    return a1 + a2 - k


# 1 ---------------------------------------------------------------------------------

@pytest.mark.criterion(1)
def test_circularity_after_pitch_solve(record_property):
    rng = np.random.default_rng(20240101)
    n = 10_000
    diff = np.radians(rng.uniform(0.0, 80.0, n))
    dphi = np.radians(20.0 * (1.0 - rng.uniform(0.0, 1.0, n)))  # (0, 20] deg
    tilt = np.radians(rng.uniform(0.0, 30.0, n))
    phi = rng.uniform(0.0, 2 * math.pi, n)
    rng_m = rng.uniform(20.0, 300.0, n)
    site = RsuSite(CartesianCoord(0.0, 0.0, 10.0))
    start = time.perf_counter()
    worst = 0.0
    for k in range(n):
        theta = diff[k] + tilt[k]
        if theta >= math.radians(89):
            # keep the beam below the horizon; the difference still spans [0, 80] deg
            tilt_k, theta = 0.0, diff[k]
        else:
            tilt_k = tilt[k]
        beam = BeamSpec(theta, phi[k], solve_pitch_width(theta, dphi[k], tilt_k), dphi[k])
        # plane through the point hit by the beam axis, leaning back toward the RSU
        hit = site.position.as_array() + rng_m[k] * beam.axis
        plane = CsaPlane.tilted(hit, tilt_k, phi[k] + math.pi)
        u = sensing_unit(beam, rng_m[k], site, plane)
        worst = max(worst, abs(u.r_major / u.r_minor - 1))
    elapsed = time.perf_counter() - start
    record_property("measured", f"max |r_a/r_b - 1| = {worst:.1e}, {elapsed:.2f} s")
    assert worst < 1e-9
    assert elapsed < 1.0


# 2 ---------------------------------------------------------------------------------

@pytest.mark.criterion(2)
def test_four_rsu_ranges(record_property):
    sc = four_rsu_scenario(build_array(5, 4))
    plan = plan_for_radius(sc, 4.0)
    ranges = [b.range_r_t for b in plan.beams]
    record_property("measured", "ranges " + ", ".join(f"{r:.4f}" for r in ranges) + " m")
    assert ranges == pytest.approx([180.56, 112.25, 112.25, 180.56], abs=0.01)


# 3 ---------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def reduced17():
    return four_rsu_scenario(build_array(17, 4))


@pytest.fixture(scope="module")
def realized_sweep(reduced17):
    start = time.perf_counter()
    radii = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0)
    values = {r: p_dfc_realized(reduced17, plan_for_radius(reduced17, r), PatternMode.REALIZED, 0.1) for r in radii}
    return values, time.perf_counter() - start


@pytest.mark.criterion(3)
def test_ideal_registration(reduced17, record_property):
    values = [unit_overlap(plan_for_radius(reduced17, r).units(reduced17), reduced17.csa).p_dfc for r in (4.0, 5.0)]
    record_property("measured", "ideal p_dfc " + ", ".join(f"{v:.4f}" for v in values))
    assert values == pytest.approx([1.0, 1.0], abs=0.01)


@pytest.mark.criterion(3)
def test_realized_registration_large_units(realized_sweep, record_property):
    values, elapsed = realized_sweep
    big = {r: v for r, v in values.items() if r > 3}
    record_property("measured", "realized p_dfc r_s>3: " + ", ".join(f"{r:g}:{v:.3f}" for r, v in big.items()))
    assert elapsed < 120
    assert all(v > 0.9 for v in big.values())


@pytest.mark.criterion(3)
def test_realized_registration_small_units(realized_sweep, record_property):
    values, elapsed = realized_sweep
    small = {r: v for r, v in values.items() if r <= 2}
    record_property(
        "measured", "realized p_dfc r_s<=2: " + ", ".join(f"{r:g}:{v:.3f}" for r, v in small.items()) + f", sweep {elapsed:.1f} s"
    )
    assert all(v < 0.8 for v in small.values())


# 4 ---------------------------------------------------------------------------------

PF20 = np.geomspace(1e-3, 0.99, 20)


def regime(p_i_dbm):
    p_n = four_rsu_scenario(build_array(3, 4)).noise.p_n
    return NoiseClutterParams.from_powers(p_n, float(dbm_to_watts(p_i_dbm)))


@pytest.mark.criterion(4)
@pytest.mark.parametrize("snr", [1.0, 4.0])
def test_closed_forms_vs_monte_carlo(snr, record_property):
    start = time.perf_counter()
    errs = []
    # each closed form against simulation of exactly the model it assumes
    nc1 = NoiseClutterParams(regime(-110).sigma_n, 0.0)
    sig1 = FusionSignal((snr * nc1.sigma_n,))
    c1 = roc_case1(sig1, nc1, PF20)
    mc1 = roc_monte_carlo(sig1, nc1, c1.thresholds, 1_000_000, seed=[4, 1, int(snr)])
    errs.append(np.max(np.abs(mc1.p_d - c1.p_d)))
    nc2 = NoiseClutterParams(1e-9 * regime(-70).sigma_i, regime(-70).sigma_i)
    sig2 = FusionSignal((snr * nc2.sigma_i,))
    c2 = roc_case2(sig2, nc2, PF20)
    mc2 = roc_monte_carlo(sig2, nc2, c2.thresholds, 1_000_000, seed=[4, 2, int(snr)])
    errs.append(np.max(np.abs(mc2.p_d - c2.p_d)))
    elapsed = time.perf_counter() - start
    record_property("measured", f"MC gap at mu/sigma={snr:g}: noise-only {errs[0]:.4f}, clutter-only {errs[1]:.4f}")
    assert max(errs) <= 0.005
    assert elapsed < 60


@pytest.mark.criterion(4)
@pytest.mark.parametrize("p_i_dbm,closed", [(-110, roc_case1), (-70, roc_case2)])
@pytest.mark.parametrize("snr", [1.0, 4.0])
def test_numeric_matches_regime(p_i_dbm, closed, snr, record_property):
    nc = regime(p_i_dbm)
    scale = nc.sigma_n if closed is roc_case1 else nc.sigma_i
    sig = FusionSignal((snr * scale,))
    gap = np.max(np.abs(roc_numeric_at(sig, nc, PF20).p_d - closed(sig, nc, PF20).p_d))
    record_property("measured", f"numeric vs {closed.__name__[4:]} at {p_i_dbm} dBm, mu/sigma={snr:g}: {gap:.4f}")
    assert gap <= 0.02


@pytest.mark.criterion(4)
def test_numeric_on_four_rsu_signal(record_property):
    sc = four_rsu_scenario(build_array(3, 4))
    sig = FusionSignal(tuple(fused_amplitudes(sc, 4.0)))
    gaps = []
    for p_i, closed in ((-110, roc_case1), (-70, roc_case2)):
        nc = regime(p_i)
        gaps.append(np.max(np.abs(roc_numeric_at(sig, nc, PF20).p_d - closed(sig, nc, PF20).p_d)))
    record_property("measured", "four-RSU signal gaps " + ", ".join(f"{g:.1e}" for g in gaps))
    assert max(gaps) <= 0.02


# 5 ---------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def operating_point():
    sc = four_rsu_scenario(build_array(3, 4))
    amps = fused_amplitudes(sc, 4.0, 0.1)
    ranges = [float(np.linalg.norm(sc.target.as_array() - s.position.as_array())) for s in sc.rsus]
    single = FusionSignal((float(amps[reference_index(ranges)]),))
    fused = FusionSignal(tuple(float(a) for a in amps), 1.0)
    return sc, single, fused


@pytest.mark.criterion(5)
def test_single_rsu_point(operating_point, record_property):
    sc, single, _ = operating_point
    pd = roc_case1(single, sc.noise, [0.1]).p_d[0]
    pd_num = roc_numeric_at(single, sc.noise, [0.1]).p_d[0]
    snr_db = 20 * math.log10(single.mean / sc.noise.sigma_n)
    record_property("measured", f"single p_d = {pd:.4f} (numeric {pd_num:.4f}), mu/sigma_n = {snr_db:.1f} dB")
    assert pd == pytest.approx(0.3891, abs=0.05)


@pytest.mark.criterion(5)
def test_fused_point(operating_point, record_property):
    sc, _, fused = operating_point
    pd = roc_case1(fused, sc.noise, [0.1]).p_d[0]
    record_property("measured", f"fused p_d = {pd:.4f}")
    assert pd == pytest.approx(0.9967, abs=0.01)


@pytest.mark.criterion(5)
@pytest.mark.parametrize("p_i_dbm", [-110, -70])
def test_fused_dominates_single(operating_point, p_i_dbm, record_property):
    _, single, fused = operating_point
    nc = regime(p_i_dbm)
    pf = np.geomspace(1e-4, 0.999, 60)
    ok = True
    for method in (roc_case1, roc_case2, roc_numeric_at):
        ok &= bool(np.all(method(fused, nc, pf).p_d >= method(single, nc, pf).p_d))
    record_property("measured", f"dominance at {p_i_dbm} dBm: {ok}")
    assert ok


# 6 ---------------------------------------------------------------------------------

@pytest.mark.criterion(6)
def test_optimal_unit_radius(record_property):
    sc = four_rsu_scenario(build_array(3, 4))
    grid = np.arange(1.0, 10.01, 0.5)
    low = pd_vs_unit_radius(sc, 0.1, 0.05, grid)
    high = pd_vs_unit_radius(sc, 0.1, 0.1, grid)
    record_property(
        "measured",
        f"argmax rho=0.05: {low.argmax:g} m, rho=0.1: {high.argmax:g} m, p_d range [{low.p_d.min():.4f}, {low.p_d.max():.4f}]",
    )
    assert low.argmax == pytest.approx(6.5, abs=0.5)
    assert high.argmax < low.argmax


# 7 ---------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def reduced9():
    return build_array(9, 4)


@pytest.mark.criterion(7)
def test_lcmv_iterates_meet_constraints(reduced9, record_property):
    L = reduced9.resolution_limit
    cfg = BabaConfig()
    worst = 0.0
    count = 0
    for s in (0.5, 1.0, 2.0, 3.0, 4.0):
        beam = BeamSpec(math.radians(45), math.radians(60), s * L, 2 * s * L)
        # the per-direction solves that beam synthesis runs
        for pt in default_angle_grid(beam, cfg.grid_step, cfg.max_points).points:
            a = steering_vector(reduced9, pt)[:, None]
            res = improved_lcmv(a, None, [1.0], cfg.lcmv_i_max, cfg.lcmv_tol, keep_history=True)
            for w in res.history:
                worst = max(worst, abs(abs(a[:, 0].conj() @ w) - 1.0))
                count += 1
        # multi-direction amplitude constraints on a 3 x 3 lattice
        grid = angle_grid(beam, 9)
        D = steering_matrix(reduced9, grid.points)
        r_ad = desired_amplitude_response(grid, beam)
        res = improved_lcmv(D, None, r_ad, keep_history=True)
        for w in res.history:
            worst = max(worst, float(np.max(np.abs(np.abs(D.conj().T @ w) - r_ad))))
            count += 1
    record_property("measured", f"max residual {worst:.1e} over {count} iterates")
    assert worst < 1e-8


@pytest.mark.criterion(7)
def test_half_power_boundary_exact(record_property):
    beam = BeamSpec(0.75, 1.0, 0.25, 0.5)
    t = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    # points on the ellipse, kept where the ellipse equation evaluates to exactly 1
    pts = np.column_stack([beam.phi_r + 0.25 * np.cos(t), beam.theta_r + 0.125 * np.sin(t)])
    k = ((pts[:, 1] - beam.theta_r) / 0.125) ** 2 + ((pts[:, 0] - beam.phi_r) / 0.25) ** 2
    pts = pts[k == 1.0]
    r = desired_amplitude_response(pts, beam)
    record_property("measured", f"{len(pts)} boundary points, max |r - 1/sqrt2| = {np.max(np.abs(r - 1 / math.sqrt(2))):.1e}")
    assert len(pts) >= 4
    assert np.all(r == 1 / math.sqrt(2))


@pytest.mark.criterion(7)
def test_eb_decreases_with_width(reduced9, record_property):
    L = reduced9.resolution_limit
    scales = (0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0)
    eb = []
    for s in scales:
        beam = BeamSpec(math.radians(45), math.radians(60), s * L, 2 * s * L)
        w = baba(beam, reduced9)
        eb.append(beamwidth_error(beampattern(w, reduced9, pattern_axes(beam)), beam).e_b)
    record_property("measured", "e_b at " + ", ".join(f"{s:g}L:{e:.3f}" for s, e in zip(scales, eb)))
    assert all(b < a for a, b in zip(eb, eb[1:]))
    assert all(e > 1 for s, e in zip(scales, eb) if s < 1)


@pytest.mark.criterion(7)
def test_eb_full_array_extended(record_property):
    geom = build_array(33, 5)
    beam = BeamSpec.from_degrees(45, 60, 6, 12)
    start = time.perf_counter()
    eb = beamwidth_error(beampattern(baba(beam, geom), geom, pattern_axes(beam)), beam).e_b
    record_property("measured", f"full-array e_b = {eb:.3f} ({time.perf_counter() - start:.0f} s)")
    assert eb <= 0.15


# 8 ---------------------------------------------------------------------------------

@pytest.mark.criterion(8)
def test_hbf_residual_non_increasing(reduced9, record_property):
    beams = [BeamSpec.from_degrees(t, p, 12, 24) for t, p in ((45, 60), (30, 150), (50, 240), (20, 330))]
    W = np.column_stack([baba(b, reduced9) for b in beams])
    res = [f.residual for f in hbf_sweep(W, [1, 2, 4, 8])]
    record_property("measured", "residuals " + ", ".join(f"{r:.2e}" for r in res))
    assert all(b <= a for a, b in zip(res, res[1:]))


# 9 ---------------------------------------------------------------------------------

@pytest.mark.criterion(9)
def test_two_circle_overlap(record_property):
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        r1, r2 = rng.uniform(0.5, 8.0, 2)
        # offsets from full containment to a thin lens
        d = rng.uniform(0.0, 0.95 * (r1 + r2))
        units = [SensingUnit(CartesianCoord(0, 0, 0), r1, r1, 0.0), SensingUnit(CartesianCoord(d, 0, 0), r2, r2, 1.0)]
        got = unit_overlap(units).p_dfc
        want = 2 * lens_area(r1, r2, d) / (math.pi * (r1 * r1 + r2 * r2))
        worst = max(worst, abs(got / want - 1))
    record_property("measured", f"max relative error {worst:.2e}")
    assert worst <= 0.005
