import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rsucoop.antenna import build_array
from rsucoop.errors import InputError, NoVisibility
from rsucoop.geometry import CartesianCoord, RsuSite, SensingUnit
from rsucoop.registration import (
    BeamPlan,
    OverlapResult,
    PatternMode,
    csa_raster,
    echo_powers,
    fixed_width_plan,
    footprint_p_dfc,
    plan_absra,
    plan_for_radius,
    power_map,
    reference_index,
    unit_overlap,
)
from rsucoop.scenario import CsaRegion, four_rsu_scenario


@pytest.fixture(scope="module")
def scenario():
    return four_rsu_scenario(build_array(9, 4))


def disk(x, y, r):
    return SensingUnit(CartesianCoord(x, y, 0.0), r, r, 0.0)


def lens_area(r, d):
    # two equal circles of radius r with centres d apart
    return 2 * r * r * math.acos(d / (2 * r)) - d / 2 * math.sqrt(4 * r * r - d * d)


class TestPlanning:
    def test_ranges_and_reference(self, scenario):
        plan = plan_absra(scenario, math.radians(6))
        ranges = [b.range_r_t for b in plan.beams]
        assert ranges == pytest.approx([180.5547, 112.2497, 112.2497, 180.5547], abs=1e-4)
        assert plan.reference == 2

    def test_reference_index(self):
        assert reference_index([5.0]) == 0
        assert reference_index([3.0, 1.0, 2.0]) == 2
        assert reference_index([1.0, 1.0, 2.0, 2.0]) == 1

    def test_far_azimuth_width(self, scenario):
        plan = plan_absra(scenario, math.radians(6))
        assert math.degrees(plan.beams[0].beam.delta_phi) == pytest.approx(3.732, abs=1e-3)
        assert plan.beams[2].beam.delta_phi == pytest.approx(math.radians(6), rel=1e-15)

    @given(st.floats(0.5, 8.0))
    @settings(max_examples=25, deadline=None)
    def test_units_circular_and_equal(self, r_s):
        sc = four_rsu_scenario(build_array(9, 4))
        plan = plan_for_radius(sc, r_s)
        assert plan.unit_radius == pytest.approx(r_s, rel=1e-12)
        for u in plan.units(sc):
            assert u.r_major == pytest.approx(u.r_minor, rel=1e-9)
            assert u.r_minor == pytest.approx(r_s, rel=1e-9)

    def test_fixed_width_units_differ(self, scenario):
        units = fixed_width_plan(scenario, math.radians(3), math.radians(6)).units(scenario)
        assert units[0].r_minor > units[1].r_minor

    def test_no_visibility(self, scenario):
        # CSA raised above the 10 m RSUs: the target is not below the horizon
        csa = CsaRegion(CartesianCoord(0.0, 100.0, 20.0), 20.0, 20.0)
        above = dataclasses.replace(scenario, csa=csa, target=csa.center)
        with pytest.raises(NoVisibility):
            plan_absra(above, 0.1)

    def test_invalid_inputs(self, scenario):
        with pytest.raises(InputError):
            plan_absra(scenario, 0.0)
        with pytest.raises(InputError):
            plan_for_radius(scenario, -1.0)

    def test_dict_round_trip(self, scenario):
        plan = plan_for_radius(scenario, 4.0)
        back = BeamPlan.from_dict(plan.to_dict())
        assert back.reference == plan.reference
        for a, b in zip(plan.beams, back.beams):
            assert a.range_r_t == b.range_r_t
            for f in ("theta_r", "phi_r", "delta_theta", "delta_phi"):
                assert getattr(a.beam, f) == pytest.approx(getattr(b.beam, f), rel=1e-15, abs=1e-300)


class TestOverlap:
    def test_identical(self):
        res = unit_overlap([disk(0, 0, 2)] * 3)
        assert res.p_dfc == pytest.approx(1.0, abs=1e-3)

    def test_disjoint(self):
        res = unit_overlap([disk(0, 0, 1), disk(5, 0, 1)])
        assert res.common_area == 0 and res.p_dfc == 0

    def test_lens(self):
        res = unit_overlap([disk(0, 0, 1), disk(1, 0, 1)])
        assert lens_area(1, 1) == pytest.approx(1.22837, abs=1e-5)
        assert res.common_area == pytest.approx(lens_area(1, 1), rel=5e-3)
        assert res.p_dfc == pytest.approx(0.3910, abs=1e-3)

    @given(st.floats(0.05, 1.95), st.floats(0.5, 5.0))
    @settings(max_examples=40, deadline=None)
    def test_lens_property(self, frac, r):
        res = unit_overlap([disk(0, 0, r), disk(frac * r, 0, r)])
        assert res.common_area == pytest.approx(lens_area(r, frac * r), rel=5e-3)

    def test_fixed_cell(self):
        res = unit_overlap([disk(0, 0, 1), disk(1, 0, 1)], cell=0.002)
        assert res.common_area == pytest.approx(lens_area(1, 1), rel=5e-3)

    def test_on_csa(self, scenario):
        res = unit_overlap(plan_for_radius(scenario, 4.0).units(scenario), scenario.csa)
        assert res.p_dfc == pytest.approx(1.0, abs=0.01)

    def test_validation(self):
        with pytest.raises(InputError):
            unit_overlap([])
        with pytest.raises(InputError):
            unit_overlap([disk(0, 0, 1)], cell=0)

    def test_dict_round_trip(self):
        res = OverlapResult((1.5, 2.5), 0.75, 0.375)
        assert OverlapResult.from_dict(res.to_dict()) == res


class TestPowerMap:
    def test_energy_conservation(self, scenario):
        plan = plan_for_radius(scenario, 4.0)
        pm = power_map(scenario, plan, PatternMode.IDEAL, cell=0.05)
        expected = float(echo_powers(scenario, plan) @ [u.area for u in plan.units(scenario)])
        assert pm.power.sum() * pm.cell**2 == pytest.approx(expected, rel=5e-3)

    def test_single_rsu_uniform_disk(self, scenario):
        single = dataclasses.replace(scenario, rsus=scenario.rsus[1:2])
        plan = plan_for_radius(single, 3.0)
        pm = power_map(single, plan, PatternMode.IDEAL, cell=0.1)
        p = echo_powers(single, plan)[0]
        values = set(np.unique(pm.power))
        assert values == {0.0, p}
        inside = np.hypot(pm.x, pm.y - 100.0) <= 3.0 - 0.1
        assert np.all(pm.power[inside] == p)
        outside = np.hypot(pm.x, pm.y - 100.0) >= 3.0 + 0.1
        assert np.all(pm.power[outside] == 0)

    def test_shape(self, scenario):
        pm = power_map(scenario, plan_for_radius(scenario, 2.0), cell=0.5)
        assert pm.grid().shape == (40, 40)

    def test_raster(self):
        csa = CsaRegion(CartesianCoord(0.0, 0.0, 0.0), 4.0, 2.0)
        uv, xyz, shape, area = csa_raster(csa, 1.0)
        assert shape == (2, 4) and area == 1.0
        assert np.allclose(uv[:4, 1], -0.5) and np.allclose(uv[:4, 0], [-1.5, -0.5, 0.5, 1.5])
        with pytest.raises(InputError):
            csa_raster(csa, 0.0)


class TestFootprintMatching:
    def test_identical(self):
        m = np.zeros((3, 10, 10), bool)
        m[:, 2:5, 3:7] = True
        assert footprint_p_dfc(m) == 1.0

    def test_half(self):
        m = np.zeros((2, 4), bool)
        m[0, :2] = True
        m[1, 1:3] = True
        assert footprint_p_dfc(m) == 0.5

    def test_empty(self):
        assert footprint_p_dfc(np.zeros((2, 3), bool)) == 0.0
