import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsucoop.budget import (
    LinkBudget,
    NoiseClutterParams,
    db_to_linear,
    dbm_to_watts,
    echo_amplitude,
    receive_gain,
    thermal_noise_power,
    watts_to_dbm,
)
from rsucoop.errors import InputError
from rsucoop.geometry import solve_pitch_width


def link(**kw):
    base = dict(pt_gt=0.1, g_p=10**5.42, g_r=361.1, wavelength=0.0125, unit_radius=4.0, echo_prob=0.1, range_r_t=112.25)
    base.update(kw)
    return LinkBudget(**base)


def test_amplitude_range_law():
    assert echo_amplitude(link(range_r_t=200.0)) == pytest.approx(echo_amplitude(link(range_r_t=100.0)) / 4, rel=1e-14)


def test_no_reflection():
    assert echo_amplitude(link(echo_prob=0.0)) == 0.0


def test_reference_values_against_scalar_evaluation():
    r_t, r_s = 112.2497, 4.0
    dphi = 2 * math.atan(r_s / r_t)
    theta = math.atan2(math.hypot(50, 100), 10)
    dtheta = solve_pitch_width(theta, dphi)
    g_r = 26000 / (math.degrees(dtheta) * math.degrees(dphi))
    # radar equation written out independently
    p_r = 0.1 * g_r * 10 ** (54.2 / 10) * 0.0125**2 * (math.pi * 16 * 0.1) / ((4 * math.pi) ** 3 * r_t**4)
    got = echo_amplitude(link(g_r=receive_gain(math.degrees(dtheta), math.degrees(dphi)), range_r_t=r_t))
    assert got == pytest.approx(math.sqrt(p_r), rel=1e-12)


def test_receive_gain_examples():
    assert receive_gain(12, 6) == pytest.approx(361.1, abs=0.05)
    assert receive_gain(1, 1) == 26000
    assert receive_gain(3, 1.5) == pytest.approx(4 * receive_gain(6, 3))


def test_cross_section():
    assert link(unit_radius=2.0, echo_prob=0.5).cross_section == pytest.approx(2 * math.pi)


@pytest.mark.parametrize("field,value", [("pt_gt", 0.0), ("range_r_t", -1.0), ("echo_prob", 1.5), ("wavelength", math.nan)])
def test_link_validation(field, value):
    with pytest.raises(InputError):
        link(**{field: value})


@given(st.floats(-200, 100))
def test_dbm_round_trip(dbm):
    assert float(watts_to_dbm(dbm_to_watts(dbm))) == pytest.approx(dbm, abs=1e-10)


def test_db_to_linear():
    assert float(db_to_linear(30)) == pytest.approx(1000.0)


def test_thermal_noise_matches_default_noise_floor():
    # kTB at 290 K over 100 MHz is the -94 dBm noise level used by default
    assert float(watts_to_dbm(thermal_noise_power(290, 100e6))) == pytest.approx(-93.98, abs=0.01)


class TestNoiseClutter:
    def test_powers(self):
        nc = NoiseClutterParams.from_dbm(-94, -110)
        assert nc.p_n == pytest.approx(float(dbm_to_watts(-94)))
        assert nc.p_i == pytest.approx(float(dbm_to_watts(-110)))
        assert nc.sigma_i == pytest.approx(math.sqrt(nc.p_i / 2))

    def test_no_clutter(self):
        assert NoiseClutterParams.from_dbm(-94, None).sigma_i == 0

    def test_thermal(self):
        nc = NoiseClutterParams.from_thermal(-110, 290, 100e6, 6)
        assert nc.p_n == pytest.approx(thermal_noise_power(290, 100e6, 6))

    def test_validation(self):
        with pytest.raises(InputError):
            NoiseClutterParams(0.0, 1.0)
        with pytest.raises(InputError):
            NoiseClutterParams(1.0, -1.0)
