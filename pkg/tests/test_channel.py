import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from leosim.channel import (ChannelParams, FiberDelayModel, atmospheric_attenuation, fiber_delay,
                            free_space_path_loss_db, gsl_capacity, gsl_capacity_from_attenuation,
                            isl_capacity, isl_noise_power, isl_received_power, propagation_delay,
                            sky_temperature)

P = ChannelParams()


def isl_oracle(d):
    """Scalar link budget written out longhand from the table values."""
    p_rx = 0.1 * 0.9 * (0.05 ** 2) / ((d * 1.744e-5) ** 2)
    p_n = 1.380649e-23 * 290.0 * 5e9
    return p_rx, p_n, 0.08 * 5e9 * math.log(1 + p_rx / p_n, 2)


def gsl_oracle(d, atten):
    fspl = 20 * math.log10(4 * math.pi * d * 19e9 / 299792458.0)
    p_rx = 10 ** ((34.6 - fspl + 10.8 - atten) / 10)
    t_sky = 275 * (1 - 10 ** (-atten / 10)) + 2.7 * 10 ** (-atten / 10)
    p_n = 1.380649e-23 * t_sky * 250e6
    return fspl, p_rx, t_sky, p_n, 250e6 * math.log(1 + p_rx / p_n, 2)


def test_isl_capacity_at_1000_km():
    p_rx, p_n, cap = isl_oracle(1e6)
    assert isl_received_power(1e6, P) == pytest.approx(p_rx, rel=1e-12)
    assert isl_noise_power(P) == pytest.approx(p_n, rel=1e-12)
    assert p_rx == pytest.approx(7.398e-7, rel=1e-3)
    assert p_n == pytest.approx(2.002e-11, rel=1e-3)
    assert isl_capacity(1e6, P) == pytest.approx(cap, rel=1e-9)
    assert cap == pytest.approx(6.07e9, rel=1e-3)


def test_isl_inverse_square_and_lambda_zero():
    assert isl_received_power(2e6, P) == pytest.approx(isl_received_power(1e6, P) / 4, rel=1e-12)
    assert isl_capacity(1e6, ChannelParams(lambda_upload=0.0)) == 0.0


def test_isl_rejects_zero_distance():
    with pytest.raises(ValueError):
        isl_capacity(0.0, P)


@given(st.floats(1e3, 1e7), st.floats(1e3, 1e7))
def test_isl_capacity_decreasing_in_distance(a, b):
    lo, hi = sorted((a, b))
    assert isl_capacity(lo, P) >= isl_capacity(hi, P)


def test_isl_vectorized_matches_scalar():
    d = np.array([5e5, 1e6, 3e6])
    np.testing.assert_allclose(isl_capacity(d, P), [isl_capacity(x, P) for x in d], rtol=1e-15)


def test_attenuation_table_examples():
    p = ChannelParams(atmos_table=((90, 0.5), (25, 1.2)))
    assert atmospheric_attenuation(90, p) == pytest.approx(0.5)
    assert atmospheric_attenuation(57.5, p) == pytest.approx(0.85)
    # outside the table the nearest entry holds
    assert atmospheric_attenuation(5, p) == pytest.approx(1.2)


@given(st.floats(0.01, 90), st.floats(0.01, 90))
def test_attenuation_monotone(e1, e2):
    lo, hi = sorted((e1, e2))
    assert atmospheric_attenuation(lo, P) >= atmospheric_attenuation(hi, P)


@pytest.mark.parametrize("el", [0.0, -5.0, 90.5])
def test_attenuation_rejects_bad_elevation(el):
    with pytest.raises(ValueError):
        atmospheric_attenuation(el, P)


def test_atmos_table_validation():
    with pytest.raises(ValueError):
        ChannelParams(atmos_table=((90, 2.0), (10, 1.0)))
    with pytest.raises(ValueError):
        ChannelParams(atmos_table=())
    # input order does not matter
    assert ChannelParams(atmos_table=((10, 3.0), (90, 0.5))).atmos_table == ((90.0, 0.5), (10.0, 3.0))


def test_fspl_at_1200_km():
    assert free_space_path_loss_db(1.2e6, P) == pytest.approx(179.61, abs=0.01)


def test_gsl_capacity_zenith_example():
    fspl, p_rx, t_sky, p_n, cap = gsl_oracle(1.2e6, 0.5)
    assert fspl == pytest.approx(free_space_path_loss_db(1.2e6, P), rel=1e-12)
    assert p_rx == pytest.approx(3.39e-14, rel=2e-3)
    assert t_sky == pytest.approx(32.3, abs=0.05)
    assert sky_temperature(0.5, P) == pytest.approx(t_sky, rel=1e-12)
    assert p_n == pytest.approx(1.115e-13, rel=2e-3)
    assert gsl_capacity_from_attenuation(1.2e6, 0.5, P) == pytest.approx(cap, rel=1e-9)
    assert gsl_capacity(1.2e6, 90.0, P) == pytest.approx(cap, rel=1e-9)
    assert cap == pytest.approx(96e6, rel=0.01)


def test_gsl_has_no_upload_factor():
    assert gsl_capacity(1.5e6, 45, ChannelParams(lambda_upload=0.0)) == gsl_capacity(1.5e6, 45, P)


def test_sky_temperature_limits():
    assert sky_temperature(0.0, P) == pytest.approx(2.7, abs=1e-12)
    assert sky_temperature(400.0, P) == pytest.approx(275.0, abs=1e-9)


def test_gsl_heavy_attenuation_limit():
    assert gsl_capacity_from_attenuation(1.2e6, 400.0, P) == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("d, t", [(0.0, 0.0), (299_792_458.0, 1.0), (1e6, 3.3356409519815204e-3)])
def test_propagation_delay(d, t):
    assert propagation_delay(d, P) == pytest.approx(t, rel=1e-12, abs=0)


def test_propagation_delay_rejects_negative():
    with pytest.raises(ValueError):
        propagation_delay(-1.0)


def test_fiber_delay_without_noise_is_base_draw():
    p = ChannelParams(fiber_delay_noise_std_s=0.0)
    model = FiberDelayModel(3, np.random.default_rng(5), p)
    assert np.all((model.base_s >= 1e-3) & (model.base_s <= 5e-3))
    for _ in range(4):
        np.testing.assert_array_equal(model.sample(), model.base_s)


def test_fiber_delay_point_distribution():
    p = ChannelParams(fiber_delay_range_s=(3e-3, 3e-3), fiber_delay_noise_std_s=0.0)
    np.testing.assert_array_equal(fiber_delay(np.random.default_rng(0), p, 10), np.full(10, 3e-3))


def test_fiber_delay_deterministic_and_nonnegative():
    p = ChannelParams(fiber_delay_range_s=(0.0, 1e-4), fiber_delay_noise_std_s=1e-3)
    a = fiber_delay(np.random.default_rng(9), p, 500)
    b = fiber_delay(np.random.default_rng(9), p, 500)
    np.testing.assert_array_equal(a, b)
    assert a.min() >= 0.0
    assert (a == 0.0).any()  # the clamp is exercised at this noise level
