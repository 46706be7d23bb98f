import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leosim.ephemeris import GeodeticCoord, WalkerConfig, generate_walker_star, geodetic_to_ecef
from leosim.traffic import (DEFAULT_DIURNAL, BufferSpec, PopulationGrid, TrafficModel, TrafficParams,
                            assign_cells, generation_rate)


def sat_over(lat, lon, alt=1.2e6):
    return geodetic_to_ecef(GeodeticCoord(lat, lon, alt))


def great_circle(lat1, lon1, lat2, lon2):
    p1, p2, dl = math.radians(lat1), math.radians(lat2), math.radians(lon2 - lon1)
    return math.acos(max(-1.0, min(1.0, math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(dl))))


def test_generation_rate_example():
    assert generation_rate(1e6, TrafficParams(), 20) / DEFAULT_DIURNAL[20] == pytest.approx(72.96e6, rel=1e-4)
    flat = TrafficParams(diurnal=(1.0,) * 24)
    assert generation_rate(1e6, flat, 3) == pytest.approx(1e6 * 0.003175 * 22.98e3, rel=1e-15)
    assert generation_rate(0.0, flat, 3) == 0.0
    double = TrafficParams(devices_per_person=2 * 0.003175, diurnal=(1.0,) * 24)
    assert generation_rate(5e5, double, 0) == pytest.approx(2 * generation_rate(5e5, flat, 0), rel=1e-15)


def test_default_diurnal_shape():
    d = np.array(DEFAULT_DIURNAL)
    assert d.mean() == pytest.approx(1.0, abs=1e-3)
    assert d.argmax() == 20 and d.max() == pytest.approx(1.4)
    assert d.argmin() == 4 and d.min() == pytest.approx(0.5)


def test_traffic_params_validation():
    with pytest.raises(ValueError):
        TrafficParams(diurnal=(1.0,) * 23)
    with pytest.raises(ValueError):
        TrafficParams(devices_per_person=-1)
    with pytest.raises(ValueError):
        BufferSpec(satellite_buffer_bits=0)


def test_single_satellite_takes_everything():
    grid = PopulationGrid([0.5, 10.5, -30.5], [0.5, 100.5, -60.5], [1, 2, 3])
    assert assign_cells(sat_over(50, 50)[None, :], grid).tolist() == [6.0]


def test_equidistant_tie_goes_to_lower_index():
    grid = PopulationGrid([0.0], [0.0], [7.0])
    sats = np.array([sat_over(0, 10), sat_over(0, -10)])
    assert assign_cells(sats, grid).tolist() == [7.0, 0.0]
    assert assign_cells(sats[::-1], grid).tolist() == [7.0, 0.0]


def test_four_by_four_brute_force():
    sat_ll = [(10, 10), (-20, 40), (45, -70), (0, 170)]
    cells = [(12.5, 8.5, 1.0), (-30.5, 50.5, 10.0), (50.5, -60.5, 100.0), (-5.5, -175.5, 1000.0)]
    grid = PopulationGrid(*zip(*cells))
    sats = np.array([sat_over(a, b) for a, b in sat_ll])
    expected = np.zeros(4)
    for la, lo, p in cells:
        d = [great_circle(la, lo, a, b) for a, b in sat_ll]
        expected[int(np.argmin(d))] += p
    np.testing.assert_array_equal(assign_cells(sats, grid), expected)
    np.testing.assert_array_equal(expected, [1, 10, 100, 1000])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-89, 89), st.floats(-180, 179), st.floats(0, 1e6)), min_size=1, max_size=20),
       st.integers(0, 2000))
def test_population_is_conserved(cells, slot):
    grid = PopulationGrid(*zip(*cells))
    pos = generate_walker_star(WalkerConfig(4, 5), slot)
    pop = assign_cells(pos, grid)
    assert pop.sum() == pytest.approx(grid.total, rel=1e-12)
    assert (pop >= 0).all()


def test_grid_drops_empty_cells_and_validates():
    g = PopulationGrid([0, 1], [0, 1], [0.0, 5.0])
    assert len(g) == 1 and g.total == 5.0
    with pytest.raises(ValueError):
        PopulationGrid([0], [0], [-1])
    with pytest.raises(ValueError):
        PopulationGrid([0, 1], [0], [1])
    with pytest.raises(ValueError):
        assign_cells(np.zeros((0, 3)), g)


def test_synthetic_hotspots_sum_exactly():
    g = PopulationGrid.synthetic([(51.5, 0.0, 1e6, 4.0), (-33.9, 151.2, 3e5, 2.0), (80.0, 170.0, 10.0, 6.0)])
    assert g.total == pytest.approx(1e6 + 3e5 + 10.0, rel=1e-12)
    assert np.all(np.abs(g.lat_deg % 1.0 - 0.5) < 1e-12)
    assert np.all((g.lon_deg >= -180) & (g.lon_deg < 180))


def test_population_csv_round_trip(tmp_path):
    g = PopulationGrid.synthetic([(10.0, 20.0, 12345.0, 3.0)])
    p = tmp_path / "pop.csv"
    g.to_csv(p)
    back = PopulationGrid.from_csv(p)
    np.testing.assert_array_equal(back.population, g.population)
    np.testing.assert_array_equal(back.lat_deg, g.lat_deg)
    p.write_text("lat_deg,lon_deg,population\n1,2,x\n")
    with pytest.raises(ValueError, match="line 2"):
        PopulationGrid.from_csv(p)


def test_model_rates_use_local_hour_of_subpoint():
    grid = PopulationGrid([0.5], [0.5], [1e6])
    model = TrafficModel(grid, TrafficParams())
    pos = np.array([sat_over(0, 0), sat_over(0, 90)])
    for utc_h, hour in [(0, 0), (4.5, 4), (20, 20)]:
        r = model.rates(pos, utc_h * 3600)
        assert r[1] == 0.0
        assert r[0] == pytest.approx(1e6 * 0.003175 * 22.98e3 * DEFAULT_DIURNAL[hour], rel=1e-12)


def test_flat_profile_total_is_constant():
    grid = PopulationGrid.synthetic([(40.0, -80.0, 5e5, 5.0), (30.0, 120.0, 8e5, 5.0)])
    model = TrafficModel(grid, TrafficParams(diurnal=(1.0,) * 24))
    cfg = WalkerConfig(6, 8)
    totals = [model.rates(generate_walker_star(cfg, s), s * 15.0).sum() for s in range(0, 500, 50)]
    np.testing.assert_allclose(totals, 1.3e6 * 0.003175 * 22.98e3, rtol=1e-12)


def test_rates_scale_linearly_in_rate_per_device():
    grid = PopulationGrid.synthetic([(40.0, -80.0, 5e5, 5.0)])
    pos = generate_walker_star(WalkerConfig(3, 8), 7)
    a = TrafficModel(grid, TrafficParams()).rates(pos, 1000.0)
    b = TrafficModel(grid, TrafficParams(rate_per_device_bps=3 * 22.98e3)).rates(pos, 1000.0)
    np.testing.assert_allclose(b, 3 * a, rtol=1e-12)
