import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from conftest import centre_site, flat_grid
from supercell.antenna import make_uniform_plan
from supercell.coverage import (
    DEFAULT_THRESHOLDS_DBM,
    RATIO_COLUMNS,
    ElevationGrid,
    RsrpMap,
    Site,
    bearing_deg,
    compute_rsrp_map,
    coverage_area_km2,
    coverage_ratio_table,
    coverage_stats,
    extract_profile,
    format_grid,
    format_rsrp_grid,
    load_grid,
    load_rsrp_map,
    parse_grid,
    ratio_table_csv,
    rsrp_to_pgm,
    save_grid,
    summary,
)
from supercell.errors import GridParseError, InvalidArgument
from supercell.propagation import PathContext, profile_diffraction_db, spm_pathloss_db, tuned_spm

SMALL = """ncols 2
nrows 2
xllcorner 0
yllcorner 0
cellsize 30
NODATA_value -9999
0 0
0 0
"""


# -- grid I/O --------------------------------------------------------------


def test_parse_small():
    g = parse_grid(SMALL)
    assert (g.n_cols, g.n_rows, g.cell_size_m) == (2, 2, 30.0)
    assert np.all(g.elevations == 0)
    assert format_grid(g) == SMALL


def test_header_case_insensitive():
    g = parse_grid(SMALL.replace("ncols", "NCOLS").replace("NODATA_value", "nodata_value"))
    assert g.n_cols == 2


@pytest.mark.parametrize(
    "text, line",
    [
        (SMALL.replace("cellsize 30", "cellsize x"), 5),
        (SMALL.replace("cellsize 30", "cellsiz 30"), 5),
        (SMALL.replace("0 0\n0 0\n", "0 0\n0 a\n"), 8),
        (SMALL.replace("0 0\n0 0\n", "0 0\n0\n"), 8),
    ],
)
def test_parse_errors_name_the_line(text, line):
    with pytest.raises(GridParseError, match=f"line {line}"):
        parse_grid(text)


def test_parse_errors_structure():
    with pytest.raises(GridParseError, match="data rows"):
        parse_grid(SMALL.replace("0 0\n0 0\n", "0 0\n"))
    with pytest.raises(GridParseError, match="missing"):
        parse_grid("ncols 2\nnrows 2\n")
    with pytest.raises(GridParseError):
        parse_grid(SMALL.replace("nrows 2", "nrows 1.5"))


def test_nodata_cells():
    g = parse_grid(SMALL.replace("0 0\n0 0\n", "0 -9999\n0 0\n"))
    assert g.valid.sum() == 3
    assert math.isnan(g.sample(45.0, 45.0))
    assert g.sample(15.0, 15.0) == 0.0


grids = st.builds(
    lambda z, cs, x0, y0, holes: (z, cs, x0, y0, holes),
    hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=6),
               elements=st.floats(-500, 9000, allow_nan=False, width=64)),
    st.floats(0.5, 1000),
    st.floats(-1e6, 1e6),
    st.floats(-1e6, 1e6),
    st.integers(0, 3),
)


@settings(max_examples=80)
@given(grids)
def test_round_trip_bit_stable(case):
    z, cs, x0, y0, holes = case
    z = z.copy()
    z.flat[: min(holes, z.size)] = -9999.0
    g = ElevationGrid(z.shape[1], z.shape[0], cs, x0, y0, -9999.0, z)
    text = format_grid(g)
    g2 = parse_grid(text)
    assert np.array_equal(g2.elevations, g.elevations)
    assert (g2.cell_size_m, g2.origin_x, g2.origin_y) == (cs, x0, y0)
    assert format_grid(g2) == text


def test_load_save_files(tmp_path):
    g = parse_grid(SMALL)
    p = tmp_path / "g.asc"
    save_grid(g, p)
    assert p.read_text() == SMALL
    buf = io.StringIO()
    save_grid(load_grid(p), buf)
    assert buf.getvalue() == SMALL


# -- sampling and profiles -------------------------------------------------


def plane_grid(n=30, cell=50.0, a=0.01, b=-0.02, c=100.0):
    g = flat_grid(n, cell)
    xs, ys = g.cell_centers()
    return ElevationGrid(n, n, cell, 0.0, 0.0, -9999.0, a * xs + b * ys + c)


def test_bilinear_exact_on_plane():
    g = plane_grid()
    x = np.linspace(25, 1475, 37)
    y = np.linspace(1475, 25, 37)
    assert np.allclose(g.sample(x, y), 0.01 * x - 0.02 * y + 100, atol=1e-9)


def test_profile_flat_and_ramp():
    flat = flat_grid(20, 50.0, z=12.0)
    prof = extract_profile(flat, (100, 100), (900, 800))
    assert np.all(prof.elevations == 12.0)
    g = plane_grid()
    prof = extract_profile(g, (100, 200), (1300, 1100), step_m=7.0)
    t = prof.distances / prof.length_m
    x, y = 100 + 1200 * t, 200 + 900 * t
    assert np.allclose(prof.elevations, 0.01 * x - 0.02 * y + 100, atol=1e-9)
    assert np.all(np.diff(prof.distances) <= 7.0 + 1e-9)


def test_profile_step_longer_than_path():
    prof = extract_profile(flat_grid(), (100, 100), (300, 100), step_m=1e4)
    assert prof.distances.tolist() == [0.0, 200.0]


def test_profile_validation():
    g = flat_grid()
    with pytest.raises(InvalidArgument):
        extract_profile(g, (100, 100), (100, 100))
    with pytest.raises(InvalidArgument):
        extract_profile(g, (100, 100), (1e6, 100))


def test_bearing():
    assert bearing_deg(0, 1) == 0
    assert bearing_deg(1, 0) == 90
    assert bearing_deg(0, -1) == 180
    assert bearing_deg(-1, 0) == 270


# -- RSRP maps -------------------------------------------------------------


def radial_distance(grid, site):
    xs, ys = grid.cell_centers()
    return np.hypot(xs - site.x, ys - site.y)


def test_flat_omni_depends_only_on_distance():
    g = flat_grid(30)
    site = centre_site(g, tower=30.0)
    m = compute_rsrp_map(g, site)
    r = radial_distance(g, site)
    expected = np.array([
        -spm_pathloss_db(site.spm, PathContext(max(d, g.cell_size_m), 30.0, 2.0, True)) for d in r.ravel()
    ]).reshape(r.shape)
    assert np.allclose(m.rsrp_dbm, expected, atol=1e-9)
    assert np.all(m.serving_sector == 0)


def test_sector_tiling_equals_omni():
    g = flat_grid(30)
    omni = compute_rsrp_map(g, centre_site(g, n_sectors=1, gain=10.0))
    hos = compute_rsrp_map(g, centre_site(g, n_sectors=36, gain=10.0))
    assert np.array_equal(omni.rsrp_dbm, hos.rsrp_dbm)
    assert set(np.unique(hos.serving_sector)) == set(range(36))


def test_serving_sector_follows_azimuth():
    g = flat_grid(30)
    m = compute_rsrp_map(g, centre_site(g, n_sectors=4, gain=10.0))
    xs, ys = g.cell_centers()
    north = (np.abs(xs - 1500) < 200) & (ys > 2000)
    east = (np.abs(ys - 1500) < 200) & (xs > 2000)
    assert np.all(m.serving_sector[north] == 0)
    assert np.all(m.serving_sector[east] == 1)


def test_ridge_costs_k4_times_diffraction():
    spm = tuned_spm(2500)
    # Equal LOS/NLOS intercepts and slopes isolate the diffraction term.
    spm = spm.replace(k1_nlos=spm.k1_los, k2_nlos=spm.k2_los)
    n, cell = 40, 100.0
    flat = flat_grid(n, cell)
    z = np.zeros((n, n))
    z[8, :] = 300.0  # east-west wall north of the site
    ridge = ElevationGrid(n, n, cell, 0.0, 0.0, -9999.0, z)
    site = centre_site(flat, tower=30.0, spm=spm)
    m_flat = compute_rsrp_map(flat, site)
    m_ridge = compute_rsrp_map(ridge, site)
    r, c = 3, 22  # behind the wall
    prof = extract_profile(ridge, (site.x, site.y), tuple(a[r, c] for a in ridge.cell_centers()),
                           h_tx_m=site.tower_height_m, h_rx_m=site.rx_height_m)
    l_diff = profile_diffraction_db(prof, site.f_mhz)
    assert l_diff > 10
    assert m_flat.rsrp_dbm[r, c] - m_ridge.rsrp_dbm[r, c] == pytest.approx(spm.k4 * l_diff, abs=1e-9)


def test_effective_height_follows_terrain():
    g = flat_grid(20)
    z = np.zeros((20, 20))
    z[15:, :] = 5.0  # low plateau south of the site, not blocking
    bumped = ElevationGrid(20, 20, 100.0, 0.0, 0.0, -9999.0, z)
    site = centre_site(g, tower=60.0)
    m = compute_rsrp_map(bumped, site)
    r = radial_distance(g, site)[17, 10]
    pl = spm_pathloss_db(site.spm, PathContext(r, 55.0, 2.0, True))
    assert m.rsrp_dbm[17, 10] == pytest.approx(-pl, abs=1e-9)


def test_nodata_propagates_to_map():
    z = np.zeros((20, 20))
    z[0, 0] = -9999.0
    g = ElevationGrid(20, 20, 100.0, 0.0, 0.0, -9999.0, z)
    m = compute_rsrp_map(g, centre_site(g))
    assert math.isnan(m.rsrp_dbm[0, 0]) and m.serving_sector[0, 0] == -1
    assert m.valid.sum() == 399


def test_site_validation():
    g = flat_grid(10)
    site = centre_site(g)
    off = Site(1e6, 0, 30, site.plan, 0, 2500, 2, site.spm)
    with pytest.raises(InvalidArgument):
        compute_rsrp_map(g, off)
    with pytest.raises(InvalidArgument):
        Site(0, 0, 0, site.plan, 0, 2500, 2, site.spm)


def test_parallel_matches_serial():
    rng = np.random.default_rng(11)
    g = ElevationGrid(24, 24, 100.0, 0.0, 0.0, -9999.0, rng.uniform(0, 120, (24, 24)))
    site = centre_site(g, tower=40.0, n_sectors=6, gain=15.0)
    serial = compute_rsrp_map(g, site)
    parallel = compute_rsrp_map(g, site, workers=3)
    assert np.array_equal(serial.rsrp_dbm, parallel.rsrp_dbm)
    assert np.array_equal(serial.serving_sector, parallel.serving_sector)


# -- coverage statistics ---------------------------------------------------


@pytest.fixture(scope="module")
def omni_map():
    g = flat_grid(100, 100.0)
    return compute_rsrp_map(g, centre_site(g, tower=30.0, tx=0.0))


def test_area_extremes(omni_map):
    lo = np.nanmin(omni_map.rsrp_dbm)
    hi = np.nanmax(omni_map.rsrp_dbm)
    assert coverage_area_km2(omni_map, lo - 1) == pytest.approx(100.0)
    assert coverage_area_km2(omni_map, hi + 1) == 0.0


def test_area_non_increasing(omni_map):
    areas = [a for _, a in coverage_stats(omni_map, np.arange(-140, -40, 0.5))]
    assert np.all(np.diff(areas) <= 0)


def spm_radius(spm, rsrp_dbm, h_tx, h_rx=2.0):
    """Distance at which LOS SPM loss equals -rsrp (0 dBm EIRP)."""
    pl0 = spm_pathloss_db(spm, PathContext(1.0, h_tx, h_rx, True))
    slope = spm.k2_los + spm.k5 * math.log10(h_tx)
    return 10 ** ((-rsrp_dbm - pl0) / slope)


def test_area_matches_disc(omni_map):
    spm = tuned_spm(2500)
    checked = 0
    for t in np.arange(-120, -60, 1.0):
        r = spm_radius(spm, t, 30.0)
        if 2000 <= r <= 4800:
            disc = math.pi * (r / 1000) ** 2
            assert coverage_area_km2(omni_map, t) == pytest.approx(disc, rel=0.05)
            checked += 1
    assert checked >= 5


def test_ratio_table_identical_maps(omni_map):
    rows = coverage_ratio_table(omni_map, omni_map)
    assert len(rows) == 9 and [r.threshold_dbm for r in rows] == list(DEFAULT_THRESHOLDS_DBM)
    assert all(r.ratio == 1.0 for r in rows if r.area_mc_km2 > 0)
    text = ratio_table_csv(rows)
    assert text.splitlines()[0] == ",".join(RATIO_COLUMNS)


def test_ratio_table_geometry_mismatch(omni_map):
    other = RsrpMap(flat_grid(10), np.zeros((10, 10)), np.zeros((10, 10), dtype=int))
    with pytest.raises(InvalidArgument):
        coverage_ratio_table(omni_map, other)


# -- raster output ---------------------------------------------------------


def test_rsrp_grid_round_trip(tmp_path, omni_map):
    text = format_rsrp_grid(omni_map)
    back = load_rsrp_map(io.StringIO(text))
    assert np.allclose(back.rsrp_dbm, omni_map.rsrp_dbm, atol=0.05 + 1e-9)
    assert format_rsrp_grid(back) == text


def test_pgm(omni_map):
    data = rsrp_to_pgm(omni_map)
    header, _, rest = data.partition(b"\n255\n")
    lines = header.split(b"\n")
    assert lines[0] == b"P5" and lines[1].startswith(b"# rsrp_dbm")
    assert lines[2] == b"100 100"
    pixels = np.frombuffer(rest, dtype=np.uint8)
    assert pixels.size == 10_000 and pixels.max() == 255 and pixels.min() == 0


def test_summary(omni_map):
    s = summary(omni_map, -100.0)
    assert s["cells"] == 10_000
    assert s["covered_km2"] == pytest.approx(coverage_area_km2(omni_map, -100.0))
    assert 0 < s["covered_pct"] < 100
    assert "covered_km2" not in summary(omni_map)
