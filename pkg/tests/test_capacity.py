import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from supercell.antenna import SectorPattern, make_uniform_plan
from supercell.capacity import (
    CURVE_COLUMNS,
    Interferer,
    LaplacianPas,
    SectorCapacityInput,
    capacity_vs_sectors,
    cinr_db,
    cnr_db,
    curve_csv,
    desired_power_closed,
    general_ci_ratio,
    interference_power_closed,
    normalize_pas,
    optimal_sector_count,
    pas_density,
    pas_total_power,
    sector_powers_numeric,
    sigma_from_pathloss,
    total_capacity_bps,
    uniform_interferers,
)
from supercell.errors import DegenerateSpreadError, InvalidArgument


def test_density_shape():
    pas = LaplacianPas(10.0)
    assert pas_density(0.0, pas) == 1.0
    assert pas_density(10 * math.log(2) / math.sqrt(2), pas) == pytest.approx(0.5)
    assert pas_total_power(pas) == pytest.approx(math.sqrt(2) * 10 * (1 - math.exp(-math.sqrt(2) * 18)), abs=1e-6)
    assert pas_total_power(pas) == pytest.approx(14.142, abs=1e-3)


def test_total_power_against_quadrature():
    pas = LaplacianPas(10.0, 0.3)
    val, _ = integrate.quad(lambda t: pas_density(t, pas), -180, 180, points=[0.0], epsabs=0)
    assert pas_total_power(pas) == pytest.approx(val, rel=1e-12)


def test_normalize():
    assert normalize_pas(1.0, 10.0).lambda0 == pytest.approx(0.070711, abs=1e-6)
    assert normalize_pas(2.0, 10.0).lambda0 == pytest.approx(2 * normalize_pas(1.0, 10.0).lambda0)
    with pytest.raises(DegenerateSpreadError):
        normalize_pas(1.0, 0.0)
    with pytest.raises(InvalidArgument):
        normalize_pas(0.0, 1.0)


@given(st.floats(0.01, 100), st.floats(1e-3, 1e3))
def test_normalize_round_trip(sigma, p):
    assert pas_total_power(normalize_pas(p, sigma)) == pytest.approx(p, rel=1e-9)


def test_closed_form_examples():
    pas = normalize_pas(1.0, 2.0)
    assert desired_power_closed(pas, 5.0) == pytest.approx(0.97085, abs=1e-5)
    assert interference_power_closed(pas, 5.0, 36) == pytest.approx(0.029148, abs=1e-5)
    assert desired_power_closed(pas, 180.0) == pytest.approx(1.0, rel=1e-12)
    assert interference_power_closed(pas, 180.0, 1) == 0.0
    assert desired_power_closed(pas, 1e-12) == pytest.approx(0.0, abs=1e-9)


def test_degenerate_spread():
    pas = LaplacianPas(0.0)
    with pytest.raises(DegenerateSpreadError):
        desired_power_closed(pas, 5.0)
    assert desired_power_closed(pas, 5.0, limit=True) == 1.0
    assert interference_power_closed(pas, 5.0, 36, limit=True) == 0.0
    with pytest.raises(InvalidArgument):
        LaplacianPas(-1.0)


@settings(max_examples=60)
@given(st.floats(0.05, 60), st.integers(1, 72))
def test_conservation(sigma, n):
    pas = normalize_pas(1.0, sigma)
    w = 180.0 / n
    assert desired_power_closed(pas, w) + interference_power_closed(pas, w, n) == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("sigma", [0.35, 2, 10])
@pytest.mark.parametrize("n", [1, 5, 36])
def test_numeric_matches_closed(sigma, n):
    pas = normalize_pas(1.0, sigma)
    d, i = sector_powers_numeric(pas, make_uniform_plan(n, 0))
    w = 180.0 / n
    assert d == pytest.approx(desired_power_closed(pas, w), rel=1e-8)
    if n == 1:
        assert i == 0.0
    else:
        assert i == pytest.approx(interference_power_closed(pas, w, n), rel=1e-8)


def test_numeric_example():
    d, i = sector_powers_numeric(normalize_pas(1.0, 2.0), make_uniform_plan(36, 0))
    assert d == pytest.approx(0.97085, abs=1e-5)
    assert i == pytest.approx(0.029148, abs=1e-5)


def test_general_ci_ratio():
    pas = normalize_pas(1.0, 2.0)
    pattern = SectorPattern(0.0, 5.0, 0.0)
    assert general_ci_ratio(pas, [], pattern) == math.inf
    assert general_ci_ratio(pas, [Interferer(0.0, 0.0, pas)], pattern) == pytest.approx(0.0, abs=1e-12)
    assert general_ci_ratio(pas, [Interferer(0.0, 3.0, pas)], pattern) == pytest.approx(-3.0, abs=1e-12)


@pytest.mark.parametrize("sigma, n", [(2.0, 36), (10.0, 12), (0.5, 6)])
def test_uniform_interferers_match_closed_form(sigma, n):
    # A sector-centred interferer's mass in the user's band equals the user's
    # own leakage into that interferer's sector, by symmetry.
    pas = normalize_pas(1.0, sigma)
    w = 180.0 / n
    pattern = make_uniform_plan(n, 0).patterns[0]
    got = general_ci_ratio(pas, uniform_interferers(n, sigma), pattern)
    ref = 10 * math.log10(desired_power_closed(pas, w) / interference_power_closed(pas, w, n))
    assert got == pytest.approx(ref, abs=1e-7)


def test_cinr_cnr_examples():
    inp = SectorCapacityInput(36, 20e6, 2.0, 20.0)
    assert cinr_db(inp) == pytest.approx(13.95, abs=0.02)
    assert cnr_db(inp) == pytest.approx(19.87, abs=0.02)
    assert total_capacity_bps(inp) == pytest.approx(6.76e9, rel=0.01)
    assert cnr_db(SectorCapacityInput(1, 20e6, 2.0, 20.0)) == pytest.approx(20.0, abs=1e-12)


def test_zero_spread_limits():
    inp = SectorCapacityInput(36, 20e6, 0.0, 20.0)
    assert cinr_db(inp) == 20.0
    assert total_capacity_bps(SectorCapacityInput(1, 1.0, 0.0, 0.0)) == pytest.approx(2.0)


def test_noise_dominated():
    assert cinr_db(SectorCapacityInput(36, 1e6, 2.0, -200.0)) < -150


@settings(max_examples=60)
@given(st.floats(0, 60), st.integers(1, 72), st.floats(-20, 40))
def test_cinr_never_above_cnr(sigma, n, cnr):
    inp = SectorCapacityInput(n, 1e6, sigma, cnr)
    assert cinr_db(inp) <= cnr_db(inp) + 1e-12


def test_curve_zero_spread_linear():
    rows = capacity_vs_sectors(0.0, 20e6, 20.0, 36)
    per = np.array([r.c_tot_bps / r.n for r in rows])
    assert len(rows) == 36
    assert np.max(np.abs(per / per[0] - 1)) < 1e-12


def test_curve_sublinear_with_spread():
    rows = capacity_vs_sectors(5.0, 20e6, 20.0, 36)
    c = np.array([r.c_tot_bps for r in rows])
    assert c[35] < 36 * c[0]
    assert np.all(np.diff(c) > 0)
    marginal = np.diff(c)
    assert np.all(np.diff(marginal) < 0)


def test_curve_near_linear_at_small_spread():
    rows = capacity_vs_sectors(0.1, 20e6, 20.0, 36)
    c1 = rows[0].c_tot_bps
    assert all(r.c_tot_bps / (r.n * c1) >= 0.99 for r in rows)


@pytest.mark.parametrize("sigma", [5.0, 10.0, 30.0])
def test_cnr_falls_with_sector_count(sigma):
    cnr = [r.cnr_db for r in capacity_vs_sectors(sigma, 20e6, 20.0, 36)]
    assert np.all(np.diff(cnr) < 0)


@pytest.mark.parametrize("sigma", [0.1, 0.35, 2.0])
def test_cnr_non_increasing_at_small_spread(sigma):
    # At small spreads the captured fraction is 1 to within double precision.
    cnr = [r.cnr_db for r in capacity_vs_sectors(sigma, 20e6, 20.0, 36)]
    assert np.all(np.diff(cnr) <= 0)


def test_curve_validation():
    with pytest.raises(InvalidArgument):
        capacity_vs_sectors(2.0, 20e6, 20.0, 73)
    with pytest.raises(InvalidArgument):
        capacity_vs_sectors(-1.0, 20e6, 20.0, 10)
    with pytest.raises(InvalidArgument):
        SectorCapacityInput(3, 0.0, 1.0, 10.0)


def test_optimal_sector_count():
    assert optimal_sector_count(capacity_vs_sectors(0.0, 20e6, 20.0, 36), 0.05) == 36
    assert optimal_sector_count(capacity_vs_sectors(20.0, 20e6, 20.0, 36), 0.05) == 6
    assert optimal_sector_count(capacity_vs_sectors(20.0, 20e6, 20.0, 36), 0.999) == 1
    with pytest.raises(InvalidArgument):
        optimal_sector_count([], 0.1)


def test_sigma_from_pathloss():
    assert sigma_from_pathloss(3.0, 0.0, [100, 150]) == pytest.approx([3.0, 3.0])
    s = sigma_from_pathloss(0.5, 0.02, np.linspace(100, 160, 20))
    assert np.all(np.diff(s) > 0)
    with pytest.raises(InvalidArgument):
        sigma_from_pathloss(0.0, 0.1, 100)


def test_curve_csv():
    text = curve_csv(capacity_vs_sectors(2.0, 20e6, 20.0, 36))
    lines = text.splitlines()
    assert lines[0] == ",".join(CURVE_COLUMNS)
    assert len(lines) == 37
    assert lines[-1].split(",")[2] == "13.945"
