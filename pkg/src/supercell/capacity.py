"""High-order sectorisation capacity under a Laplacian power azimuth spectrum (PAS).

The PAS of a user is ``lambda0 * exp(-sqrt(2)|theta|/sigma)`` in degrees.  With
``N`` ideal rectangular sectors each spanning ``+/-W`` (``W = 180/N``), the
desired power is the PAS mass inside ``+/-W`` and the inter-sector
interference is the mass in the remaining sectors:

    D = sqrt(2) sigma lambda0 (1 - exp(-sqrt(2) W / sigma))
    I = sqrt(2) sigma lambda0 (exp(-sqrt(2) W / sigma) - exp(-sqrt(2) N W / sigma))

"Total CNR" is the ratio of the full +/-180 deg PAS power to thermal noise, so
the carrier power is normalised to one and noise is ``10**(-cnr/10)``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .antenna import MAX_SECTORS, SectorPattern, SectorPlan, make_uniform_plan, wrap_offset_deg
from .core import T0_K
from .errors import DegenerateSpreadError, InvalidArgument, NumericalError

SQRT2 = math.sqrt(2.0)
# Below this spread the sigma -> 0 limit formulas are used.
SIGMA_LIMIT_DEG = 1e-6
STREAMS = 2  # 2x2 MIMO
QUAD_RTOL = 1e-10

CURVE_COLUMNS = ("N", "W_pass_deg", "CINR_dB", "CNR_dB", "C_tot_bps")


@dataclass(frozen=True)
class LaplacianPas:
    sigma_deg: float
    lambda0: float = 1.0

    def __post_init__(self):
        if not self.sigma_deg >= 0:
            raise InvalidArgument(f"sigma must be >= 0 deg, got {self.sigma_deg}")
        if not self.lambda0 > 0:
            raise InvalidArgument(f"lambda0 must be > 0, got {self.lambda0}")

    @property
    def degenerate(self) -> bool:
        return self.sigma_deg < SIGMA_LIMIT_DEG


@dataclass(frozen=True)
class SectorCapacityInput:
    n_sectors: int
    bandwidth_hz: float
    sigma_deg: float
    total_cnr_db: float
    temperature_k: float = T0_K

    def __post_init__(self):
        if isinstance(self.n_sectors, bool) or int(self.n_sectors) != self.n_sectors or self.n_sectors < 1:
            raise InvalidArgument(f"n_sectors must be an integer >= 1, got {self.n_sectors}")
        object.__setattr__(self, "n_sectors", int(self.n_sectors))
        if not self.bandwidth_hz > 0:
            raise InvalidArgument(f"bandwidth must be > 0 Hz, got {self.bandwidth_hz}")
        if not self.sigma_deg >= 0:
            raise InvalidArgument(f"sigma must be >= 0 deg, got {self.sigma_deg}")
        if math.isnan(self.total_cnr_db):
            raise InvalidArgument("total CNR must not be NaN")

    @property
    def w_pass_deg(self) -> float:
        return 180.0 / self.n_sectors


@dataclass(frozen=True)
class Interferer:
    offset_deg: float
    tx_power_dbm: float
    pas: LaplacianPas

    def __post_init__(self):
        if not -180.0 < self.offset_deg <= 180.0:
            raise InvalidArgument(f"interferer offset must be in (-180, 180], got {self.offset_deg}")


@dataclass(frozen=True)
class CapacityRow:
    n: int
    w_pass_deg: float
    cinr_db: float
    cnr_db: float
    c_tot_bps: float


def _require_spread(pas: LaplacianPas):
    if pas.degenerate:
        raise DegenerateSpreadError(
            f"sigma = {pas.sigma_deg} deg is degenerate; use the sigma -> 0 limit instead"
        )


def pas_density(theta_deg, pas: LaplacianPas):
    _require_spread(pas)
    theta = np.asarray(theta_deg, dtype=float)
    out = pas.lambda0 * np.exp(-SQRT2 * np.abs(theta) / pas.sigma_deg)
    return float(out) if np.ndim(out) == 0 else out


def pas_total_power(pas: LaplacianPas) -> float:
    """PAS integral over +/-180 deg."""
    _require_spread(pas)
    s = pas.sigma_deg
    return SQRT2 * s * pas.lambda0 * -math.expm1(-SQRT2 * 180.0 / s)


def normalize_pas(total_power_linear: float, sigma_deg: float) -> LaplacianPas:
    """Laplacian PAS whose +/-180 deg integral equals ``total_power_linear``."""
    if not total_power_linear > 0:
        raise InvalidArgument(f"total power must be > 0, got {total_power_linear}")
    if sigma_deg < SIGMA_LIMIT_DEG:
        raise DegenerateSpreadError(f"cannot normalise a PAS with sigma = {sigma_deg} deg")
    lambda0 = total_power_linear / (SQRT2 * sigma_deg * -math.expm1(-SQRT2 * 180.0 / sigma_deg))
    return LaplacianPas(sigma_deg, lambda0)


def _check_w_pass(w_pass_deg):
    if not 0 < w_pass_deg <= 180:
        raise InvalidArgument(f"W_pass must be in (0, 180] deg, got {w_pass_deg}")


def desired_power_closed(pas: LaplacianPas, w_pass_deg: float, *, limit: bool = False) -> float:
    """PAS power captured by the serving sector (+/-W_pass about the user).

    With ``limit=True`` a degenerate spread returns the sigma -> 0 value for a
    unit-power PAS (1.0) instead of raising.
    """
    _check_w_pass(w_pass_deg)
    if pas.degenerate:
        if limit:
            return 1.0
        _require_spread(pas)
    s = pas.sigma_deg
    return SQRT2 * s * pas.lambda0 * -math.expm1(-SQRT2 * w_pass_deg / s)


def interference_power_closed(
    pas: LaplacianPas, w_pass_deg: float, n_sectors: int, *, limit: bool = False
) -> float:
    """PAS power leaking into the other ``n_sectors - 1`` sectors."""
    _check_w_pass(w_pass_deg)
    if pas.degenerate:
        if limit:
            return 0.0
        _require_spread(pas)
    s = pas.sigma_deg
    a = SQRT2 * w_pass_deg / s
    b = SQRT2 * n_sectors * w_pass_deg / s
    # exp(-a) - exp(-b) = exp(-a) * (1 - exp(a - b))
    return SQRT2 * s * pas.lambda0 * math.exp(-a) * -math.expm1(a - b)


def _quad(f, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=QUAD_RTOL * 1e-2, limit=200)
        except integrate.IntegrationWarning as exc:
            raise NumericalError(f"quadrature over [{a}, {b}] did not converge: {exc}") from None
    if val != 0 and err > QUAD_RTOL * abs(val):
        raise NumericalError(f"quadrature over [{a}, {b}] error {err:g} exceeds tolerance")
    return val


def _band_integral(density, pattern: SectorPattern, user_deg: float = 0.0, cusp_deg: float = 0.0):
    """Integral of ``density(theta)`` over the pass band of a rectangular pattern.

    ``theta`` is measured from ``user_deg`` and restricted to (-180, 180].  The
    band is split at the +/-180 seam and at the density's cusp and antipode.
    """
    centre = float(wrap_offset_deg(pattern.boresight_deg, user_deg))
    w = pattern.half_width_deg
    lo, hi = centre - w, centre + w
    kinks = sorted({cusp_deg + k for k in (-360.0, -180.0, 0.0, 180.0, 360.0)})
    total = 0.0
    for shift in (-360.0, 0.0, 360.0):
        a, b = max(lo + shift, -180.0), min(hi + shift, 180.0)
        if b <= a:
            continue
        cuts = [a] + [k for k in kinks if a < k < b] + [b]
        for x0, x1 in zip(cuts[:-1], cuts[1:]):
            total += _quad(density, x0, x1)
    return total


def sector_powers_numeric(pas: LaplacianPas, plan: SectorPlan) -> tuple[float, float]:
    """Desired and interference power by adaptive quadrature against the plan.

    The user sits at sector 0's boresight; desired power is the PAS mass in
    sector 0's pass band and interference the mass in all other sectors.
    """
    _require_spread(pas)
    if any(p.kind != "rectangular" for p in plan.patterns):
        raise InvalidArgument("numeric sector powers need rectangular patterns")

    def density(theta):
        return pas.lambda0 * math.exp(-SQRT2 * abs(theta) / pas.sigma_deg)

    user = plan.patterns[0].boresight_deg
    desired = _band_integral(density, plan.patterns[0], user)
    interference = sum(_band_integral(density, p, user) for p in plan.patterns[1:])
    return desired, interference


def general_ci_ratio(
    desired_pas: LaplacianPas,
    interferers,
    pattern: SectorPattern,
    desired_tx_power_dbm: float = 0.0,
) -> float:
    """C/I (dB) of a user at the pattern boresight against arbitrary interferers.

    Each interferer's PAS is centred at its azimuth offset from the user and
    weighted by its linear transmit power.  Returns ``math.inf`` when no
    interference power reaches the pass band.
    """
    if pattern.kind != "rectangular":
        raise InvalidArgument("general C/I integration needs a rectangular pattern")
    _require_spread(desired_pas)
    user = pattern.boresight_deg

    def laplacian(pas, centre):
        _require_spread(pas)

        def f(theta):
            off = (theta - centre + 180.0) % 360.0 - 180.0
            return pas.lambda0 * math.exp(-SQRT2 * abs(off) / pas.sigma_deg)

        return f

    desired = 10.0 ** (desired_tx_power_dbm / 10.0) * _band_integral(
        laplacian(desired_pas, 0.0), pattern, user
    )
    interference = 0.0
    for itf in interferers:
        weight = 10.0 ** (itf.tx_power_dbm / 10.0)
        density = laplacian(itf.pas, itf.offset_deg)
        interference += weight * _band_integral(density, pattern, user, itf.offset_deg)
    if interference == 0.0:
        return math.inf
    return 10.0 * math.log10(desired / interference)


def _normalized_powers(sigma_deg: float, n_sectors: int) -> tuple[float, float]:
    w = 180.0 / n_sectors
    if sigma_deg < SIGMA_LIMIT_DEG:
        return 1.0, 0.0
    pas = normalize_pas(1.0, sigma_deg)
    return desired_power_closed(pas, w), interference_power_closed(pas, w, n_sectors)


def _noise_linear(total_cnr_db: float) -> float:
    return 10.0 ** (-total_cnr_db / 10.0)


def cinr_linear(inp: SectorCapacityInput) -> float:
    d, i = _normalized_powers(inp.sigma_deg, inp.n_sectors)
    return d / (i + _noise_linear(inp.total_cnr_db))


def cinr_db(inp: SectorCapacityInput) -> float:
    return 10.0 * math.log10(cinr_linear(inp))


def cnr_db(inp: SectorCapacityInput) -> float:
    d, _ = _normalized_powers(inp.sigma_deg, inp.n_sectors)
    return 10.0 * math.log10(d) + inp.total_cnr_db


def total_capacity_bps(inp: SectorCapacityInput, streams: int = STREAMS) -> float:
    """Shannon capacity summed over all sectors and spatial streams."""
    return streams * inp.n_sectors * inp.bandwidth_hz * math.log2(1.0 + cinr_linear(inp))


def capacity_vs_sectors(
    sigma_deg: float,
    bandwidth_hz: float,
    total_cnr_db: float,
    n_max: int,
    streams: int = STREAMS,
) -> list[CapacityRow]:
    if isinstance(n_max, bool) or int(n_max) != n_max or not 1 <= n_max <= MAX_SECTORS:
        raise InvalidArgument(f"n_max must be an integer in [1, {MAX_SECTORS}], got {n_max}")
    rows = []
    for n in range(1, int(n_max) + 1):
        inp = SectorCapacityInput(n, bandwidth_hz, sigma_deg, total_cnr_db)
        rows.append(
            CapacityRow(
                n=n,
                w_pass_deg=inp.w_pass_deg,
                cinr_db=cinr_db(inp),
                cnr_db=cnr_db(inp),
                c_tot_bps=total_capacity_bps(inp, streams),
            )
        )
    return rows


def optimal_sector_count(curve: list[CapacityRow], marginal_threshold: float) -> int:
    """First N whose next sector adds less than ``marginal_threshold`` of the
    current per-sector capacity ``C(N)/N``; the largest N if none does."""
    if not curve:
        raise InvalidArgument("capacity curve is empty")
    if not 0 < marginal_threshold < 1:
        raise InvalidArgument(f"threshold must be in (0, 1), got {marginal_threshold}")
    for row, nxt in zip(curve[:-1], curve[1:]):
        per_sector = row.c_tot_bps / row.n
        if (nxt.c_tot_bps - row.c_tot_bps) < marginal_threshold * per_sector:
            return row.n
    return curve[-1].n


def sigma_from_pathloss(a: float, b: float, pl_db):
    """Azimuth spread predicted by the exponential law ``a * exp(b * PL)``."""
    if not a > 0:
        raise InvalidArgument(f"coefficient a must be > 0, got {a}")
    out = a * np.exp(b * np.asarray(pl_db, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def curve_csv(rows: list[CapacityRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_COLUMNS)
    for r in rows:
        w.writerow([r.n, f"{r.w_pass_deg:.6g}", f"{r.cinr_db:.6g}", f"{r.cnr_db:.6g}", f"{r.c_tot_bps:.6g}"])
    return buf.getvalue()


def uniform_interferers(n_sectors: int, sigma_deg: float, tx_power_dbm: float = 0.0) -> list[Interferer]:
    """One interferer at the centre of every other sector, each with a unit-power PAS."""
    pas = normalize_pas(1.0, sigma_deg)
    out = []
    for k in range(1, n_sectors):
        off = float(wrap_offset_deg(k * 360.0 / n_sectors, 0.0))
        out.append(Interferer(off, tx_power_dbm, pas))
    return out


__all__ = [
    "LaplacianPas",
    "SectorCapacityInput",
    "Interferer",
    "CapacityRow",
    "pas_density",
    "pas_total_power",
    "normalize_pas",
    "desired_power_closed",
    "interference_power_closed",
    "sector_powers_numeric",
    "general_ci_ratio",
    "cinr_db",
    "cinr_linear",
    "cnr_db",
    "total_capacity_bps",
    "capacity_vs_sectors",
    "optimal_sector_count",
    "sigma_from_pathloss",
    "curve_csv",
    "uniform_interferers",
    "make_uniform_plan",
]
