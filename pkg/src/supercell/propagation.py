"""Pathloss models: free space, the tuned Standard Propagation Model (SPM),
knife-edge diffraction over terrain profiles, optical LOS and the two-ray
reflection fade margin.

Distances entering the SPM logarithms are in metres; every log is base 10.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from functools import lru_cache
from importlib import resources

import numpy as np

from .core import wavelength_m
from .errors import InvalidArgument

EARTH_RADIUS_M = 6_371_000.0
# Clearance (m) at or below which a terrain sample counts as grazing, i.e. LOS.
GRAZING_TOL_M = 1e-9
KNIFE_EDGE_NU_MIN = -0.78


@dataclass(frozen=True)
class SpmParams:
    """Coefficient set of the Standard Propagation Model.

    ``k1_*``/``k2_*`` are the intercept (dB) and distance slope (dB/decade)
    pairs, one per LOS class.  The hilly-terrain term applies to LOS paths only.
    """

    k1_los: float
    k2_los: float
    k1_nlos: float
    k2_nlos: float
    k3: float
    k4: float
    k5: float
    k6: float
    k7: float
    k_clutter: float = 1.0
    f_clutter: float = 0.0
    k_hill_los: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise InvalidArgument(f"SPM coefficient {f.name} must be finite, got {v}")
        if not (self.k2_los > 0 and self.k2_nlos > 0):
            raise InvalidArgument("k2_los and k2_nlos must be > 0 (loss grows with distance)")
        if self.f_clutter < 0:
            raise InvalidArgument(f"f_clutter must be >= 0, got {self.f_clutter}")

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "SpmParams":
        d = self.to_dict()
        unknown = set(changes) - set(d)
        if unknown:
            raise InvalidArgument(f"unknown SPM coefficient(s): {sorted(unknown)}")
        d.update(changes)
        return SpmParams(**d)


SPM_COEFFICIENTS = tuple(f.name for f in fields(SpmParams))


@lru_cache(maxsize=None)
def _tuned_table() -> dict:
    text = resources.files("supercell").joinpath("data/spm_tuned.json").read_text()
    table = json.loads(text)
    table.pop("_comment", None)
    return table


def tuned_spm(band: str | int) -> SpmParams:
    """Drive-test tuned coefficients for ``band`` ("728" or "2500" MHz)."""
    key = str(int(float(band)))
    table = _tuned_table()
    if key not in table:
        raise InvalidArgument(f"no tuned SPM for band {band!r}; available: {sorted(table)}")
    return SpmParams(**table[key])


def tuned_bands() -> list[str]:
    return sorted(_tuned_table(), key=float)


@dataclass(frozen=True)
class PathContext:
    d_m: float
    h_tx_m: float
    h_rx_m: float
    is_los: bool
    l_diff_db: float = 0.0

    def __post_init__(self):
        if not self.d_m > 0:
            raise InvalidArgument(f"d_m must be > 0, got {self.d_m}")
        if not self.h_tx_m > 0:
            raise InvalidArgument(f"h_tx_m must be > 0, got {self.h_tx_m}")
        if not self.h_rx_m > 0:
            raise InvalidArgument(f"h_rx_m must be > 0, got {self.h_rx_m}")
        if not self.l_diff_db >= 0:
            raise InvalidArgument(f"l_diff_db must be >= 0, got {self.l_diff_db}")
        if self.is_los and self.l_diff_db != 0:
            raise InvalidArgument("a LOS path cannot carry diffraction loss")


def fspl_db(d_m: float, f_mhz: float) -> float:
    """Friis free-space loss."""
    if not (d_m > 0 and f_mhz > 0):
        raise InvalidArgument(f"distance and frequency must be positive, got {d_m} m, {f_mhz} MHz")
    return 20.0 * math.log10(d_m / 1000.0) + 20.0 * math.log10(f_mhz) + 32.4478


def spm_pathloss_db(params: SpmParams, ctx: PathContext) -> float:
    log_d = math.log10(ctx.d_m)
    log_htx = math.log10(ctx.h_tx_m)
    if ctx.is_los:
        k1, k2, hill = params.k1_los, params.k2_los, params.k_hill_los
    else:
        k1, k2, hill = params.k1_nlos, params.k2_nlos, 0.0
    return (
        k1
        + k2 * log_d
        + params.k3 * log_htx
        + params.k4 * ctx.l_diff_db
        + params.k5 * log_d * log_htx
        + params.k6 * ctx.h_rx_m
        + params.k7 * math.log10(ctx.h_rx_m)
        + params.k_clutter * params.f_clutter
        + hill
    )


# --------------------------------------------------------------------------
# terrain profiles


@dataclass(frozen=True, eq=False)
class TerrainProfile:
    """Ground elevations sampled along a straight Tx->Rx path.

    ``elevations`` may contain NaN for samples that fell on NODATA cells;
    those samples are ignored by the LOS and diffraction evaluations.
    Antenna heights are above local ground at each end.
    """

    distances: np.ndarray
    elevations: np.ndarray
    h_tx_m: float
    h_rx_m: float

    def __post_init__(self):
        d = np.array(self.distances, dtype=float)
        z = np.array(self.elevations, dtype=float)
        if d.ndim != 1 or d.shape != z.shape:
            raise InvalidArgument("distances and elevations must be 1-D arrays of equal length")
        if d.size < 2:
            raise InvalidArgument("a profile needs at least 2 samples")
        if d[0] != 0:
            raise InvalidArgument("profile distances must start at 0")
        if np.any(np.diff(d) <= 0):
            raise InvalidArgument("profile distances must be strictly increasing")
        if np.isnan(z[0]) or np.isnan(z[-1]):
            raise InvalidArgument("profile endpoints must have valid elevations")
        d.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "elevations", z)

    @property
    def length_m(self) -> float:
        return float(self.distances[-1])

    @property
    def tx_tip_m(self) -> float:
        return float(self.elevations[0] + self.h_tx_m)

    @property
    def rx_tip_m(self) -> float:
        return float(self.elevations[-1] + self.h_rx_m)


def _clearance(d, z, d_a, z_a, d_b, z_b):
    """Height of terrain ``z`` at ``d`` above the chord (d_a, z_a)-(d_b, z_b),
    including the Earth bulge relative to that chord."""
    t = (d - d_a) / (d_b - d_a)
    ray = z_a + (z_b - z_a) * t
    bulge = (d - d_a) * (d_b - d) / (2.0 * EARTH_RADIUS_M)
    return z + bulge - ray


def fresnel_nu_from_geometry(h_m, d1_m, d2_m, f_mhz):
    """Fresnel-Kirchhoff parameter for an edge ``h_m`` above the direct ray."""
    if not (d1_m > 0 and d2_m > 0):
        raise InvalidArgument("knife-edge distances d1 and d2 must be positive")
    lam = wavelength_m(f_mhz)
    return h_m * math.sqrt(2.0 * (d1_m + d2_m) / (lam * d1_m * d2_m))


def fresnel_nu(profile: TerrainProfile, edge_index: int, f_mhz: float) -> float:
    """Signed Fresnel parameter of sample ``edge_index`` against the direct ray
    between antenna tips (positive when the sample obstructs)."""
    n = profile.distances.size
    if not 0 < edge_index < n - 1:
        raise InvalidArgument(f"edge index {edge_index} is not strictly between the endpoints")
    z = profile.elevations[edge_index]
    if np.isnan(z):
        raise InvalidArgument(f"sample {edge_index} has no elevation data")
    d = profile.distances[edge_index]
    h = _clearance(d, z, 0.0, profile.tx_tip_m, profile.length_m, profile.rx_tip_m)
    return fresnel_nu_from_geometry(float(h), float(d), profile.length_m - float(d), f_mhz)


def knife_edge_loss_db(nu):
    """Single knife-edge loss J(nu), zero below nu = -0.78.  Accepts arrays."""
    nu_arr = np.asarray(nu, dtype=float)
    x = nu_arr - 0.1
    with np.errstate(invalid="ignore", divide="ignore"):
        j = 6.9 + 20.0 * np.log10(np.sqrt(x * x + 1.0) + x)
    out = np.where(nu_arr > KNIFE_EDGE_NU_MIN, np.maximum(j, 0.0), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def profile_los(profile: TerrainProfile) -> bool:
    """Optical line of sight between the antenna tips over true-Earth terrain."""
    d = profile.distances[1:-1]
    z = profile.elevations[1:-1]
    ok = ~np.isnan(z)
    if not ok.any():
        return True
    c = _clearance(d[ok], z[ok], 0.0, profile.tx_tip_m, profile.length_m, profile.rx_tip_m)
    return bool(np.all(c <= GRAZING_TOL_M))


def _principal_edge(dist, elev, lo, hi, z_lo, z_hi, lam):
    """Highest-nu valid sample strictly between indices ``lo`` and ``hi``."""
    if hi - lo < 2:
        return None
    idx = np.arange(lo + 1, hi)
    z = elev[idx]
    ok = ~np.isnan(z)
    if not ok.any():
        return None
    idx, z = idx[ok], z[ok]
    d = dist[idx]
    d_lo, d_hi = dist[lo], dist[hi]
    h = _clearance(d, z, d_lo, z_lo, d_hi, z_hi)
    nu = h * np.sqrt(2.0 * (d_hi - d_lo) / (lam * (d - d_lo) * (d_hi - d)))
    k = int(np.argmax(nu))
    return int(idx[k]), float(h[k])


def diffraction_edges(profile: TerrainProfile, f_mhz: float) -> list[int]:
    """Sample indices of the (at most three) edges used for the diffraction sum.

    The principal edge maximises nu over the whole path; one secondary edge
    is then taken on each side of it, if any sample obstructs the sub-path
    between the principal edge top and the corresponding antenna tip.
    """
    dist, elev = profile.distances, profile.elevations
    n = dist.size
    lam = wavelength_m(f_mhz)
    main = _principal_edge(dist, elev, 0, n - 1, profile.tx_tip_m, profile.rx_tip_m, lam)
    if main is None or main[1] <= GRAZING_TOL_M:
        return []
    p = main[0]
    edges = [p]
    left = _principal_edge(dist, elev, 0, p, profile.tx_tip_m, elev[p], lam)
    if left is not None and left[1] > GRAZING_TOL_M:
        edges.append(left[0])
    right = _principal_edge(dist, elev, p, n - 1, elev[p], profile.rx_tip_m, lam)
    if right is not None and right[1] > GRAZING_TOL_M:
        edges.append(right[0])
    return sorted(edges)


def profile_diffraction_db(profile: TerrainProfile, f_mhz: float) -> float:
    """Terrain diffraction loss: Epstein-Peterson sum over up to three knife edges.

    Each edge's nu is taken against the chord joining its neighbours (the
    previous/next edge top, or the antenna tip at either end).  Zero on LOS paths.
    """
    if profile_los(profile):
        return 0.0
    edges = diffraction_edges(profile, f_mhz)
    dist, elev = profile.distances, profile.elevations
    anchors = [(0.0, profile.tx_tip_m)]
    anchors += [(float(dist[e]), float(elev[e])) for e in edges]
    anchors.append((profile.length_m, profile.rx_tip_m))
    total = 0.0
    for i in range(1, len(anchors) - 1):
        (d_a, z_a), (d, z), (d_b, z_b) = anchors[i - 1], anchors[i], anchors[i + 1]
        h = _clearance(d, z, d_a, z_a, d_b, z_b)
        nu = fresnel_nu_from_geometry(h, d - d_a, d_b - d, f_mhz)
        total += knife_edge_loss_db(nu)
    return total


# --------------------------------------------------------------------------
# two-ray ground reflection


@dataclass(frozen=True)
class TwoRayParams:
    h_tx_m: float
    h_rx_m: float
    f_mhz: float
    reflection_coefficient: complex = -1.0 + 0.0j

    def __post_init__(self):
        if abs(self.reflection_coefficient) > 1.0 + 1e-12:
            raise InvalidArgument("|reflection_coefficient| must be <= 1")
        if not (self.h_tx_m > 0 and self.h_rx_m > 0):
            raise InvalidArgument("antenna heights must be positive")
        if not self.f_mhz > 0:
            raise InvalidArgument("frequency must be positive")


def two_ray_path_difference_m(p: TwoRayParams, d_m):
    """Reflected minus direct path length, computed without cancellation."""
    d = np.asarray(d_m, dtype=float)
    r1 = np.hypot(d, p.h_tx_m - p.h_rx_m)
    r2 = np.hypot(d, p.h_tx_m + p.h_rx_m)
    return 4.0 * p.h_tx_m * p.h_rx_m / (r1 + r2)


def two_ray_fade_margin_db(p: TwoRayParams, d_m):
    """Received power with the ground-reflected ray relative to the direct ray alone (dB).

    Accepts scalar or array distances.  Returns ``-inf`` at an exact null.
    """
    d = np.asarray(d_m, dtype=float)
    if np.any(d <= max(p.h_tx_m, p.h_rx_m)):
        raise InvalidArgument("distance must exceed both antenna heights")
    r1 = np.hypot(d, p.h_tx_m - p.h_rx_m)
    r2 = np.hypot(d, p.h_tx_m + p.h_rx_m)
    dphi = 2.0 * math.pi * two_ray_path_difference_m(p, d) / wavelength_m(p.f_mhz)
    field = 1.0 + p.reflection_coefficient * np.exp(-1j * dphi) * (r1 / r2)
    with np.errstate(divide="ignore"):
        out = 20.0 * np.log10(np.abs(field))
    return float(out) if np.ndim(out) == 0 else out
