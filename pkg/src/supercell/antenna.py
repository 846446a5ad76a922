"""Antenna models: Luneburg lens permittivity and gain curve, flat-panel array
gain and sizing, and idealised sector patterns."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError, InvalidArgument

PATTERN_FLOOR_DB = -300.0
# Sector edges are shifted by this much so that rounding in boresight
# arithmetic cannot open gaps or overlaps between adjacent sectors.
EDGE_TOL_DEG = 1e-9
SIZING_SLACK_DB = 0.75
DEFAULT_ELEMENT_GAIN_DBI = 5.0
MAX_SECTORS = 72

# Reference figures for the 1.251 m, 6-shell lens design (documentation only).
LENS_REFERENCE = {
    "outer_diameter_m": 1.251,
    "shells": 6,
    "gain_dbi_2600mhz": 28.8,
    "gain_dbi_1800mhz": 26.31,
    "sidelobe_db_2600mhz": 23.85,
    "sidelobe_db_1800mhz": 18.13,
}


def _parse_curve(lines, source="<curve>"):
    pairs = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise InvalidArgument(f"{source}:{lineno}: expected two columns, got {raw.strip()!r}")
        try:
            pairs.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise InvalidArgument(f"{source}:{lineno}: non-numeric value in {raw.strip()!r}") from None
    return tuple(pairs)


def load_gain_curve(path) -> tuple[tuple[float, float], ...]:
    """Read a two-column (diameter in wavelengths, gain dBi) table; '#' starts a comment."""
    path = Path(path)
    return _parse_curve(path.read_text().splitlines(), source=str(path))


def default_gain_curve() -> tuple[tuple[float, float], ...]:
    text = resources.files("supercell").joinpath("data/lens_gain_curve.txt").read_text()
    return _parse_curve(text.splitlines(), source="lens_gain_curve.txt")


@dataclass(frozen=True)
class LensModel:
    """Luneburg lens of radius ``radius_m`` with a tabulated gain-vs-diameter curve."""

    radius_m: float = 1.251 / 2
    gain_curve: tuple = field(default_factory=default_gain_curve)

    def __post_init__(self):
        if not self.radius_m > 0:
            raise InvalidArgument(f"lens radius must be > 0, got {self.radius_m}")
        curve = tuple((float(d), float(g)) for d, g in self.gain_curve)
        if len(curve) < 2:
            raise InvalidArgument("gain curve needs at least two knots")
        d, g = np.array(curve).T
        if np.any(np.diff(d) <= 0) or np.any(np.diff(g) <= 0):
            raise InvalidArgument("gain curve must be strictly increasing in diameter and gain")
        object.__setattr__(self, "gain_curve", curve)

    @property
    def _knots(self):
        return np.array(self.gain_curve).T


def lens_permittivity(r_m: float, radius_m: float) -> float:
    """Relative permittivity ``2 - (r/R)^2`` at distance ``r_m`` from the lens centre."""
    if not radius_m > 0:
        raise InvalidArgument(f"lens radius must be > 0, got {radius_m}")
    if not 0 <= r_m <= radius_m:
        raise InvalidArgument(f"r = {r_m} m is outside the lens [0, {radius_m}]")
    return 2.0 - (r_m / radius_m) ** 2


def lens_gain_dbi(d_lambda: float, model: LensModel | None = None) -> float:
    """Piecewise-linear gain for a lens ``d_lambda`` wavelengths across."""
    model = model or LensModel()
    d, g = model._knots
    if not d[0] <= d_lambda <= d[-1]:
        raise DomainError(f"diameter {d_lambda} wavelengths outside curve domain [{d[0]}, {d[-1]}]")
    return float(np.interp(d_lambda, d, g))


def lens_diameter_for_gain(gain_dbi: float, model: LensModel | None = None) -> float:
    """Inverse of :func:`lens_gain_dbi` (diameter in wavelengths)."""
    model = model or LensModel()
    d, g = model._knots
    if not g[0] <= gain_dbi <= g[-1]:
        raise DomainError(f"gain {gain_dbi} dBi outside lens curve range [{g[0]}, {g[-1]}]")
    return float(np.interp(gain_dbi, g, d))


@dataclass(frozen=True)
class PanelArray:
    n_v: int
    n_h: int
    element_gain_dbi: float = DEFAULT_ELEMENT_GAIN_DBI
    orientation: str = "vertical"

    def __post_init__(self):
        for name in ("n_v", "n_h"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise InvalidArgument(f"{name} must be an integer >= 1, got {v}")
            object.__setattr__(self, name, int(v))
        if self.orientation not in ("vertical", "horizontal"):
            raise InvalidArgument(f"orientation must be 'vertical' or 'horizontal', got {self.orientation!r}")

    @property
    def n_elements(self) -> int:
        return self.n_v * self.n_h


def panel_gain_dbi(array: PanelArray) -> float:
    return array.element_gain_dbi + 10.0 * math.log10(array.n_v * array.n_h)


def panel_elements_for_gain(
    target_dbi: float,
    element_gain_dbi: float = DEFAULT_ELEMENT_GAIN_DBI,
    aspect: float = 9.3,
    slack_db: float = SIZING_SLACK_DB,
) -> tuple[int, int]:
    """Size a planar array ``(n_v, n_h)`` for a target gain.

    If one element meets ``target - slack`` the answer is ``(1, 1)``.
    Otherwise columns are added one at a time, each array kept at the
    requested shape (``n_v = round(aspect * n_h)``), and the first array
    within ``slack_db`` of the target is returned.
    """
    if target_dbi < element_gain_dbi:
        raise InvalidArgument(
            f"target gain {target_dbi} dBi is below the element gain {element_gain_dbi} dBi"
        )
    if not aspect > 0:
        raise InvalidArgument(f"aspect must be > 0, got {aspect}")
    needed = 10.0 ** ((target_dbi - slack_db - element_gain_dbi) / 10.0)
    if needed <= 1.0:
        return 1, 1
    n_h = 1
    while True:
        n_v = max(1, int(math.floor(aspect * n_h + 0.5)))
        if n_v * n_h >= needed * (1 - 1e-12):
            return n_v, n_h
        n_h += 1


# --------------------------------------------------------------------------
# sector patterns


def wrap_offset_deg(azimuth_deg, boresight_deg):
    """Azimuth offset from boresight wrapped to (-180, 180]."""
    delta = np.asarray(azimuth_deg, dtype=float) - boresight_deg
    delta = np.where(delta > 180.0, delta - 360.0, delta)
    delta = np.where(delta <= -180.0, delta + 360.0, delta)
    return delta


@dataclass(frozen=True)
class SectorPattern:
    boresight_deg: float
    half_width_deg: float
    peak_gain_dbi: float
    kind: str = "rectangular"

    def __post_init__(self):
        if not 0 < self.half_width_deg <= 180:
            raise InvalidArgument(f"half width must be in (0, 180], got {self.half_width_deg}")
        if self.kind not in ("rectangular", "gaussian"):
            raise InvalidArgument(f"pattern kind must be 'rectangular' or 'gaussian', got {self.kind!r}")
        object.__setattr__(self, "boresight_deg", float(self.boresight_deg) % 360.0)


def sector_gain_db(pattern: SectorPattern, azimuth_deg):
    """Pattern gain toward ``azimuth_deg``.

    Rectangular patterns are flat over (-W, +W] about boresight and floored at
    -300 dB outside; gaussian patterns fall 3 dB at +/-W.  Accepts arrays.
    """
    delta = wrap_offset_deg(azimuth_deg, pattern.boresight_deg)
    w = pattern.half_width_deg
    if pattern.kind == "rectangular":
        inside = (delta > -w + EDGE_TOL_DEG) & (delta <= w + EDGE_TOL_DEG)
        if w >= 180.0:
            inside = np.ones_like(delta, dtype=bool)
        out = np.where(inside, pattern.peak_gain_dbi, PATTERN_FLOOR_DB)
    else:
        out = np.maximum(pattern.peak_gain_dbi - 3.0 * (delta / w) ** 2, PATTERN_FLOOR_DB)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SectorPlan:
    n_sectors: int
    patterns: tuple

    def __post_init__(self):
        if self.n_sectors < 1 or len(self.patterns) != self.n_sectors:
            raise InvalidArgument("a plan needs n_sectors >= 1 matching patterns")
        object.__setattr__(self, "patterns", tuple(self.patterns))

    @property
    def w_pass_deg(self) -> float:
        return 180.0 / self.n_sectors

    def gains_db(self, azimuth_deg) -> np.ndarray:
        """Gain of every sector toward each azimuth, shape ``(n_sectors, ...)``."""
        return np.stack([np.asarray(sector_gain_db(p, azimuth_deg)) for p in self.patterns])

    def serving_sector(self, azimuth_deg):
        """Index of the highest-gain sector; ties go to the lowest index."""
        return np.argmax(self.gains_db(azimuth_deg), axis=0)


def make_uniform_plan(n: int, peak_gain_dbi: float, kind: str = "rectangular") -> SectorPlan:
    """``n`` equal sectors with boresights ``k*360/n`` and half-width ``180/n``."""
    if isinstance(n, bool) or int(n) != n or not 1 <= n <= MAX_SECTORS:
        raise InvalidArgument(f"sector count must be an integer in [1, {MAX_SECTORS}], got {n}")
    n = int(n)
    width = 360.0 / n
    patterns = tuple(SectorPattern(k * width, 180.0 / n, peak_gain_dbi, kind) for k in range(n))
    return SectorPlan(n, patterns)
