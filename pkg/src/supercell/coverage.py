"""Terrain rasters, RSRP heatmaps and coverage-area statistics."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .antenna import SectorPlan
from .errors import GridParseError, InvalidArgument
from .propagation import (
    PathContext,
    SpmParams,
    TerrainProfile,
    profile_diffraction_db,
    profile_los,
    spm_pathloss_db,
)

HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")
DEFAULT_THRESHOLDS_DBM = tuple(range(-120, -79, 5))
PROFILE_MAX_SAMPLES = 512
# Effective Tx height never drops below this fraction of the tower height.
MIN_EFFECTIVE_HEIGHT_FRACTION = 0.1
RATIO_COLUMNS = ("rsrp_threshold_dbm", "sc_km2", "mc_km2", "sc_mc_ratio")


@dataclass(frozen=True, eq=False)
class ElevationGrid:
    """Planar raster; row 0 is the northern edge, as in ESRI ASCII grids.

    ``origin_x``/``origin_y`` give the lower-left corner of the lower-left cell.
    """

    n_cols: int
    n_rows: int
    cell_size_m: float
    origin_x: float
    origin_y: float
    nodata_value: float
    elevations: np.ndarray

    def __post_init__(self):
        z = np.array(self.elevations, dtype=float)
        if z.shape != (self.n_rows, self.n_cols):
            raise InvalidArgument(
                f"elevation array shape {z.shape} does not match {self.n_rows} x {self.n_cols}"
            )
        if not self.cell_size_m > 0:
            raise InvalidArgument(f"cell size must be > 0, got {self.cell_size_m}")
        z.setflags(write=False)
        object.__setattr__(self, "elevations", z)

    @property
    def valid(self) -> np.ndarray:
        return self.elevations != self.nodata_value

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax)"""
        return (
            self.origin_x,
            self.origin_y,
            self.origin_x + self.n_cols * self.cell_size_m,
            self.origin_y + self.n_rows * self.cell_size_m,
        )

    def contains(self, x: float, y: float) -> bool:
        x0, y0, x1, y1 = self.extent
        return x0 <= x <= x1 and y0 <= y <= y1

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Projected x, y of every cell centre, each of shape (n_rows, n_cols)."""
        cs = self.cell_size_m
        xs = self.origin_x + (np.arange(self.n_cols) + 0.5) * cs
        ys = self.origin_y + (self.n_rows - np.arange(self.n_rows) - 0.5) * cs
        return np.meshgrid(xs, ys)

    def same_geometry(self, other) -> bool:
        return (
            self.n_cols == other.n_cols
            and self.n_rows == other.n_rows
            and self.cell_size_m == other.cell_size_m
            and self.origin_x == other.origin_x
            and self.origin_y == other.origin_y
        )

    def sample(self, x, y) -> np.ndarray:
        """Bilinear interpolation between cell centres; NaN where a NODATA cell
        contributes.  Points in the outer half-cell are clamped to the edge."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        cs = self.cell_size_m
        col = (x - self.origin_x) / cs - 0.5
        row = (self.origin_y + self.n_rows * cs - y) / cs - 0.5
        col = np.clip(col, 0.0, self.n_cols - 1)
        row = np.clip(row, 0.0, self.n_rows - 1)
        c0 = np.minimum(np.floor(col).astype(int), max(self.n_cols - 2, 0))
        r0 = np.minimum(np.floor(row).astype(int), max(self.n_rows - 2, 0))
        c1 = np.minimum(c0 + 1, self.n_cols - 1)
        r1 = np.minimum(r0 + 1, self.n_rows - 1)
        fc = col - c0
        fr = row - r0
        z = self.elevations
        z00, z01, z10, z11 = z[r0, c0], z[r0, c1], z[r1, c0], z[r1, c1]
        bad = np.zeros(np.shape(z00), dtype=bool)
        for corner, weight in ((z00, (1 - fr) * (1 - fc)), (z01, (1 - fr) * fc),
                               (z10, fr * (1 - fc)), (z11, fr * fc)):
            bad |= (corner == self.nodata_value) & (weight > 0)
        # Nested lerps reproduce constant fields exactly.
        top = z00 + fc * (z01 - z00)
        bottom = z10 + fc * (z11 - z10)
        out = top + fr * (bottom - top)
        out = np.where(bad, np.nan, out)
        return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# ESRI ASCII grid I/O


def _fmt(v: float) -> str:
    v = float(v)
    return repr(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def parse_grid(text: str) -> ElevationGrid:
    """Parse an ESRI ASCII grid (header keys in any letter case)."""
    lines = text.splitlines()
    header = {}
    i = 0
    while i < len(lines) and len(header) < len(HEADER_KEYS):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        parts = line.split()
        key = parts[0].lower()
        if key not in HEADER_KEYS:
            raise GridParseError(f"unexpected header key {parts[0]!r}", line=i)
        if key in header:
            raise GridParseError(f"duplicate header key {parts[0]!r}", line=i)
        if len(parts) != 2:
            raise GridParseError(f"header {parts[0]!r} needs exactly one value", line=i)
        try:
            header[key] = float(parts[1])
        except ValueError:
            raise GridParseError(f"non-numeric header value {parts[1]!r}", line=i) from None
    missing = [k for k in HEADER_KEYS if k not in header]
    if missing:
        raise GridParseError(f"missing header key(s): {', '.join(missing)}", line=i or None)
    n_cols, n_rows = header["ncols"], header["nrows"]
    if not (n_cols.is_integer() and n_rows.is_integer() and n_cols > 0 and n_rows > 0):
        raise GridParseError("ncols and nrows must be positive integers")
    n_cols, n_rows = int(n_cols), int(n_rows)
    rows = []
    for lineno in range(i, len(lines)):
        line = lines[lineno].strip()
        if not line:
            continue
        try:
            vals = [float(v) for v in line.split()]
        except ValueError:
            raise GridParseError("non-numeric elevation value", line=lineno + 1) from None
        if len(vals) != n_cols:
            raise GridParseError(f"expected {n_cols} values, found {len(vals)}", line=lineno + 1)
        rows.append(vals)
    if len(rows) != n_rows:
        raise GridParseError(f"expected {n_rows} data rows, found {len(rows)}", line=len(lines))
    if not header["cellsize"] > 0:
        raise GridParseError("cellsize must be positive")
    return ElevationGrid(
        n_cols=n_cols,
        n_rows=n_rows,
        cell_size_m=header["cellsize"],
        origin_x=header["xllcorner"],
        origin_y=header["yllcorner"],
        nodata_value=header["nodata_value"],
        elevations=np.array(rows, dtype=float),
    )


def format_grid(grid: ElevationGrid, values=None, fmt=_fmt) -> str:
    """Canonical ESRI ASCII text.  Values are written in shortest round-trip form."""
    values = grid.elevations if values is None else values
    out = [
        f"ncols {grid.n_cols}",
        f"nrows {grid.n_rows}",
        f"xllcorner {_fmt(grid.origin_x)}",
        f"yllcorner {_fmt(grid.origin_y)}",
        f"cellsize {_fmt(grid.cell_size_m)}",
        f"NODATA_value {_fmt(grid.nodata_value)}",
    ]
    for row in values:
        out.append(" ".join(fmt(v) for v in row))
    return "\n".join(out) + "\n"


def load_grid(source) -> ElevationGrid:
    """Read a grid from a path or a text stream."""
    if hasattr(source, "read"):
        return parse_grid(source.read())
    return parse_grid(Path(source).read_text())


def save_grid(grid: ElevationGrid, sink) -> None:
    text = format_grid(grid)
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        Path(sink).write_text(text)


# --------------------------------------------------------------------------
# profiles


def extract_profile(
    grid: ElevationGrid,
    start,
    end,
    step_m: float | None = None,
    h_tx_m: float = 1.0,
    h_rx_m: float = 1.0,
) -> TerrainProfile:
    """Bilinear terrain profile along the segment ``start -> end`` (x, y in metres).

    Samples are evenly spaced at no more than ``step_m``; both endpoints are
    included.  Samples touching NODATA cells are NaN.
    """
    (x0, y0), (x1, y1) = start, end
    if not (grid.contains(x0, y0) and grid.contains(x1, y1)):
        raise InvalidArgument("profile endpoints must lie inside the grid")
    length = math.hypot(x1 - x0, y1 - y0)
    if length <= 0:
        raise InvalidArgument("profile endpoints coincide")
    if step_m is None:
        step_m = max(grid.cell_size_m, length / PROFILE_MAX_SAMPLES)
    if not step_m > 0:
        raise InvalidArgument(f"profile step must be > 0, got {step_m}")
    n_seg = max(1, math.ceil(length / step_m - 1e-9))
    t = np.linspace(0.0, 1.0, n_seg + 1)
    z = grid.sample(x0 + t * (x1 - x0), y0 + t * (y1 - y0))
    return TerrainProfile(t * length, np.atleast_1d(z), h_tx_m, h_rx_m)


# --------------------------------------------------------------------------
# RSRP maps


@dataclass(frozen=True)
class Site:
    x: float
    y: float
    tower_height_m: float
    plan: SectorPlan
    tx_power_dbm: float
    f_mhz: float
    rx_height_m: float
    spm: SpmParams

    def __post_init__(self):
        if not self.tower_height_m > 0:
            raise InvalidArgument(f"tower height must be > 0, got {self.tower_height_m}")
        if not self.rx_height_m > 0:
            raise InvalidArgument(f"receiver height must be > 0, got {self.rx_height_m}")
        if not self.f_mhz > 0:
            raise InvalidArgument(f"frequency must be > 0, got {self.f_mhz}")


@dataclass(frozen=True, eq=False)
class RsrpMap:
    """RSRP raster on the geometry of ``grid``; NaN and -1 mark NODATA cells."""

    grid: ElevationGrid
    rsrp_dbm: np.ndarray
    serving_sector: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.rsrp_dbm)

    @property
    def cell_area_km2(self) -> float:
        return self.grid.cell_size_m**2 / 1e6


def bearing_deg(dx, dy):
    """Azimuth clockwise from north (+y), in [0, 360)."""
    return np.degrees(np.arctan2(dx, dy)) % 360.0


def _rsrp_rows(args):
    grid, site, rows = args
    xs, ys = grid.cell_centers()
    z_site = grid.sample(site.x, site.y)
    valid = grid.valid
    n_cols = grid.n_cols
    rsrp = np.full((len(rows), n_cols), np.nan)
    serving = np.full((len(rows), n_cols), -1, dtype=int)
    floor_h = MIN_EFFECTIVE_HEIGHT_FRACTION * site.tower_height_m
    for k, r in enumerate(rows):
        dx = xs[r] - site.x
        dy = ys[r] - site.y
        az = bearing_deg(dx, dy)
        gains = site.plan.gains_db(az)
        best = np.argmax(gains, axis=0)
        for c in range(n_cols):
            if not valid[r, c]:
                continue
            x, y = xs[r, c], ys[r, c]
            dist = math.hypot(dx[c], dy[c])
            z_cell = grid.elevations[r, c]
            if dist < grid.cell_size_m:
                is_los, l_diff = True, 0.0
                dist = grid.cell_size_m
            else:
                prof = extract_profile(
                    grid, (site.x, site.y), (x, y), h_tx_m=site.tower_height_m, h_rx_m=site.rx_height_m
                )
                is_los = profile_los(prof)
                l_diff = 0.0 if is_los else profile_diffraction_db(prof, site.f_mhz)
            h_eff = max(site.tower_height_m + z_site - z_cell, floor_h)
            ctx = PathContext(dist, h_eff, site.rx_height_m, is_los, l_diff)
            pl = spm_pathloss_db(site.spm, ctx)
            s = int(best[c])
            rsrp[k, c] = site.tx_power_dbm + gains[s, c] - pl
            serving[k, c] = s
    return rsrp, serving


def compute_rsrp_map(grid: ElevationGrid, site: Site, workers: int | None = None) -> RsrpMap:
    """Per-cell RSRP = tx power + serving-sector gain - SPM pathloss.

    ``workers > 1`` splits the raster into row blocks evaluated in separate
    processes; results are identical to the serial path.
    """
    if not grid.contains(site.x, site.y):
        raise InvalidArgument(f"site ({site.x}, {site.y}) lies outside the grid")
    if np.isnan(grid.sample(site.x, site.y)):
        raise InvalidArgument("site sits on NODATA terrain")
    rows = list(range(grid.n_rows))
    if workers is None or workers <= 1:
        rsrp, serving = _rsrp_rows((grid, site, rows))
    else:
        blocks = [b.tolist() for b in np.array_split(rows, workers) if len(b)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_rsrp_rows, [(grid, site, b) for b in blocks]))
        rsrp = np.vstack([p[0] for p in parts])
        serving = np.vstack([p[1] for p in parts])
    return RsrpMap(grid, rsrp, serving)


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


def coverage_area_km2(rsrp_map: RsrpMap, threshold_dbm: float) -> float:
    covered = rsrp_map.valid & (np.nan_to_num(rsrp_map.rsrp_dbm, nan=-np.inf) >= threshold_dbm)
    return int(covered.sum()) * rsrp_map.cell_area_km2


def coverage_stats(rsrp_map: RsrpMap, thresholds=DEFAULT_THRESHOLDS_DBM) -> list[tuple[float, float]]:
    return [(float(t), coverage_area_km2(rsrp_map, t)) for t in thresholds]


@dataclass(frozen=True)
class RatioRow:
    threshold_dbm: float
    area_sc_km2: float
    area_mc_km2: float
    ratio: float


def coverage_ratio_table(map_sc: RsrpMap, map_mc: RsrpMap, thresholds=DEFAULT_THRESHOLDS_DBM) -> list[RatioRow]:
    """SuperCell / macrocell coverage area per RSRP threshold (``inf`` if MC covers nothing)."""
    if not map_sc.grid.same_geometry(map_mc.grid):
        raise InvalidArgument("coverage maps do not share grid geometry")
    rows = []
    for t in thresholds:
        a_sc = coverage_area_km2(map_sc, t)
        a_mc = coverage_area_km2(map_mc, t)
        ratio = math.inf if a_mc == 0 else a_sc / a_mc
        rows.append(RatioRow(float(t), a_sc, a_mc, ratio))
    return rows


def ratio_table_csv(rows: list[RatioRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RATIO_COLUMNS)
    for r in rows:
        w.writerow([f"{r.threshold_dbm:.6g}", f"{r.area_sc_km2:.6g}", f"{r.area_mc_km2:.6g}",
                    "inf" if math.isinf(r.ratio) else f"{r.ratio:.6g}"])
    return buf.getvalue()


# --------------------------------------------------------------------------
# raster output


def format_rsrp_grid(rsrp_map: RsrpMap) -> str:
    """ASCII grid of RSRP in dBm with one decimal; NODATA cells keep the sentinel."""
    grid = rsrp_map.grid
    nodata = _fmt(grid.nodata_value)

    def cell(v):
        return nodata if math.isnan(v) else f"{v:.1f}"

    return format_grid(grid, rsrp_map.rsrp_dbm, fmt=cell)


def save_rsrp_grid(rsrp_map: RsrpMap, path) -> None:
    Path(path).write_text(format_rsrp_grid(rsrp_map))


def load_rsrp_map(source) -> RsrpMap:
    """Read an RSRP raster written by :func:`save_rsrp_grid`."""
    grid = load_grid(source)
    rsrp = np.where(grid.valid, grid.elevations, np.nan)
    serving = np.where(grid.valid, 0, -1)
    return RsrpMap(grid, rsrp, serving)


def rsrp_to_pgm(rsrp_map: RsrpMap) -> bytes:
    """8-bit binary PGM: gray = round(255 * (rsrp - min) / (max - min)).

    NODATA cells are 0.  The comment line records the min/max used.
    """
    v = rsrp_map.rsrp_dbm
    ok = rsrp_map.valid
    if ok.any():
        lo, hi = float(v[ok].min()), float(v[ok].max())
    else:
        lo = hi = 0.0
    span = hi - lo
    gray = np.zeros(v.shape, dtype=np.uint8)
    if span > 0:
        gray[ok] = np.round(255.0 * (v[ok] - lo) / span).astype(np.uint8)
    else:
        gray[ok] = 255
    h, w = v.shape
    header = f"P5\n# rsrp_dbm min={lo:.1f} max={hi:.1f} nodata=0\n{w} {h}\n255\n"
    return header.encode("ascii") + gray.tobytes()


def summary(rsrp_map: RsrpMap, threshold_dbm: float | None = None) -> dict:
    v = rsrp_map.rsrp_dbm[rsrp_map.valid]
    out = {
        "cells": int(v.size),
        "min_rsrp_dbm": float(v.min()) if v.size else math.nan,
        "max_rsrp_dbm": float(v.max()) if v.size else math.nan,
    }
    if threshold_dbm is not None:
        area = coverage_area_km2(rsrp_map, threshold_dbm)
        total = v.size * rsrp_map.cell_area_km2
        out["threshold_dbm"] = float(threshold_dbm)
        out["covered_km2"] = area
        out["covered_pct"] = 100.0 * area / total if total else 0.0
    return out
