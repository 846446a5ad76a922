"""Least-squares tuning of SPM coefficients against drive-test measurements,
error statistics, and the exponential azimuth-spread-vs-pathloss fit."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .coverage import ElevationGrid, extract_profile
from .errors import InvalidArgument, NumericalError
from .propagation import (
    SPM_COEFFICIENTS,
    PathContext,
    SpmParams,
    profile_diffraction_db,
    profile_los,
    spm_pathloss_db,
    tuned_spm,
)

# Regression columns, in SpmParams order.  f_clutter is data, not a coefficient.
REGRESSORS = tuple(c for c in SPM_COEFFICIENTS if c != "f_clutter")
DEFAULT_FIXED = frozenset({"k4", "k_clutter", "k_hill_los"})

CSV_REQUIRED = ("h_tx_m", "h_rx_m", "f_mhz")
CSV_OPTIONAL = ("x_m", "y_m", "d_m", "rx_power_dbm", "measured_pl_db", "los", "l_diff_db")
# Link-budget constants that may be given as "# key: value" header comments.
HEADER_CONSTANTS = ("tx_power_dbm", "tx_gain_dbi", "rx_gain_dbi")


@dataclass(frozen=True)
class MeasurementRecord:
    """One drive-test sample.  Either ``measured_pl_db`` or ``rx_power_dbm``
    (plus link constants at resolution time) must be present."""

    h_tx_m: float
    h_rx_m: float
    f_mhz: float
    x_m: float | None = None
    y_m: float | None = None
    d_m: float | None = None
    rx_power_dbm: float | None = None
    measured_pl_db: float | None = None
    is_los: bool | None = None
    l_diff_db: float | None = None

    @property
    def resolved(self) -> bool:
        return (
            self.d_m is not None
            and self.d_m > 0
            and self.is_los is not None
            and self.l_diff_db is not None
            and self.measured_pl_db is not None
            and math.isfinite(self.measured_pl_db)
        )

    def context(self) -> PathContext:
        if not self.resolved:
            raise InvalidArgument("measurement record is not resolved (distance, LOS, L_diff, PL)")
        return PathContext(self.d_m, self.h_tx_m, self.h_rx_m, self.is_los,
                           0.0 if self.is_los else self.l_diff_db)


def resolve_record(
    rec: MeasurementRecord,
    site_xy=None,
    grid: ElevationGrid | None = None,
    link: dict | None = None,
) -> MeasurementRecord:
    """Fill in distance, LOS, diffraction and measured pathloss.

    Distance comes from ``site_xy`` when absent; LOS and L_diff from a
    terrain profile on ``grid``; pathloss from ``rx_power_dbm`` and the
    ``link`` constants (tx power and antenna gains).
    """
    changes = {}
    d = rec.d_m
    if d is None:
        if site_xy is None or rec.x_m is None or rec.y_m is None:
            raise InvalidArgument("record has no d_m and no site/position to derive it")
        d = math.hypot(rec.x_m - site_xy[0], rec.y_m - site_xy[1])
        changes["d_m"] = d
    if not d > 0:
        raise InvalidArgument(f"record distance must be > 0, got {d}")
    if rec.is_los is None or (rec.is_los is False and rec.l_diff_db is None):
        if grid is None or site_xy is None or rec.x_m is None or rec.y_m is None:
            raise InvalidArgument("record LOS/L_diff unknown and no terrain grid given")
        prof = extract_profile(grid, site_xy, (rec.x_m, rec.y_m), h_tx_m=rec.h_tx_m, h_rx_m=rec.h_rx_m)
        los = profile_los(prof) if rec.is_los is None else rec.is_los
        changes["is_los"] = los
        changes["l_diff_db"] = 0.0 if los else profile_diffraction_db(prof, rec.f_mhz)
    elif rec.l_diff_db is None:
        changes["l_diff_db"] = 0.0
    if rec.measured_pl_db is None:
        if rec.rx_power_dbm is None:
            raise InvalidArgument("record has neither measured_pl_db nor rx_power_dbm")
        link = link or {}
        missing = [k for k in ("tx_power_dbm",) if k not in link]
        if missing:
            raise InvalidArgument(f"rx_power_dbm needs link constant(s): {missing}")
        changes["measured_pl_db"] = (
            link["tx_power_dbm"] + link.get("tx_gain_dbi", 0.0) + link.get("rx_gain_dbi", 0.0)
            - rec.rx_power_dbm
        )
    return replace(rec, **changes) if changes else rec


def feature_vector(rec: MeasurementRecord, f_clutter: float = 3.0) -> np.ndarray:
    """Regressors for :data:`REGRESSORS`; the LOS flag selects which
    intercept/slope pair (and the hilly-LOS column) is active."""
    ctx = rec.context()
    log_d = math.log10(ctx.d_m)
    log_h = math.log10(ctx.h_tx_m)
    los = 1.0 if ctx.is_los else 0.0
    nlos = 1.0 - los
    return np.array([
        los, los * log_d,
        nlos, nlos * log_d,
        log_h,
        ctx.l_diff_db,
        log_d * log_h,
        ctx.h_rx_m,
        math.log10(ctx.h_rx_m),
        f_clutter,
        los,
    ])


@dataclass(frozen=True)
class ErrorStats:
    mean_db: float
    std_db: float
    rms_db: float
    n: int


@dataclass(frozen=True)
class FitResult:
    params: SpmParams
    fixed_mask: frozenset
    stats: ErrorStats
    n_points: int


def error_stats(predicted, measured) -> ErrorStats:
    """Mean, population standard deviation and RMS of ``measured - predicted``."""
    p = np.asarray(predicted, dtype=float)
    m = np.asarray(measured, dtype=float)
    if p.shape != m.shape:
        raise InvalidArgument(f"length mismatch: {p.size} predictions vs {m.size} measurements")
    if p.size < 1:
        raise InvalidArgument("error statistics need at least one pair")
    r = m - p
    mean = float(r.mean())
    return ErrorStats(mean, float(r.std()), float(np.sqrt(np.mean(r * r))), int(r.size))


def _collinear_columns(a: np.ndarray, names, tol):
    """Names of columns taking part in a null-space direction of ``a``."""
    _, s, vt = np.linalg.svd(a, full_matrices=False)
    null = vt[s <= tol]
    involved = set()
    for v in null:
        involved.update(names[j] for j in np.flatnonzero(np.abs(v) > 1e-6))
    return [n for n in names if n in involved]


def fit_spm(
    records,
    fixed_mask=DEFAULT_FIXED,
    fixed_values: SpmParams | None = None,
) -> FitResult:
    """Ordinary least squares over the free SPM coefficients.

    ``fixed_mask`` names coefficients held at their ``fixed_values``
    setting; ``f_clutter`` is always taken from ``fixed_values``.  A
    rank-deficient design raises :class:`NumericalError` naming the
    collinear columns.
    """
    records = list(records)
    if fixed_values is None:
        fixed_values = tuned_spm(2500)
    fixed = frozenset(fixed_mask)
    unknown = fixed - set(REGRESSORS)
    if unknown:
        raise InvalidArgument(f"unknown coefficient(s) in fixed mask: {sorted(unknown)}")
    free = [c for c in REGRESSORS if c not in fixed]
    if len(records) < len(free):
        raise InvalidArgument(f"{len(records)} records cannot determine {len(free)} free coefficients")
    x = np.array([feature_vector(r, fixed_values.f_clutter) for r in records])
    y = np.array([r.measured_pl_db for r in records], dtype=float)
    base = fixed_values.to_dict()
    theta_fixed = np.array([base[c] if c in fixed else 0.0 for c in REGRESSORS])
    target = y - x @ theta_fixed
    solution = dict(base)
    if free:
        idx = [REGRESSORS.index(c) for c in free]
        a = x[:, idx]
        coef, _, rank, sv = np.linalg.lstsq(a, target, rcond=None)
        tol = sv.max() * max(a.shape) * np.finfo(float).eps if sv.size else 0.0
        if rank < len(free):
            cols = _collinear_columns(a, free, tol)
            raise NumericalError(f"design matrix is rank deficient; collinear columns: {', '.join(cols)}")
        if not np.all(np.isfinite(coef)):
            raise NumericalError("least-squares solution is not finite")
        solution.update({c: float(v) for c, v in zip(free, coef)})
    params = SpmParams(**solution)
    predicted = [spm_pathloss_db(params, r.context()) for r in records]
    return FitResult(params, fixed, error_stats(predicted, y), len(records))


def fit_exponential(xs, ys) -> tuple[float, float]:
    """Fit ``y = a * exp(b * x)`` by least squares on ``ln y``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise InvalidArgument("need at least two (x, y) pairs of equal length")
    if np.any(y <= 0):
        raise InvalidArgument("all y values must be > 0 for an exponential fit")
    b, ln_a = np.polyfit(x, np.log(y), 1)
    return float(np.exp(ln_a)), float(b)


# --------------------------------------------------------------------------
# measurement CSV


def _opt_float(row, key):
    v = row.get(key)
    if v is None or v.strip() == "":
        return None
    return float(v)


def read_measurements(path) -> tuple[list[MeasurementRecord], dict]:
    """Parse a measurement CSV.  Leading ``# key: value`` lines carry link
    constants; the first non-comment line is the column header."""
    path = Path(path)
    constants = {}
    lines = path.read_text().splitlines()
    body = []
    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if s.startswith("#"):
            if ":" in s:
                key, _, val = s[1:].partition(":")
                key = key.strip()
                if key in HEADER_CONSTANTS:
                    try:
                        constants[key] = float(val)
                    except ValueError:
                        raise InvalidArgument(f"{path}:{lineno}: bad value for {key}") from None
            continue
        if s:
            body.append((lineno, line))
    if not body:
        raise InvalidArgument(f"{path}: no header row")
    reader = csv.DictReader([b[1] for b in body])
    cols = set(reader.fieldnames or [])
    missing = [c for c in CSV_REQUIRED if c not in cols]
    if missing:
        raise InvalidArgument(f"{path}: missing column(s): {', '.join(missing)}")
    extra = cols - set(CSV_REQUIRED) - set(CSV_OPTIONAL)
    if extra:
        raise InvalidArgument(f"{path}: unknown column(s): {', '.join(sorted(extra))}")
    if "rx_power_dbm" not in cols and "measured_pl_db" not in cols:
        raise InvalidArgument(f"{path}: need rx_power_dbm or measured_pl_db column")
    records = []
    for (lineno, _), row in zip(body[1:], reader):
        try:
            los = _opt_float(row, "los")
            records.append(
                MeasurementRecord(
                    h_tx_m=float(row["h_tx_m"]),
                    h_rx_m=float(row["h_rx_m"]),
                    f_mhz=float(row["f_mhz"]),
                    x_m=_opt_float(row, "x_m"),
                    y_m=_opt_float(row, "y_m"),
                    d_m=_opt_float(row, "d_m"),
                    rx_power_dbm=_opt_float(row, "rx_power_dbm"),
                    measured_pl_db=_opt_float(row, "measured_pl_db"),
                    is_los=None if los is None else bool(int(los)),
                    l_diff_db=_opt_float(row, "l_diff_db"),
                )
            )
        except (TypeError, ValueError) as exc:
            raise InvalidArgument(f"{path}:{lineno}: {exc}") from None
    return records, constants


def write_measurements(path, records, constants=None) -> None:
    cols = ["x_m", "y_m", "d_m", "measured_pl_db", "rx_power_dbm", "h_tx_m", "h_rx_m", "f_mhz", "los", "l_diff_db"]
    with open(path, "w", newline="") as fh:
        for k, v in (constants or {}).items():
            fh.write(f"# {k}: {float(v)!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            vals = {
                "x_m": r.x_m, "y_m": r.y_m, "d_m": r.d_m, "measured_pl_db": r.measured_pl_db,
                "rx_power_dbm": r.rx_power_dbm, "h_tx_m": r.h_tx_m, "h_rx_m": r.h_rx_m,
                "f_mhz": r.f_mhz, "los": None if r.is_los is None else int(r.is_los),
                "l_diff_db": r.l_diff_db,
            }
            w.writerow(["" if vals[c] is None else repr(float(vals[c])) if c != "los" else vals[c]
                        for c in cols])
