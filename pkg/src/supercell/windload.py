"""Effective projected area (EPA) of lens and flat-panel antenna installations."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .antenna import (
    DEFAULT_ELEMENT_GAIN_DBI,
    LensModel,
    PanelArray,
    lens_diameter_for_gain,
    panel_elements_for_gain,
)
from .core import FT2_PER_M2, wavelength_m
from .errors import DomainError, InvalidArgument

# Three spheres around the mast, drag coefficient 0.5 each.
LENS_EPA_FACTOR = 4.71
# Per element, in units of wavelength squared.
PANEL_EPA_FACTOR = {"horizontal": 2.35, "vertical": 1.2}
DEFAULT_EPA_LIMIT_FT2 = 90.0

# Element layouts listed for the 2500 MHz comparison (vertical placement;
# horizontal placement uses the transpose).
REFERENCE_ARRAYS_2500 = {30: (56, 6), 28: (42, 4), 25: (32, 3), 23: (24, 2), 20: (18, 2)}

TABLE_COLUMNS = (
    "gain_dbi",
    "vertical_nv_nh",
    "epa_vertical_ft2",
    "horizontal_nv_nh",
    "epa_horizontal_ft2",
    "lens_d_lambda",
    "epa_lens_ft2",
)


@dataclass(frozen=True)
class EpaResult:
    area_m2: float

    @property
    def area_ft2(self) -> float:
        return self.area_m2 * FT2_PER_M2

    @classmethod
    def from_ft2(cls, area_ft2: float) -> "EpaResult":
        return cls(area_ft2 / FT2_PER_M2)


@dataclass(frozen=True)
class EpaBudget:
    limit_ft2: float = DEFAULT_EPA_LIMIT_FT2

    def __post_init__(self):
        if not self.limit_ft2 > 0:
            raise InvalidArgument(f"EPA limit must be > 0, got {self.limit_ft2}")


def epa_lens(diameter_m: float) -> EpaResult:
    """EPA of three spheres of the given physical diameter."""
    if not diameter_m > 0:
        raise InvalidArgument(f"lens diameter must be > 0, got {diameter_m}")
    return EpaResult(LENS_EPA_FACTOR * diameter_m**2)


def epa_panel(array: PanelArray, f_mhz: float) -> EpaResult:
    lam = wavelength_m(f_mhz)
    return EpaResult(PANEL_EPA_FACTOR[array.orientation] * array.n_v * array.n_h * lam**2)


def check_epa(result: EpaResult, budget: EpaBudget = EpaBudget()) -> tuple[bool, float]:
    """Return ``(passes, margin_ft2)``; margin is negative when over budget."""
    margin = budget.limit_ft2 - result.area_ft2
    return result.area_ft2 <= budget.limit_ft2, margin


@dataclass(frozen=True)
class EpaRow:
    gain_dbi: float
    vertical: tuple[int, int]
    epa_vertical_ft2: float
    horizontal: tuple[int, int]
    epa_horizontal_ft2: float
    lens_d_lambda: float | None
    epa_lens_ft2: float | None


def epa_comparison_table(
    gains,
    f_mhz: float = 2500.0,
    element_gain_dbi: float = DEFAULT_ELEMENT_GAIN_DBI,
    lens_model: LensModel | None = None,
    *,
    aspect: float = 9.3,
    arrays: dict | None = None,
) -> list[EpaRow]:
    """EPA of vertical panels, horizontal panels and a lens at equal gain.

    Panel layouts come from ``arrays`` (gain -> (n_v, n_h)) where given, else
    from :func:`panel_elements_for_gain`.  A gain outside the lens curve
    leaves that row's lens columns as ``None``.
    """
    lens_model = lens_model or LensModel()
    lam = wavelength_m(f_mhz)
    arrays = arrays or {}
    rows = []
    for gain in gains:
        gain = float(gain)
        if gain in arrays:
            n_v, n_h = arrays[gain]
        else:
            n_v, n_h = panel_elements_for_gain(gain, element_gain_dbi, aspect)
        vert = PanelArray(n_v, n_h, element_gain_dbi, "vertical")
        horiz = PanelArray(n_h, n_v, element_gain_dbi, "horizontal")
        try:
            d_lambda = lens_diameter_for_gain(gain, lens_model)
            lens_ft2 = epa_lens(d_lambda * lam).area_ft2
        except DomainError:
            d_lambda = lens_ft2 = None
        rows.append(
            EpaRow(
                gain_dbi=gain,
                vertical=(vert.n_v, vert.n_h),
                epa_vertical_ft2=epa_panel(vert, f_mhz).area_ft2,
                horizontal=(horiz.n_v, horiz.n_h),
                epa_horizontal_ft2=epa_panel(horiz, f_mhz).area_ft2,
                lens_d_lambda=d_lambda,
                epa_lens_ft2=lens_ft2,
            )
        )
    return rows


def _g(x):
    return "" if x is None else f"{x:.6g}"


def epa_table_csv(rows: list[EpaRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for r in rows:
        writer.writerow(
            [
                _g(r.gain_dbi),
                f"{r.vertical[0]};{r.vertical[1]}",
                _g(r.epa_vertical_ft2),
                f"{r.horizontal[0]};{r.horizontal[1]}",
                _g(r.epa_horizontal_ft2),
                _g(r.lens_d_lambda),
                _g(r.epa_lens_ft2),
            ]
        )
    return buf.getvalue()
