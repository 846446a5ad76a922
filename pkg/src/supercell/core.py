"""Unit conversions, link-budget arithmetic, MAPL and the beamwidth-gain relation.

All dB arithmetic is base 10 and absolute powers are referenced to 1 mW.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidArgument

BOLTZMANN = 1.380649e-23  # J/K
T0_K = 290.0
SPEED_OF_LIGHT = 299_792_458.0  # m/s
FT2_PER_M2 = 10.7639104

# Chosen so a 28 dBi antenna has a 6 degree 3-dB beamwidth.
DEFAULT_X_ETA = 22_716.0


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


def wavelength_m(f_mhz: float) -> float:
    if f_mhz <= 0:
        raise InvalidArgument(f"frequency must be positive, got {f_mhz} MHz")
    return SPEED_OF_LIGHT / (f_mhz * 1e6)


def _check_finite(name, value):
    if not math.isfinite(value):
        raise InvalidArgument(f"{name} must be finite, got {value}")


@dataclass(frozen=True)
class LinkBudgetInput:
    """One direction of a cellular link budget (all gains/losses in dB)."""

    tx_power_dbm: float
    tx_gain_dbi: float
    rx_gain_dbi: float
    pathloss_db: float
    bandwidth_hz: float
    noise_figure_db: float
    temperature_k: float = T0_K

    def __post_init__(self):
        for name in ("tx_power_dbm", "tx_gain_dbi", "rx_gain_dbi", "pathloss_db"):
            _check_finite(name, getattr(self, name))
        if not self.bandwidth_hz > 0:
            raise InvalidArgument(f"bandwidth_hz must be > 0, got {self.bandwidth_hz}")
        if not self.temperature_k > 0:
            raise InvalidArgument(f"temperature_k must be > 0, got {self.temperature_k}")
        if not self.noise_figure_db >= 0:
            raise InvalidArgument(f"noise_figure_db must be >= 0, got {self.noise_figure_db}")


@dataclass(frozen=True)
class LinkBudgetResult:
    rx_power_dbm: float
    noise_power_dbm: float
    snr_db: float


@dataclass(frozen=True)
class BeamwidthModel:
    """Beamwidth-gain model ``BW = sqrt(x_eta / G)`` with ``x_eta`` in deg^2."""

    x_eta: float = DEFAULT_X_ETA

    def __post_init__(self):
        if not self.x_eta > 0:
            raise InvalidArgument(f"x_eta must be > 0, got {self.x_eta}")


def noise_power_dbm(bandwidth_hz: float, temperature_k: float = T0_K) -> float:
    """Thermal noise power ``k*T*B`` in dBm."""
    if not bandwidth_hz > 0:
        raise InvalidArgument(f"bandwidth must be > 0 Hz, got {bandwidth_hz}")
    if not temperature_k > 0:
        raise InvalidArgument(f"temperature must be > 0 K, got {temperature_k}")
    return 10.0 * math.log10(BOLTZMANN * temperature_k * bandwidth_hz / 1e-3)


def evaluate_link_budget(budget: LinkBudgetInput) -> LinkBudgetResult:
    rx = budget.tx_power_dbm + budget.tx_gain_dbi - budget.pathloss_db + budget.rx_gain_dbi
    noise = noise_power_dbm(budget.bandwidth_hz, budget.temperature_k)
    return LinkBudgetResult(
        rx_power_dbm=rx,
        noise_power_dbm=noise,
        snr_db=rx - noise - budget.noise_figure_db,
    )


def mapl_db(budget: LinkBudgetInput, snr_min_db: float) -> float:
    """Maximum allowable path loss: the pathloss at which SNR equals ``snr_min_db``.

    ``budget.pathloss_db`` is ignored.
    """
    _check_finite("snr_min_db", snr_min_db)
    noise = noise_power_dbm(budget.bandwidth_hz, budget.temperature_k)
    return (
        budget.tx_power_dbm
        + budget.tx_gain_dbi
        + budget.rx_gain_dbi
        - noise
        - budget.noise_figure_db
        - snr_min_db
    )


def beamwidth_from_gain(gain_dbi: float, model: BeamwidthModel = BeamwidthModel()) -> float:
    """3-dB beamwidth in degrees for a circularly symmetric antenna of peak gain ``gain_dbi``."""
    _check_finite("gain_dbi", gain_dbi)
    return math.sqrt(model.x_eta / db_to_linear(gain_dbi))


def gain_from_beamwidth(beamwidth_deg: float, model: BeamwidthModel = BeamwidthModel()) -> float:
    """Inverse of :func:`beamwidth_from_gain`."""
    if not beamwidth_deg > 0:
        raise InvalidArgument(f"beamwidth must be > 0 deg, got {beamwidth_deg}")
    return 10.0 * math.log10(model.x_eta / beamwidth_deg**2)
