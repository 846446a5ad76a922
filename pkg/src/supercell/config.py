"""Run configuration documents for the command-line tools.

A config is a JSON object with up to five sections::

    {
      "spm":      {"band": "2500", "k3": -9.02, ...},
      "site":     {"x_m": ..., "y_m": ..., "tower_height_m": ..., "tx_power_dbm": ...,
                   "f_mhz": ..., "rx_height_m": ...},
      "plan":     {"n_sectors": 36, "peak_gain_dbi": 28.0, "kind": "rectangular"},
      "capacity": {"sigma_deg": ..., "bandwidth_hz": ..., "total_cnr_db": ..., "n_max": ...},
      "budget":   {"epa_limit_ft2": 90.0}
    }

``spm.band`` picks a tuned coefficient set; any coefficient listed beside it
overrides that set.  Unknown sections or keys are rejected.  Command-line
flags take precedence over config values, which take precedence over the
defaults below.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from .antenna import make_uniform_plan
from .capacity import SectorCapacityInput
from .coverage import Site
from .errors import InvalidArgument
from .propagation import SPM_COEFFICIENTS, SpmParams, tuned_spm
from .windload import EpaBudget


@dataclass
class SiteSection:
    x_m: float | None = None
    y_m: float | None = None
    tower_height_m: float = 250.0
    tx_power_dbm: float = 15.0
    f_mhz: float = 2500.0
    rx_height_m: float = 2.0


@dataclass
class PlanSection:
    n_sectors: int = 36
    peak_gain_dbi: float = 28.0
    kind: str = "rectangular"


@dataclass
class CapacitySection:
    sigma_deg: float = 2.0
    bandwidth_hz: float = 20e6
    total_cnr_db: float = 20.0
    n_max: int = 36


@dataclass
class BudgetSection:
    epa_limit_ft2: float = 90.0


@dataclass
class RunConfig:
    spm: dict = field(default_factory=lambda: {"band": "2500"})
    site: SiteSection = field(default_factory=SiteSection)
    plan: PlanSection = field(default_factory=PlanSection)
    capacity: CapacitySection = field(default_factory=CapacitySection)
    budget: BudgetSection = field(default_factory=BudgetSection)

    def spm_params(self) -> SpmParams:
        spm = dict(self.spm)
        band = spm.pop("band", None)
        if band is None:
            missing = [c for c in ("k1_los", "k2_los", "k1_nlos", "k2_nlos", "k3", "k4", "k5", "k6", "k7")
                       if c not in spm]
            if missing:
                raise InvalidArgument(f"spm: without 'band', coefficients are required: {missing}")
            return SpmParams(**spm)
        return tuned_spm(band).replace(**spm)

    def build_site(self, grid=None) -> Site:
        s = self.site
        x, y = s.x_m, s.y_m
        if x is None or y is None:
            if grid is None:
                raise InvalidArgument("site: x_m and y_m are required")
            x0, y0, x1, y1 = grid.extent
            x = (x0 + x1) / 2 if x is None else x
            y = (y0 + y1) / 2 if y is None else y
        plan = make_uniform_plan(self.plan.n_sectors, self.plan.peak_gain_dbi, self.plan.kind)
        return Site(x, y, s.tower_height_m, plan, s.tx_power_dbm, s.f_mhz, s.rx_height_m, self.spm_params())

    def capacity_input(self, n_sectors: int | None = None) -> SectorCapacityInput:
        c = self.capacity
        return SectorCapacityInput(n_sectors or c.n_max, c.bandwidth_hz, c.sigma_deg, c.total_cnr_db)

    def epa_budget(self) -> EpaBudget:
        return EpaBudget(self.budget.epa_limit_ft2)

    def validate(self) -> "RunConfig":
        """Check every section against its owning type before anything runs."""
        self.spm_params()
        make_uniform_plan(self.plan.n_sectors, self.plan.peak_gain_dbi, self.plan.kind)
        self.capacity_input()
        self.epa_budget()
        s = self.site
        for name in ("tower_height_m", "f_mhz", "rx_height_m"):
            if not getattr(s, name) > 0:
                raise InvalidArgument(f"site.{name} must be > 0")
        return self


_SECTIONS = {"site": SiteSection, "plan": PlanSection, "capacity": CapacitySection, "budget": BudgetSection}


def _coerce(section, key, value, default):
    if isinstance(default, bool) or value is None:
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise InvalidArgument(f"{section}.{key} must be an integer, got {value!r}")
        return int(value)
    if isinstance(default, float) or default is None:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidArgument(f"{section}.{key} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, str) and not isinstance(value, str):
        raise InvalidArgument(f"{section}.{key} must be a string, got {value!r}")
    return value


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise InvalidArgument("config document must be a JSON object")
    unknown = set(doc) - {"spm", *_SECTIONS}
    if unknown:
        raise InvalidArgument(f"unknown config section(s): {sorted(unknown)}")
    cfg = RunConfig()
    if "spm" in doc:
        spm = doc["spm"]
        if not isinstance(spm, dict):
            raise InvalidArgument("spm section must be an object")
        bad = set(spm) - {"band", *SPM_COEFFICIENTS}
        if bad:
            raise InvalidArgument(f"unknown spm key(s): {sorted(bad)}")
        for k, v in spm.items():
            if k != "band" and (isinstance(v, bool) or not isinstance(v, (int, float))):
                raise InvalidArgument(f"spm.{k} must be a number, got {v!r}")
        cfg.spm = dict(spm)
    for name, cls in _SECTIONS.items():
        if name not in doc:
            continue
        section = doc[name]
        if not isinstance(section, dict):
            raise InvalidArgument(f"{name} section must be an object")
        obj = getattr(cfg, name)
        known = {f.name for f in fields(cls)}
        bad = set(section) - known
        if bad:
            raise InvalidArgument(f"unknown {name} key(s): {sorted(bad)}")
        for key, value in section.items():
            setattr(obj, key, _coerce(name, key, value, getattr(cls(), key)))
    return cfg.validate()


def load_config(path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(doc)


def example_config_text() -> str:
    return resources.files("supercell").joinpath("data/example_config.json").read_text()
