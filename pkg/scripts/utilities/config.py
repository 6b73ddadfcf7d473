#!/usr/bin/env python3
"""
Scenario configuration.

This module:
- Defines ScenarioConfig with all scenario parameters and defaults
- Loads scenario documents (YAML or JSON) with yaml.safe_load
- Validates enums and ranges before any pipeline work
- Resolves relative input paths against the data directory

The data directory defaults to $SALTCAV_DATA_DIR (a .env file is honored),
then to the directory of the scenario file.
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional

import yaml
from dotenv import load_dotenv

from scripts.capacity import TEMPERATURE_REFERENCES, ThermoParams
from scripts.eligibility import DRILLING_MODES
from scripts.errors import ValidationError
from scripts.geology import GEOLOGY_CASES, SuitabilityCriteria
from scripts.placement import SEPARATION_FACTORS

logger = logging.getLogger(__name__)

DATA_DIR_ENV = "SALTCAV_DATA_DIR"

# Settings that change how a run executes but not what it produces
EXECUTION_FIELDS = ("workers", "output_dir", "data_dir")

INPUT_FIELDS = ("deposits", "exclusions", "demand", "regions")


@dataclass
class ScenarioConfig:
    """
    One storage potential scenario.

    Attributes:
        geology_case (str): "guaranteed_only" or "guaranteed_and_partial"
        separation_factor (int): Cavern separation in diameters (3, 4, 5)
        drilling (str): "vertical" or "horizontal"
        reach_m (float): Lateral reach in horizontal mode
        resolution_m (float): Raster cell size
        storage_fraction (float): Storage need as share of annual demand
        deposits (str): Deposit GeoJSON
        exclusions (str): Exclusion manifest JSON
        demand (str): Demand CSV
        regions (str): Region map CSV
        z_table (str | None): Compressibility table CSV (shipped table if None)
        thermo (dict): ThermoParams overrides
        criteria (dict): SuitabilityCriteria overrides
        temperature_reference (str): "mid" or "top"
        build_horizon_years (float): Build-out period
        baseline_trade_TWh (float): Trade-based hydrogen transport baseline
        cavern_lifetime_years (float): Lifetime of one cavern generation
        cycles_per_year (float): Storage cycles per year
        existing_storage_TWh (float | None): Installed working gas for comparison
        declared_regions (list | None): Allowed region names
        debug_masks (bool): Write per-deposit PGM masks
        output_dir (str): Artifact directory
        workers (int): Deposit-level worker processes
        data_dir (str | None): Base directory for relative input paths
    """

    geology_case: str = "guaranteed_only"
    separation_factor: int = 4
    drilling: str = "vertical"
    reach_m: float = 5000.0
    resolution_m: float = 100.0
    storage_fraction: float = 0.10
    deposits: str = "deposits.geojson"
    exclusions: str = "exclusions.json"
    demand: str = "demand.csv"
    regions: str = "regions.csv"
    z_table: Optional[str] = None
    thermo: Dict = field(default_factory=dict)
    criteria: Dict = field(default_factory=dict)
    temperature_reference: str = "mid"
    build_horizon_years: float = 25.0
    baseline_trade_TWh: float = 1325.0
    cavern_lifetime_years: float = 60.0
    cycles_per_year: float = 1.0
    existing_storage_TWh: Optional[float] = None
    declared_regions: Optional[List[str]] = None
    debug_masks: bool = False
    output_dir: str = "runs/latest"
    workers: int = 1
    data_dir: Optional[str] = None

    def validate(self) -> "ScenarioConfig":
        """
        Check enums and ranges.

        Raises:
            ValidationError: First invalid field
        """
        if self.geology_case not in GEOLOGY_CASES:
            raise ValidationError(f"geology_case must be one of {GEOLOGY_CASES}, got {self.geology_case!r}")
        if self.separation_factor not in SEPARATION_FACTORS:
            raise ValidationError(
                f"separation_factor must be one of {SEPARATION_FACTORS}, got {self.separation_factor!r}"
            )
        if self.drilling not in DRILLING_MODES:
            raise ValidationError(f"drilling must be one of {DRILLING_MODES}, got {self.drilling!r}")
        if self.temperature_reference not in TEMPERATURE_REFERENCES:
            raise ValidationError(f"temperature_reference must be one of {TEMPERATURE_REFERENCES}")
        if not 0 < self.storage_fraction <= 1:
            raise ValidationError(f"storage_fraction must lie in (0, 1], got {self.storage_fraction}")
        for name in ("reach_m", "resolution_m", "build_horizon_years", "baseline_trade_TWh",
                     "cavern_lifetime_years", "cycles_per_year"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.existing_storage_TWh is not None and self.existing_storage_TWh <= 0:
            raise ValidationError("existing_storage_TWh must be positive")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ValidationError(f"workers must be a positive integer, got {self.workers!r}")

        ThermoParams.from_dict(self.thermo)
        SuitabilityCriteria.from_dict(self.criteria)
        return self

    def check_inputs(self) -> None:
        """Ensure all input files exist."""
        missing = [str(self.input_path(name)) for name in INPUT_FIELDS if not self.input_path(name).exists()]
        if self.z_table is not None and not self.input_path("z_table").exists():
            missing.append(str(self.input_path("z_table")))
        if missing:
            raise ValidationError(f"input files not found: {missing}")

    def input_path(self, name: str) -> Path:
        """Resolved path of an input field."""
        path = Path(getattr(self, name))
        if path.is_absolute():
            return path
        base = Path(self.data_dir) if self.data_dir else Path.cwd()
        return base / path

    @property
    def thermo_params(self) -> ThermoParams:
        return ThermoParams.from_dict(self.thermo)

    @property
    def suitability_criteria(self) -> SuitabilityCriteria:
        return SuitabilityCriteria.from_dict(self.criteria)

    def with_overrides(self, **overrides) -> "ScenarioConfig":
        """Copy with the given fields replaced; None values are ignored."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes).validate()

    def to_dict(self, include_execution: bool = True) -> Dict:
        data = asdict(self)
        if not include_execution:
            for name in EXECUTION_FIELDS:
                data.pop(name, None)
        return data

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "ScenarioConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown scenario fields {unknown}")
        return cls(**data).validate()


def load_config(path: Optional[str] = None) -> ScenarioConfig:
    """
    Load a scenario document.

    Args:
        path: YAML/JSON scenario file; defaults only if None

    Returns:
        Validated ScenarioConfig

    Raises:
        ValidationError: Malformed document or invalid values
    """
    load_dotenv()
    data: Dict = {}
    base_dir = None

    if path is not None:
        if not os.path.exists(path):
            raise FileNotFoundError(f"Scenario file not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            try:
                data = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ValidationError(f"{path}: cannot parse scenario: {e}")
        if not isinstance(data, dict):
            raise ValidationError(f"{path}: scenario must be a mapping")
        base_dir = str(Path(path).resolve().parent)

    if not data.get("data_dir"):
        data["data_dir"] = os.getenv(DATA_DIR_ENV) or base_dir

    config = ScenarioConfig.from_dict(data)
    logger.debug(f"Loaded scenario from {path or 'defaults'}")
    return config
