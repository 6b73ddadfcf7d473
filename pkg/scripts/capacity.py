#!/usr/bin/env python3
"""
Hydrogen storage capacity of salt caverns.

This module:
- Computes lithostatic and operating pressures at cavern depth
- Looks up the hydrogen compressibility factor Z from a shipped (p, T) table
- Computes the working gas energy of a cavern with the real-gas equation
- Aggregates cavern capacities per deposit, country or region
- Estimates the salt mass leached per year for a build-out

Energy of one cavern:
    E = H_U * V * (1 - phi) * [p_max / Z(p_max) - p_min / Z(p_min)] / ((R / M) * T)
"""

import logging
from dataclasses import asdict, dataclass, fields
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import RegularGridInterpolator

from scripts.errors import CompressibilityRangeError, ValidationError
from scripts.placement import CavernPlacement

logger = logging.getLogger(__name__)

DEFAULT_Z_TABLE = Path(__file__).resolve().parents[1] / "data" / "compressibility_h2.csv"

J_PER_GWH = 3.6e12
TEMPERATURE_REFERENCES = ("mid", "top")
GROUPINGS = ("country", "deposit", "region")
UNASSIGNED = "unassigned"


@dataclass(frozen=True)
class ThermoParams:
    """
    Physical constants and operating rules.

    Attributes:
        lhv_J_per_kg (float): Lower heating value of hydrogen
        molar_mass_kg_per_mol (float): Molar mass of H2
        gas_constant (float): Universal gas constant, J/(mol K)
        rho_rock (float): Overburden density, kg/m³
        g (float): Gravitational acceleration, m/s²
        surface_temp_K (float): Mean surface temperature
        geothermal_gradient_K_per_m (float): Temperature increase with depth
        p_max_factor (float): p_max as share of lithostatic pressure
        p_min_factor (float): p_min as share of p_max
        rho_salt (float): Rock salt density, kg/m³
    """

    lhv_J_per_kg: float = 119.96e6
    molar_mass_kg_per_mol: float = 0.0020159
    gas_constant: float = 8.314
    rho_rock: float = 2550.0
    g: float = 9.81
    surface_temp_K: float = 288.15
    geothermal_gradient_K_per_m: float = 0.030
    p_max_factor: float = 0.8
    p_min_factor: float = 0.3
    rho_salt: float = 2170.0

    def validate(self) -> "ThermoParams":
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValidationError(f"thermo parameter {f.name} must be positive")
        if self.p_max_factor * self.p_min_factor >= 1 or self.p_min_factor >= 1:
            raise ValidationError("p_min must stay below p_max")
        return self

    @property
    def specific_gas_constant(self) -> float:
        """R / M in J/(kg K)."""
        return self.gas_constant / self.molar_mass_kg_per_mol

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "ThermoParams":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown thermo parameters {unknown}")
        return cls(**{k: float(v) for k, v in data.items()}).validate()

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class CompressibilityTable:
    """
    Hydrogen compressibility factor Z over pressure and temperature.

    Attributes:
        pressures_Pa (np.ndarray): Ascending pressure nodes
        temperatures_K (np.ndarray): Ascending temperature nodes
        z (np.ndarray): Z values, shape (len(pressures), len(temperatures))
        source (str): Origin of the table
    """

    pressures_Pa: np.ndarray
    temperatures_K: np.ndarray
    z: np.ndarray
    source: str = ""

    def __post_init__(self):
        if self.z.shape != (len(self.pressures_Pa), len(self.temperatures_K)):
            raise ValidationError(f"Z table shape {self.z.shape} does not match its axes")
        if np.any(np.diff(self.pressures_Pa) <= 0) or np.any(np.diff(self.temperatures_K) <= 0):
            raise ValidationError("Z table axes must be strictly ascending")
        if not np.all(np.isfinite(self.z)) or np.any(self.z <= 0):
            raise ValidationError("Z values must be finite and positive")

    @cached_property
    def _interpolator(self) -> RegularGridInterpolator:
        return RegularGridInterpolator(
            (self.pressures_Pa, self.temperatures_K), self.z, method="linear", bounds_error=True
        )

    @property
    def pressure_range(self) -> Tuple[float, float]:
        return float(self.pressures_Pa[0]), float(self.pressures_Pa[-1])

    @property
    def temperature_range(self) -> Tuple[float, float]:
        return float(self.temperatures_K[0]), float(self.temperatures_K[-1])

    def __call__(self, p: float, T: float) -> float:
        p_lo, p_hi = self.pressure_range
        t_lo, t_hi = self.temperature_range
        if not (p_lo <= p <= p_hi and t_lo <= T <= t_hi):
            raise CompressibilityRangeError(
                f"(p={p / 1e6:.3f} MPa, T={T:.2f} K) outside Z table "
                f"[{p_lo / 1e6:g}, {p_hi / 1e6:g}] MPa x [{t_lo:g}, {t_hi:g}] K"
            )
        return float(self._interpolator([[p, T]])[0])

    @classmethod
    def from_csv(cls, path: str) -> "CompressibilityTable":
        """
        Load a Z table CSV: first column pressure_MPa, remaining column
        headers are temperatures in K.
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Z table not found: {path}")

        df = pd.read_csv(path, encoding="utf-8")
        if df.columns[0] != "pressure_MPa":
            raise ValidationError(f"{path}: first column must be 'pressure_MPa'")
        try:
            temperatures = np.array([float(c) for c in df.columns[1:]])
        except ValueError:
            raise ValidationError(f"{path}: temperature headers must be numeric")

        table = cls(
            pressures_Pa=df["pressure_MPa"].to_numpy(dtype=float) * 1e6,
            temperatures_K=temperatures,
            z=df.iloc[:, 1:].to_numpy(dtype=float),
            source=str(path),
        )
        logger.info(f"✓ Loaded Z table {path.name}: {len(table.pressures_Pa)} x {len(temperatures)} nodes")
        return table

    @classmethod
    def default(cls) -> "CompressibilityTable":
        """Shipped hydrogen table, read once per process."""
        return _default_table()


@lru_cache(maxsize=1)
def _default_table() -> CompressibilityTable:
    return CompressibilityTable.from_csv(str(DEFAULT_Z_TABLE))


# ==================== Pressure and temperature ====================


def lithostatic_pressure(depth_m: float, params: ThermoParams = ThermoParams()) -> float:
    """Overburden pressure rho_rock * g * depth in Pa."""
    if depth_m <= 0:
        raise ValidationError(f"depth must be positive, got {depth_m}")
    return params.rho_rock * params.g * depth_m


def operating_pressures(p_lith: float, params: ThermoParams = ThermoParams()) -> Tuple[float, float]:
    """(p_min, p_max) in Pa from lithostatic pressure."""
    p_max = params.p_max_factor * p_lith
    p_min = params.p_min_factor * p_max
    return p_min, p_max


def compressibility(p: float, T: float, table: CompressibilityTable) -> float:
    """Bilinear Z(p, T); raises CompressibilityRangeError outside the table."""
    return table(p, T)


def cavern_temperature(
    top_depth_m: float,
    height_m: float,
    params: ThermoParams = ThermoParams(),
    reference: str = "mid",
) -> float:
    """Gas temperature from the linear geothermal profile at mid-height or top."""
    if reference not in TEMPERATURE_REFERENCES:
        raise ValidationError(f"temperature reference must be one of {TEMPERATURE_REFERENCES}")
    depth = top_depth_m + height_m / 2.0 if reference == "mid" else top_depth_m
    return params.surface_temp_K + params.geothermal_gradient_K_per_m * depth


# ==================== Capacity ====================


def working_gas_mass(
    volume_m3: float,
    insoluble_fraction: float,
    p_min: float,
    p_max: float,
    T: float,
    params: ThermoParams,
    table: CompressibilityTable,
) -> float:
    """Hydrogen mass (kg) cycled between p_min and p_max."""
    density_max = p_max / (compressibility(p_max, T, table) * params.specific_gas_constant * T)
    density_min = p_min / (compressibility(p_min, T, table) * params.specific_gas_constant * T)
    return volume_m3 * (1.0 - insoluble_fraction) * (density_max - density_min)


def cavern_capacity(
    placement: CavernPlacement,
    params: ThermoParams = ThermoParams(),
    table: Optional[CompressibilityTable] = None,
    reference: str = "mid",
) -> float:
    """
    Working gas energy of one cavern.

    The pressure is taken at the cavern top; unknown insolubles count
    as zero.

    Args:
        placement: Placement with cavern_top_depth_m set
        params: Thermodynamic parameters
        table: Z table (shipped table by default)
        reference: Temperature depth reference, "mid" or "top"

    Returns:
        Capacity in GWh

    Raises:
        ValidationError: Placement has no depth
        CompressibilityRangeError: Operating point outside the Z table
    """
    if placement.cavern_top_depth_m is None:
        raise ValidationError(f"placement {placement.placement_id} has no depth assigned")
    table = table if table is not None else CompressibilityTable.default()

    phi = placement.insoluble_fraction or 0.0
    spec = placement.spec
    p_min, p_max = operating_pressures(lithostatic_pressure(placement.cavern_top_depth_m, params), params)
    T = cavern_temperature(placement.cavern_top_depth_m, spec.height_m, params, reference)

    mass = working_gas_mass(spec.volume_m3, phi, p_min, p_max, T, params, table)
    return mass * params.lhv_J_per_kg / J_PER_GWH


def aggregate_capacity(
    placements: Sequence[CavernPlacement],
    grouping: str = "country",
    regions: Optional[pd.DataFrame] = None,
) -> pd.DataFrame:
    """
    Sum cavern capacities per group.

    Placements are summed in placement_id order so totals are identical
    for any input order.

    Args:
        placements: Placements with capacity_GWh set
        grouping: "country", "deposit" or "region"
        regions: Country -> region map (required for grouping="region")

    Returns:
        DataFrame with columns [group, capacity_TWh, cavern_count] sorted by group
    """
    if grouping not in GROUPINGS:
        raise ValidationError(f"grouping must be one of {GROUPINGS}, got {grouping!r}")
    columns = ["group", "capacity_TWh", "cavern_count"]
    if not placements:
        return pd.DataFrame(columns=columns)

    missing = [p.placement_id for p in placements if p.capacity_GWh is None]
    if missing:
        raise ValidationError(f"{len(missing)} placements have no capacity, e.g. {missing[0]}")

    df = pd.DataFrame({
        "placement_id": [p.placement_id for p in placements],
        "deposit": [p.deposit_id for p in placements],
        "country": [p.country_iso3 or UNASSIGNED for p in placements],
        "capacity_GWh": [p.capacity_GWh for p in placements],
    }).sort_values("placement_id", kind="mergesort")

    if grouping == "region":
        if regions is None:
            raise ValidationError("region grouping requires a region map")
        lookup = dict(zip(regions["country_iso3"], regions["region_name"]))
        df["region"] = df["country"].map(lookup).fillna(UNASSIGNED)

    unassigned = int((df[grouping] == UNASSIGNED).sum())
    if unassigned:
        logger.warning(f"⚠ {unassigned} caverns without {grouping}, bucketed as '{UNASSIGNED}'")

    result = (
        df.groupby(grouping, sort=True)
        .agg(capacity_GWh=("capacity_GWh", "sum"), cavern_count=("capacity_GWh", "size"))
        .reset_index()
        .rename(columns={grouping: "group"})
    )
    result["capacity_TWh"] = result["capacity_GWh"] / 1000.0
    return result[columns]


def salt_mass_rate(
    placements: Sequence[CavernPlacement],
    build_horizon_years: float,
    params: ThermoParams = ThermoParams(),
) -> float:
    """Leached salt mass in Mt per year for building all placements over the horizon."""
    if build_horizon_years <= 0:
        raise ValidationError(f"build horizon must be positive, got {build_horizon_years}")
    mass_kg = sum(p.spec.volume_m3 * (1.0 - (p.insoluble_fraction or 0.0)) * params.rho_salt for p in placements)
    return mass_kg / 1e9 / build_horizon_years
