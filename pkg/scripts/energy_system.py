#!/usr/bin/env python3
"""
Storage need, sufficiency and regional sharing.

This module:
- Derives seasonal storage needs from annual electricity demand
- Builds the country ledger of potential, need and sufficiency
- Aggregates the ledger to regions and allocates storage abroad
- Computes balanced demand shares, counts and build-out indicators

Sufficiency is potential / need. Two sentinels are used:
- inf: need is zero and potential positive ("unbounded", counts as sufficient)
- nan: need and potential are both zero ("undefined", excluded from counts)
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from scripts.errors import ValidationError

logger = logging.getLogger(__name__)

UNASSIGNED = "unassigned"
MODES = ("country", "region")
DEFAULT_FRACTIONS = (0.02, 0.04, 0.06, 0.08, 0.10)

LEDGER_COLUMNS = [
    "entity",
    "region",
    "demand_TWh",
    "potential_TWh",
    "need_TWh",
    "sufficiency",
    "self_sufficient",
    "region_sufficient",
    "no_potential",
]


@dataclass
class SufficiencyLedger:
    """
    Potential, need and sufficiency per entity.

    Attributes:
        table (pd.DataFrame): One row per entity, columns LEDGER_COLUMNS,
                              sorted by entity
        level (str): "country" or "region"
        fraction (float): Storage need as share of annual demand
    """

    table: pd.DataFrame
    level: str = "country"
    fraction: float = 0.10

    def __len__(self) -> int:
        return len(self.table)

    def get(self, entity: str) -> Dict:
        row = self.table.loc[self.table["entity"] == entity]
        if row.empty:
            raise KeyError(entity)
        return row.iloc[0].to_dict()


@dataclass
class SharingPlan:
    """
    Storage used abroad inside each region.

    Attributes:
        regions (pd.DataFrame): region, total_potential_TWh, total_need_TWh,
                                storage_abroad_TWh, donors, recipients
        flows (pd.DataFrame): region, donor, recipient, TWh
    """

    regions: pd.DataFrame
    flows: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=["region", "donor", "recipient", "TWh"]))

    @property
    def total_TWh(self) -> float:
        return float(self.regions["storage_abroad_TWh"].sum()) if len(self.regions) else 0.0


# ==================== Elementary metrics ====================


def storage_need(annual_demand_TWh: float, fraction: float) -> float:
    """Seasonal storage need as a fraction of annual electricity demand."""
    if not 0 < fraction <= 1:
        raise ValidationError(f"storage fraction must lie in (0, 1], got {fraction}")
    if annual_demand_TWh < 0:
        raise ValidationError(f"demand must be >= 0, got {annual_demand_TWh}")
    return fraction * annual_demand_TWh


def sufficiency(potential_TWh: float, need_TWh: float) -> float:
    """
    Ratio of storage potential to storage need.

    Returns:
        Ratio (1.0 = 100 %), inf if only the need is zero, nan if both are zero
    """
    if potential_TWh < 0 or need_TWh < 0:
        raise ValidationError(f"potential and need must be >= 0, got ({potential_TWh}, {need_TWh})")
    if need_TWh == 0:
        return math.inf if potential_TWh > 0 else math.nan
    return potential_TWh / need_TWh


def _is_sufficient(ratio) -> np.ndarray:
    # nan >= 1 is False, inf >= 1 is True
    return np.asarray(ratio, dtype=float) >= 1.0


def sufficiency_pct_label(ratio: float) -> str:
    """Percentage with 3 decimals, or the sentinel name."""
    if math.isnan(ratio):
        return "undefined"
    if math.isinf(ratio):
        return "unbounded"
    return f"{ratio * 100:.3f}"


# ==================== Ledgers ====================


def _finish_ledger(df: pd.DataFrame) -> pd.DataFrame:
    df["sufficiency"] = [sufficiency(p, n) for p, n in zip(df["potential_TWh"], df["need_TWh"])]
    df["self_sufficient"] = _is_sufficient(df["sufficiency"])
    df["no_potential"] = df["potential_TWh"] <= 0
    if "region_sufficient" not in df.columns:
        df["region_sufficient"] = df["self_sufficient"]
    return df.sort_values("entity", kind="mergesort").reset_index(drop=True)[LEDGER_COLUMNS]


def build_country_ledger(
    potentials: Mapping[str, float],
    demand: pd.DataFrame,
    fraction: float = 0.10,
    regions: Optional[pd.DataFrame] = None,
) -> SufficiencyLedger:
    """
    Build the country ledger.

    The entity universe is the demand table. Potential of countries that
    are missing from it is dropped with a warning.

    Args:
        potentials: iso3 -> potential in TWh
        demand: Demand table (country_iso3, annual_electricity_demand_TWh)
        fraction: Storage need as share of demand
        regions: Optional region map (country_iso3, region_name)

    Returns:
        Country-level SufficiencyLedger with region flags
    """
    storage_need(0.0, fraction)

    countries = demand["country_iso3"].tolist()
    outside = sorted(k for k, v in potentials.items() if k not in set(countries) and v > 0)
    if outside:
        logger.warning(f"⚠ Potential of {outside} dropped: no demand entry")

    df = pd.DataFrame({
        "entity": countries,
        "demand_TWh": demand["annual_electricity_demand_TWh"].astype(float).to_numpy(),
    })
    df["potential_TWh"] = [float(potentials.get(c, 0.0)) for c in countries]
    df["need_TWh"] = [storage_need(d, fraction) for d in df["demand_TWh"]]
    df["region"] = UNASSIGNED

    ledger = SufficiencyLedger(table=_finish_ledger(df), level="country", fraction=fraction)
    if regions is not None:
        ledger = assign_regions(ledger, regions)

    logger.info(
        f"✓ Ledger: {len(ledger)} countries, {int(ledger.table['self_sufficient'].sum())} self-sufficient"
    )
    return ledger


def assign_regions(ledger: SufficiencyLedger, regions: pd.DataFrame) -> SufficiencyLedger:
    """
    Attach region membership and the region_sufficient flag.

    A country is region sufficient when it is self-sufficient or its
    region is sufficient as a whole. Unassigned countries do not share.
    """
    df = ledger.table.copy()
    lookup = dict(zip(regions["country_iso3"], regions["region_name"]))
    df["region"] = df["entity"].map(lookup).fillna(UNASSIGNED)

    missing = df.loc[df["region"] == UNASSIGNED, "entity"].tolist()
    if missing:
        logger.warning(f"⚠ {len(missing)} countries without region: {missing}")

    sums = df[df["region"] != UNASSIGNED].groupby("region")[["potential_TWh", "need_TWh"]].sum()
    region_ok = {
        r: bool(_is_sufficient(sufficiency(row.potential_TWh, row.need_TWh)))
        for r, row in sums.iterrows()
    }
    df["region_sufficient"] = df["self_sufficient"] | df["region"].map(lambda r: region_ok.get(r, False)).astype(bool)
    return SufficiencyLedger(table=df[LEDGER_COLUMNS], level=ledger.level, fraction=ledger.fraction)


def regional_sufficiency(ledger: SufficiencyLedger, regions: Optional[pd.DataFrame] = None) -> SufficiencyLedger:
    """
    Aggregate a country ledger to regions.

    Region potential and need are the sums over member countries.
    Countries without region are grouped as "unassigned".

    Args:
        ledger: Country ledger
        regions: Region map; if omitted the ledger's region column is used

    Returns:
        Region-level SufficiencyLedger
    """
    if ledger.level != "country":
        raise ValidationError("regional_sufficiency expects a country ledger")
    if regions is not None:
        ledger = assign_regions(ledger, regions)

    grouped = ledger.table.groupby("region", sort=True)[["demand_TWh", "potential_TWh", "need_TWh"]].sum()
    df = grouped.reset_index().rename(columns={"region": "entity"})
    df["region"] = df["entity"]
    return SufficiencyLedger(table=_finish_ledger(df), level="region", fraction=ledger.fraction)


# ==================== Sharing ====================


def storage_abroad(ledger: SufficiencyLedger, regions: Optional[pd.DataFrame] = None) -> SharingPlan:
    """
    Allocate regional surpluses to deficit countries.

    Within each region, deficits are served largest first from donors
    with the largest surplus first (ties broken by country code). Flows
    never cross regions; unassigned countries neither give nor receive.

    Returns:
        SharingPlan with per-region totals and individual flows
    """
    if regions is not None:
        ledger = assign_regions(ledger, regions)
    df = ledger.table

    region_rows = []
    flows = []
    for region, members in df[df["region"] != UNASSIGNED].groupby("region", sort=True):
        balance = members["potential_TWh"] - members["need_TWh"]
        donors = sorted(
            ((float(b), e) for e, b in zip(members["entity"], balance) if b > 0),
            key=lambda t: (-t[0], t[1]),
        )
        recipients = sorted(
            ((float(-b), e) for e, b in zip(members["entity"], balance) if b < 0),
            key=lambda t: (-t[0], t[1]),
        )

        remaining = [[surplus, name] for surplus, name in donors]
        abroad = 0.0
        served = []
        for deficit, recipient in recipients:
            for donor in remaining:
                if deficit <= 0:
                    break
                amount = min(deficit, donor[0])
                if amount <= 0:
                    continue
                donor[0] -= amount
                deficit -= amount
                abroad += amount
                flows.append({"region": region, "donor": donor[1], "recipient": recipient, "TWh": amount})
                if recipient not in served:
                    served.append(recipient)

        region_rows.append({
            "region": region,
            "total_potential_TWh": float(members["potential_TWh"].sum()),
            "total_need_TWh": float(members["need_TWh"].sum()),
            "storage_abroad_TWh": abroad,
            "donors": ";".join(name for _, name in donors),
            "recipients": ";".join(served),
        })

    regions_df = pd.DataFrame(
        region_rows,
        columns=["region", "total_potential_TWh", "total_need_TWh", "storage_abroad_TWh", "donors", "recipients"],
    )
    flows_df = pd.DataFrame(flows, columns=["region", "donor", "recipient", "TWh"])
    plan = SharingPlan(regions=regions_df, flows=flows_df)
    logger.info(f"✓ Storage abroad: {plan.total_TWh:.3f} TWh in {int((regions_df['storage_abroad_TWh'] > 0).sum())} regions")
    return plan


# ==================== Shares and counts ====================


def _sufficient_flags(ledger: SufficiencyLedger, mode: str) -> pd.Series:
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    if ledger.level == "region" or mode == "country":
        return ledger.table["self_sufficient"]
    return ledger.table["region_sufficient"]


def balanced_demand_share(ledger: SufficiencyLedger, mode: str = "country") -> float:
    """
    Share (%) of total demand held by sufficient entities.

    In region mode a country counts when its region is sufficient.
    """
    total = float(ledger.table["demand_TWh"].sum())
    if total <= 0:
        raise ValidationError("global demand must be positive")
    flags = _sufficient_flags(ledger, mode)
    return float(ledger.table.loc[flags, "demand_TWh"].sum()) / total * 100.0


def sufficient_country_count(ledger: SufficiencyLedger, mode: str = "country") -> Tuple[int, int]:
    """(sufficient entities, entities with a defined sufficiency)."""
    if len(ledger) == 0:
        return 0, 0
    flags = _sufficient_flags(ledger, mode)
    defined = ~ledger.table["sufficiency"].isna()
    return int((flags & defined).sum()), int(defined.sum())


def sharing_dependent_count(ledger: SufficiencyLedger) -> int:
    """Countries sufficient only through regional sharing."""
    t = ledger.table
    return int((t["region_sufficient"] & ~t["self_sufficient"]).sum())


def global_sufficiency(ledger: SufficiencyLedger) -> float:
    """Total potential over total need."""
    return sufficiency(float(ledger.table["potential_TWh"].sum()), float(ledger.table["need_TWh"].sum()))


def buildable_storage(ledger: SufficiencyLedger, mode: str = "country") -> float:
    """
    Storage that would actually be built to meet needs (TWh).

    Country mode: sum of min(potential, need) per country. Region mode:
    the same per region, with unassigned countries on their own.
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    t = ledger.table
    if mode == "country" or ledger.level == "region":
        return float(np.minimum(t["potential_TWh"], t["need_TWh"]).sum())

    alone = t[t["region"] == UNASSIGNED]
    shared = t[t["region"] != UNASSIGNED].groupby("region")[["potential_TWh", "need_TWh"]].sum()
    return float(
        np.minimum(shared["potential_TWh"], shared["need_TWh"]).sum()
        + np.minimum(alone["potential_TWh"], alone["need_TWh"]).sum()
    )


def need_fraction_sweep(
    ledger: SufficiencyLedger,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
) -> pd.DataFrame:
    """
    Balanced demand shares for a range of storage need fractions.

    Returns:
        DataFrame with columns fraction, share_country_pct, share_region_pct,
        sufficient_countries
    """
    base = ledger.table[["entity", "region", "demand_TWh", "potential_TWh"]].copy()
    rows = []
    for fraction in fractions:
        df = base.copy()
        df["need_TWh"] = [storage_need(d, fraction) for d in df["demand_TWh"]]
        swept = SufficiencyLedger(table=_finish_ledger(df), level="country", fraction=fraction)
        regions = swept.table[["entity", "region"]].rename(columns={"entity": "country_iso3", "region": "region_name"})
        swept = assign_regions(swept, regions[regions["region_name"] != UNASSIGNED])
        rows.append({
            "fraction": fraction,
            "share_country_pct": balanced_demand_share(swept, "country"),
            "share_region_pct": balanced_demand_share(swept, "region"),
            "sufficient_countries": sufficient_country_count(swept, "country")[0],
        })
    return pd.DataFrame(rows, columns=["fraction", "share_country_pct", "share_region_pct", "sufficient_countries"])


# ==================== Build-out indicators ====================


def transport_increment(shared_TWh: float, baseline_trade_TWh: float) -> float:
    """Storage-abroad volume relative to trade-based transport (%), one cycle per year."""
    if baseline_trade_TWh <= 0:
        raise ValidationError(f"baseline trade must be positive, got {baseline_trade_TWh}")
    return shared_TWh / baseline_trade_TWh * 100.0


def global_transport_demand(plan: SharingPlan, cycles_per_year: float = 1.0) -> float:
    """Hydrogen moved per year (TWh/a) to use storage abroad."""
    if cycles_per_year <= 0:
        raise ValidationError(f"cycles_per_year must be positive, got {cycles_per_year}")
    return plan.total_TWh * cycles_per_year


def expansion_rate(total_built_TWh: float, years: float) -> float:
    """Average build-out rate in TWh per year."""
    if years <= 0:
        raise ValidationError(f"years must be positive, got {years}")
    return total_built_TWh / years


def relative_expansion(total_built_TWh: float, existing_TWh: float) -> float:
    """Build-out relative to the existing working gas capacity (%)."""
    if existing_TWh <= 0:
        raise ValidationError(f"existing capacity must be positive, got {existing_TWh}")
    return total_built_TWh / existing_TWh * 100.0


def storage_lifetime_years(sufficiency_ratio: float, cavern_lifetime_years: float = 60.0) -> float:
    """Years of seasonal supply: each cavern generation lasts cavern_lifetime_years."""
    if cavern_lifetime_years <= 0:
        raise ValidationError("cavern lifetime must be positive")
    return sufficiency_ratio * cavern_lifetime_years


def ledger_to_frame(ledger: SufficiencyLedger) -> pd.DataFrame:
    """Ledger as an export table with sufficiency in % and a flags column."""
    t = ledger.table
    flags: List[str] = []
    for _, row in t.iterrows():
        row_flags = []
        if row["self_sufficient"]:
            row_flags.append("self_sufficient")
        if row["region_sufficient"]:
            row_flags.append("region_sufficient")
        if row["no_potential"]:
            row_flags.append("no_potential")
        flags.append(";".join(row_flags))

    if ledger.level == "country":
        out = pd.DataFrame({"iso3": t["entity"], "region": t["region"]})
    else:
        out = pd.DataFrame({"region": t["entity"]})
    out["demand_TWh"] = t["demand_TWh"].to_numpy()
    out["potential_TWh"] = t["potential_TWh"].to_numpy()
    out["need_TWh"] = t["need_TWh"].to_numpy()
    out["sufficiency_pct"] = [sufficiency_pct_label(r) for r in t["sufficiency"]]
    out["flags"] = flags
    return out
