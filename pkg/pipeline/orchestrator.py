#!/usr/bin/env python3
"""
Scenario orchestration.

This module runs one storage potential scenario end to end:
1. Load and validate all inputs (deposits, exclusions, demand, regions, Z table)
2. Classify deposits and select the geology case
3. Per deposit (in a bounded worker pool): grid -> eligibility -> placement -> capacity
4. Aggregate capacities, build the country/region ledgers and the sharing plan
5. Write all artifacts with fixed precision

Results are identical for any worker count: deposits are mapped in id
order and every sum runs over sorted keys.
"""

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app import __version__
from pipeline import artifacts
from scripts.capacity import (
    CompressibilityTable,
    ThermoParams,
    aggregate_capacity,
    cavern_capacity,
    salt_mass_rate,
)
from scripts.eligibility import DrillingMode, build_eligibility, eligible_area_km2, write_pgm
from scripts.energy_system import (
    build_country_ledger,
    buildable_storage,
    balanced_demand_share,
    expansion_rate,
    global_sufficiency,
    global_transport_demand,
    ledger_to_frame,
    need_fraction_sweep,
    regional_sufficiency,
    relative_expansion,
    sharing_dependent_count,
    storage_abroad,
    storage_lifetime_years,
    sufficient_country_count,
    transport_increment,
)
from scripts.errors import SaltCavernError, StageError
from scripts.geology import (
    SuitabilityCriteria,
    classify_deposits,
    select_case,
    suitability_summary,
    suitable_depth_window,
)
from scripts.load_data import (
    ExclusionLayer,
    SaltDeposit,
    build_local_grid,
    load_demand_table,
    load_deposits,
    load_exclusion_manifest,
    load_layer_geometries,
    load_region_map,
)
from scripts.placement import CavernPlacement, place_deposit
from scripts.utilities.config import ScenarioConfig

logger = logging.getLogger(__name__)


@dataclass
class DepositTask:
    """Everything a worker needs to process one deposit."""

    deposit: SaltDeposit
    layers: Tuple[ExclusionLayer, ...]
    criteria: SuitabilityCriteria
    thermo: ThermoParams
    table: CompressibilityTable
    resolution_m: float
    separation_factor: int
    drilling: DrillingMode
    temperature_reference: str
    keep_mask: bool = False


@dataclass
class DepositResult:
    """
    Outcome of one deposit.

    Attributes:
        deposit_id (str): Deposit identifier
        inside_area_km2 (float): Rasterized deposit area
        eligible_area_km2 (float): Area left after exclusions
        placements (list): Caverns with depth and capacity
        rejected (dict): Rejected caverns per reason
        provenance (list): Excluded cells per layer
        inside_cells (int): Cells inside the deposit
        mask (np.ndarray | None): Eligibility mask when requested
    """

    deposit_id: str
    inside_area_km2: float
    eligible_area_km2: float
    placements: List[CavernPlacement]
    rejected: Dict[str, int]
    provenance: List[Dict]
    inside_cells: int
    mask: Optional[np.ndarray] = None


@dataclass
class ScenarioInputs:
    """Loaded and validated inputs of a scenario."""

    deposits: List[SaltDeposit]
    layers: List[ExclusionLayer]
    demand: pd.DataFrame
    regions: pd.DataFrame
    table: CompressibilityTable
    hashes: Dict[str, str] = field(default_factory=dict)


def grid_margin(layers: Sequence[ExclusionLayer]) -> float:
    """Margin that keeps every buffered exclusion reaching the deposit on the grid."""
    return max((layer.buffer_m for layer in layers), default=0.0)


def process_deposit(task: DepositTask) -> DepositResult:
    """
    Run the raster and placement chain for one deposit.

    Raises:
        StageError: Naming the failing stage and the deposit
    """
    deposit = task.deposit
    stage = "grid"
    try:
        grid = build_local_grid(deposit, task.resolution_m, grid_margin(task.layers))

        stage = "eligibility"
        raster = build_eligibility(deposit, grid, task.layers, task.drilling)

        stage = "placement"
        window = suitable_depth_window(deposit, task.criteria)
        placements, rejected = place_deposit(raster, deposit, window, task.separation_factor)

        stage = "capacity"
        placements = [
            replace(p, capacity_GWh=cavern_capacity(p, task.thermo, task.table, task.temperature_reference))
            for p in placements
        ]
    except Exception as e:
        raise StageError(stage, deposit.id, e) from e

    return DepositResult(
        deposit_id=deposit.id,
        inside_area_km2=float(np.count_nonzero(raster.inside)) * grid.cell_area_km2,
        eligible_area_km2=eligible_area_km2(raster),
        placements=placements,
        rejected=dict(sorted(rejected.items())),
        provenance=raster.provenance,
        inside_cells=int(np.count_nonzero(raster.inside)),
        mask=raster.mask if task.keep_mask else None,
    )


def map_deposits(tasks: Sequence[DepositTask], workers: int = 1) -> List[DepositResult]:
    """Process deposits in input order, inline or with a process pool."""
    if workers <= 1 or len(tasks) <= 1:
        return [process_deposit(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(process_deposit, tasks))


def load_inputs(config: ScenarioConfig) -> ScenarioInputs:
    """
    Load every input of a scenario and hash the datasets.

    Raises:
        StageError: stage "load" with the offending input
    """
    config.check_inputs()
    hashes: Dict[str, str] = {}

    def _load(name, fn, *args):
        try:
            return fn(*args)
        except (SaltCavernError, OSError, ValueError) as e:
            raise StageError("load", name, e) from e

    deposits = _load("deposits", load_deposits, str(config.input_path("deposits")))
    layers = _load("exclusions", load_exclusion_manifest, str(config.input_path("exclusions")))
    layers = [_load(layer.name, load_layer_geometries, layer) for layer in layers]
    demand = _load("demand", load_demand_table, str(config.input_path("demand")))
    regions = _load("regions", load_region_map, str(config.input_path("regions")), config.declared_regions)
    if config.z_table is not None:
        table = _load("z_table", CompressibilityTable.from_csv, str(config.input_path("z_table")))
    else:
        table = CompressibilityTable.default()

    for name in ("deposits", "exclusions", "demand", "regions"):
        hashes[name] = artifacts.file_sha256(str(config.input_path(name)))
    for layer in layers:
        hashes[f"layer:{layer.name}"] = artifacts.file_sha256(layer.geometry_path)
    hashes["z_table"] = artifacts.file_sha256(table.source)

    return ScenarioInputs(deposits, layers, demand, regions, table, hashes)


def _exclusion_shares(results: Sequence[DepositResult]) -> Dict[str, float]:
    inside = sum(r.inside_cells for r in results)
    gross: Dict[str, int] = {}
    for r in results:
        for entry in r.provenance:
            gross[entry["category"]] = gross.get(entry["category"], 0) + entry["gross_cells"]
    if inside == 0:
        return {k: 0.0 for k in sorted(gross)}
    return {k: gross[k] / inside * 100.0 for k in sorted(gross)}


def run_scenario(config: ScenarioConfig) -> Dict:
    """
    Run a scenario and write its artifacts.

    Args:
        config: Validated scenario configuration

    Returns:
        The summary dict that was written to summary.json

    Raises:
        ValidationError: Invalid configuration (before any work)
        StageError: Failure in a pipeline stage
    """
    config.validate()
    logger.info(f"Scenario: {config.to_dict(include_execution=False)}")

    inputs = load_inputs(config)
    criteria = config.suitability_criteria
    thermo = config.thermo_params
    drilling = DrillingMode(config.drilling, config.reach_m).validate()

    classified = sorted(classify_deposits(inputs.deposits, criteria), key=lambda d: d.id)
    selected = select_case(classified, config.geology_case, criteria)

    tasks = [
        DepositTask(
            deposit=d,
            layers=tuple(inputs.layers),
            criteria=criteria,
            thermo=thermo,
            table=inputs.table,
            resolution_m=config.resolution_m,
            separation_factor=config.separation_factor,
            drilling=drilling,
            temperature_reference=config.temperature_reference,
            keep_mask=config.debug_masks,
        )
        for d in selected
    ]
    logger.info(f"Processing {len(tasks)} deposits with {config.workers} worker(s)")
    results = map_deposits(tasks, config.workers)

    placements = sorted((p for r in results for p in r.placements), key=lambda p: p.placement_id)
    logger.info(f"✓ {len(placements)} caverns placed")

    # ---- aggregation ----
    try:
        per_country = aggregate_capacity(placements, "country")
        potentials = dict(zip(per_country["group"], per_country["capacity_TWh"]))
        ledger = build_country_ledger(potentials, inputs.demand, config.storage_fraction, inputs.regions)
        region_ledger = regional_sufficiency(ledger)
        plan = storage_abroad(ledger)
    except SaltCavernError as e:
        raise StageError("ledger", None, e) from e

    total_TWh = float(per_country["capacity_TWh"].sum()) if len(per_country) else 0.0
    buildable = buildable_storage(ledger, "region")
    build_share = buildable / total_TWh if total_TWh > 0 else 0.0
    g_suff = global_sufficiency(ledger)
    transport = global_transport_demand(plan, config.cycles_per_year)

    rejected: Counter = Counter()
    for r in results:
        rejected.update(r.rejected)

    summary = {
        "scenario": {
            "geology_case": config.geology_case,
            "separation_factor": config.separation_factor,
            "drilling": config.drilling,
            "storage_fraction": config.storage_fraction,
        },
        "global": {
            "capacity_TWh": total_TWh,
            "cavern_count": len(placements),
            "deposits_selected": len(selected),
            "deposits_total": len(classified),
            "eligible_area_km2": sum(r.eligible_area_km2 for r in results),
            "demand_TWh": float(ledger.table["demand_TWh"].sum()),
            "need_TWh": float(ledger.table["need_TWh"].sum()),
            "sufficiency_pct": g_suff * 100.0,
            "storage_lifetime_years": storage_lifetime_years(g_suff, config.cavern_lifetime_years),
            "unassigned_capacity_TWh": float(
                per_country.loc[per_country["group"] == "unassigned", "capacity_TWh"].sum()
            ) if len(per_country) else 0.0,
        },
        "suitability": suitability_summary(classified),
        "balanced_demand_share_pct": {
            "country": balanced_demand_share(ledger, "country"),
            "region": balanced_demand_share(ledger, "region"),
        },
        "sufficient_countries": {
            "country": list(sufficient_country_count(ledger, "country")),
            "region": list(sufficient_country_count(ledger, "region")),
        },
        "sharing_dependent_countries": sharing_dependent_count(ledger),
        "storage_abroad_TWh": dict(zip(plan.regions["region"], plan.regions["storage_abroad_TWh"])),
        "storage_abroad_total_TWh": plan.total_TWh,
        "transport": {
            "global_demand_TWh_per_a": transport,
            "increment_pct": transport_increment(transport, config.baseline_trade_TWh),
        },
        "build_out": {
            "buildable_storage_TWh": {
                "country": buildable_storage(ledger, "country"),
                "region": buildable,
            },
            "expansion_rate_TWh_per_a": expansion_rate(buildable, config.build_horizon_years),
            "salt_mass_rate_Mt_per_a": salt_mass_rate(placements, config.build_horizon_years, thermo) * build_share,
        },
        "rejected_caverns": dict(sorted(rejected.items())),
        "exclusion_shares_pct": _exclusion_shares(results),
        "need_fraction_sweep": need_fraction_sweep(ledger).to_dict(orient="records"),
    }
    if config.existing_storage_TWh is not None:
        summary["build_out"]["relative_expansion_pct"] = relative_expansion(buildable, config.existing_storage_TWh)

    _write_outputs(config, inputs, classified, selected, results, placements, ledger, region_ledger, plan, summary)
    logger.info(f"✓ Artifacts written to {config.output_dir}")
    return summary


def _write_outputs(config, inputs, classified, selected, results, placements, ledger, region_ledger, plan, summary):
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    artifacts.write_placements(placements, out / artifacts.PLACEMENTS_FILE)

    countries = ledger_to_frame(ledger)
    counts = Counter(p.country_iso3 for p in placements)
    countries.insert(4, "cavern_count", [counts.get(c, 0) for c in countries["iso3"]])
    artifacts.write_csv(countries, out / artifacts.COUNTRIES_FILE)

    regions = ledger_to_frame(region_ledger)
    abroad = dict(zip(plan.regions["region"], plan.regions["storage_abroad_TWh"]))
    regions["storage_abroad_TWh"] = [float(abroad.get(r, 0.0)) for r in regions["region"]]
    artifacts.write_csv(regions, out / artifacts.REGIONS_FILE)

    by_id = {r.deposit_id: r for r in results}
    selected_ids = {d.id for d in selected}
    rows = []
    for d in classified:
        r = by_id.get(d.id)
        rows.append({
            "deposit_id": d.id,
            "country_iso3": d.country_iso3,
            "salt_type": d.salt_type,
            "suitability": d.suitability,
            "selected": d.id in selected_ids,
            "eligible_area_km2": r.eligible_area_km2 if r else 0.0,
            "caverns": len(r.placements) if r else 0,
            "rejected_caverns": sum(r.rejected.values()) if r else 0,
            "capacity_TWh": sum(p.capacity_GWh for p in r.placements) / 1000.0 if r else 0.0,
        })
    artifacts.write_csv(pd.DataFrame(rows), out / artifacts.DEPOSITS_FILE)

    artifacts.write_json(summary, out / artifacts.SUMMARY_FILE)
    artifacts.write_json(
        {
            "version": __version__,
            "config": config.to_dict(include_execution=False),
            "effective": {
                "thermo": config.thermo_params.to_dict(),
                "criteria": config.suitability_criteria.to_dict(),
                "reach_m": config.reach_m if config.drilling == "horizontal" else None,
            },
            "datasets": inputs.hashes,
        },
        out / artifacts.METADATA_FILE,
    )

    if config.debug_masks:
        for r in results:
            if r.mask is not None:
                write_pgm(r.mask, str(out / artifacts.MASKS_DIR / f"{r.deposit_id}.pgm"))
