#!/usr/bin/env python3
"""
Compare two scenario runs.

This module reports how capacity and sufficiency change between two runs
made on the same input datasets (e.g. separation factor 3 vs 4, or
horizontal vs vertical drilling). Runs on different datasets are refused.

Percentage change is (b - a) / a * 100; zero when both are zero.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import pandas as pd

from pipeline.artifacts import fixed, parse_sufficiency_pct, read_run, write_json
from scripts.errors import DatasetMismatchError

logger = logging.getLogger(__name__)


def percent_change(a: float, b: float) -> float:
    """Relative change from a to b in %; inf if only a is zero, 0 if both are."""
    if math.isnan(a) and math.isnan(b):
        return 0.0
    if math.isnan(a) or math.isnan(b):
        return math.nan
    if a == b:
        return 0.0
    if a == 0:
        return math.inf
    if math.isinf(a) or math.isinf(b):
        return math.nan
    return (b - a) / a * 100.0


@dataclass
class DiffReport:
    """
    Differences between two runs.

    Attributes:
        countries (pd.DataFrame): Per-country capacity and sufficiency change
        global_deltas (dict): Global totals of both runs and their change
        scenarios (dict): Scenario echo of both runs
    """

    countries: pd.DataFrame
    global_deltas: Dict = field(default_factory=dict)
    scenarios: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "scenarios": self.scenarios,
            "global": self.global_deltas,
            "countries": self.countries.to_dict(orient="records"),
        }


def check_same_datasets(meta_a: Dict, meta_b: Dict) -> None:
    """
    Raises:
        DatasetMismatchError: Listing every dataset whose hash differs
    """
    a, b = meta_a.get("datasets", {}), meta_b.get("datasets", {})
    differing = sorted(k for k in set(a) | set(b) if a.get(k) != b.get(k))
    if differing:
        raise DatasetMismatchError(
            f"runs use different input datasets ({', '.join(differing)}); "
            "deltas would mix data and scenario effects"
        )


def diff_scenarios(run_a: str, run_b: str, out_path: Optional[str] = None) -> DiffReport:
    """
    Per-country and global changes from run A to run B.

    Args:
        run_a: Baseline run directory
        run_b: Compared run directory
        out_path: Optional JSON file for the report

    Returns:
        DiffReport

    Raises:
        DatasetMismatchError: Runs were made on different inputs
    """
    a, b = read_run(run_a), read_run(run_b)
    check_same_datasets(a["metadata"], b["metadata"])

    merged = a["countries"].merge(b["countries"], on="iso3", how="outer", suffixes=("_a", "_b")).fillna("")
    rows = []
    for _, row in merged.sort_values("iso3").iterrows():
        cap_a = float(row["potential_TWh_a"] or 0.0)
        cap_b = float(row["potential_TWh_b"] or 0.0)
        suff_a = parse_sufficiency_pct(row["sufficiency_pct_a"])
        suff_b = parse_sufficiency_pct(row["sufficiency_pct_b"])
        rows.append({
            "iso3": row["iso3"],
            "capacity_a_TWh": cap_a,
            "capacity_b_TWh": cap_b,
            "capacity_delta_pct": percent_change(cap_a, cap_b),
            "sufficiency_a_pct": suff_a,
            "sufficiency_b_pct": suff_b,
            "sufficiency_delta_pct": percent_change(suff_a, suff_b),
        })
    countries = pd.DataFrame(rows, columns=[
        "iso3", "capacity_a_TWh", "capacity_b_TWh", "capacity_delta_pct",
        "sufficiency_a_pct", "sufficiency_b_pct", "sufficiency_delta_pct",
    ])

    ga, gb = a["summary"]["global"], b["summary"]["global"]
    sa, sb = a["summary"]["balanced_demand_share_pct"], b["summary"]["balanced_demand_share_pct"]
    global_deltas = {
        "capacity_a_TWh": ga["capacity_TWh"],
        "capacity_b_TWh": gb["capacity_TWh"],
        "capacity_delta_pct": percent_change(ga["capacity_TWh"], gb["capacity_TWh"]),
        "cavern_count_delta": gb["cavern_count"] - ga["cavern_count"],
        "balanced_share_country_delta_pp": sb["country"] - sa["country"],
        "balanced_share_region_delta_pp": sb["region"] - sa["region"],
    }
    report = DiffReport(
        countries=countries,
        global_deltas=global_deltas,
        scenarios={"a": a["summary"]["scenario"], "b": b["summary"]["scenario"]},
    )

    logger.info(
        f"✓ Compared {run_a} -> {run_b}: global capacity {fixed(global_deltas['capacity_delta_pct'])} %"
    )
    if out_path is not None:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        write_json(report.to_dict(), Path(out_path))
    return report
