#!/usr/bin/env python3
"""
Run artifacts: writers and readers.

This module:
- Writes placements as GeoJSON points, tables as CSV and summaries as JSON
- Serializes numbers with fixed precision so identical runs are byte-identical
- Hashes input datasets for run metadata
- Reads a run directory back for comparison and export

Precision: energies and areas 3 decimals, coordinates 7 decimals.
"""

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Dict, Sequence

import pandas as pd

from scripts.placement import CavernPlacement

logger = logging.getLogger(__name__)

PLACEMENTS_FILE = "placements.geojson"
COUNTRIES_FILE = "countries.csv"
REGIONS_FILE = "regions.csv"
DEPOSITS_FILE = "deposits.csv"
SUMMARY_FILE = "summary.json"
METADATA_FILE = "run_metadata.json"
MASKS_DIR = "masks"

ARTIFACT_FILES = (PLACEMENTS_FILE, COUNTRIES_FILE, REGIONS_FILE, DEPOSITS_FILE, SUMMARY_FILE, METADATA_FILE)

DECIMALS = 3
COORD_DECIMALS = 7


def file_sha256(path: str) -> str:
    """SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def fixed(value, decimals: int = DECIMALS):
    """
    Round floats recursively for serialization.

    inf and nan become the strings "unbounded" and "undefined" so the
    output stays valid JSON.
    """
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if math.isnan(value):
            return "undefined"
        if math.isinf(value):
            return "unbounded"
        rounded = round(value, decimals)
        return 0.0 if rounded == 0 else rounded
    if isinstance(value, dict):
        return {str(k): fixed(v, decimals) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [fixed(v, decimals) for v in value]
    if hasattr(value, "item"):
        return fixed(value.item(), decimals)
    return value


def write_json(data: Dict, path: Path) -> None:
    text = json.dumps(fixed(data), indent=2, sort_keys=True, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")


def write_csv(df: pd.DataFrame, path: Path) -> None:
    df.to_csv(path, index=False, float_format=f"%.{DECIMALS}f", lineterminator="\n", encoding="utf-8")


def placements_to_geojson(placements: Sequence[CavernPlacement]) -> Dict:
    """Placements as a FeatureCollection of points, in the given order."""
    features = []
    for p in placements:
        features.append({
            "type": "Feature",
            "id": p.placement_id,
            "geometry": {
                "type": "Point",
                "coordinates": [round(p.lon, COORD_DECIMALS), round(p.lat, COORD_DECIMALS)],
            },
            "properties": {
                "placement_id": p.placement_id,
                "deposit_id": p.deposit_id,
                "country_iso3": p.country_iso3,
                "shape": p.spec.shape,
                "separation_factor": p.spec.separation_factor,
                "cavern_top_depth_m": p.cavern_top_depth_m,
                "insoluble_fraction": p.insoluble_fraction,
                "capacity_GWh": p.capacity_GWh,
            },
        })
    return {"type": "FeatureCollection", "features": features}


def write_placements(placements: Sequence[CavernPlacement], path: Path) -> None:
    collection = placements_to_geojson(placements)
    for feature in collection["features"]:
        feature["properties"] = fixed(feature["properties"])
    path.write_text(json.dumps(collection, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def read_run(run_dir: str) -> Dict:
    """
    Load the artifacts of a finished run.

    Returns:
        Dict with "summary", "metadata" (dicts) and "countries", "regions",
        "deposits" (DataFrames)

    Raises:
        FileNotFoundError: Run directory incomplete
    """
    run_dir = Path(run_dir)
    missing = [name for name in ARTIFACT_FILES if not (run_dir / name).exists()]
    if missing:
        raise FileNotFoundError(f"{run_dir} is not a complete run, missing {missing}")

    def _csv(name):
        return pd.read_csv(
            run_dir / name,
            encoding="utf-8",
            keep_default_na=False,
            dtype={"iso3": str, "sufficiency_pct": str},
        )

    return {
        "summary": json.loads((run_dir / SUMMARY_FILE).read_text(encoding="utf-8")),
        "metadata": json.loads((run_dir / METADATA_FILE).read_text(encoding="utf-8")),
        "countries": _csv(COUNTRIES_FILE),
        "regions": _csv(REGIONS_FILE),
        "deposits": _csv(DEPOSITS_FILE),
    }


def parse_sufficiency_pct(value) -> float:
    """Inverse of the sufficiency labels used in CSV artifacts."""
    if value == "unbounded":
        return math.inf
    if value in ("undefined", ""):
        return math.nan
    return float(value)


def export_map(run_dir: str, out_path: str) -> pd.DataFrame:
    """
    Per-country values in long format (iso3, metric, value) for mapping tools.

    Args:
        run_dir: Finished run directory
        out_path: CSV file to write

    Returns:
        The exported DataFrame
    """
    run = read_run(run_dir)
    countries = run["countries"]
    rows = []
    for _, row in countries.iterrows():
        rows.append({"iso3": row["iso3"], "metric": "potential_TWh", "value": f"{float(row['potential_TWh']):.3f}"})
        rows.append({"iso3": row["iso3"], "metric": "need_TWh", "value": f"{float(row['need_TWh']):.3f}"})
        rows.append({"iso3": row["iso3"], "metric": "sufficiency_pct", "value": str(row["sufficiency_pct"])})

    df = pd.DataFrame(rows, columns=["iso3", "metric", "value"])
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(out_path, index=False, lineterminator="\n", encoding="utf-8")
    logger.info(f"✓ Exported {len(countries)} countries to {out_path}")
    return df
