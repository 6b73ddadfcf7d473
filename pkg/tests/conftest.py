#!/usr/bin/env python3
"""
Shared fixtures and builders for the test suite.

Deposits and layers are built in local meters around an anchor and
converted to lon/lat with the same spherical projection the engine uses,
so local coordinates in tests are exact up to float rounding.
"""

import json
import os
import sys
from pathlib import Path

import pytest
from shapely.geometry import box

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from scripts.load_data import SaltDeposit, geometry_area_km2, meters_per_degree

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SAMPLE_DIR = PROJECT_ROOT / "data" / "sample"
FIXTURES_DIR = Path(__file__).resolve().parent / "fixtures"

ANCHOR_LON = 10.0
ANCHOR_LAT = 52.0


def local_to_lonlat(x: float, y: float, lon0: float = ANCHOR_LON, lat0: float = ANCHOR_LAT):
    """Local meters around (lon0, lat0) to lon/lat."""
    m_lon, m_lat = meters_per_degree(lat0)
    return lon0 + x / m_lon, lat0 + y / m_lat


def local_box(x0: float, y0: float, x1: float, y1: float, lon0: float = ANCHOR_LON, lat0: float = ANCHOR_LAT):
    """Axis-aligned lon/lat rectangle from local meter bounds."""
    lon_a, lat_a = local_to_lonlat(x0, y0, lon0, lat0)
    lon_b, lat_b = local_to_lonlat(x1, y1, lon0, lat0)
    return box(lon_a, lat_a, lon_b, lat_b)


def make_deposit(
    deposit_id: str = "D1",
    width_m: float = 10_000.0,
    height_m: float = 10_000.0,
    salt_type: str = "domal",
    depth=(800.0, 1200.0),
    thickness: float = 300.0,
    insoluble: float = 0.10,
    country: str = "AAA",
    lon0: float = ANCHOR_LON,
    lat0: float = ANCHOR_LAT,
) -> SaltDeposit:
    """Rectangular deposit centered on (lon0, lat0)."""
    geometry = local_box(-width_m / 2, -height_m / 2, width_m / 2, height_m / 2, lon0, lat0)
    return SaltDeposit(
        id=deposit_id,
        name=f"Deposit {deposit_id}",
        geometry=geometry,
        salt_type=salt_type,
        depth_top_m=depth,
        thickness_m=thickness,
        insoluble_fraction=insoluble,
        area_km2=geometry_area_km2(geometry),
        country_iso3=country,
    )


def deposit_feature(deposit_id: str = "D1", **overrides) -> dict:
    """GeoJSON feature of a valid guaranteed deposit; overrides patch properties."""
    geometry = local_box(-5000, -5000, 5000, 5000)
    props = {
        "name": f"Deposit {deposit_id}",
        "salt_type": "domal",
        "depth_top_m": [800, 1200],
        "thickness_m": 300,
        "insoluble_fraction": 0.10,
        "area_km2": round(geometry_area_km2(geometry), 3),
        "country_iso3": "AAA",
    }
    props.update(overrides)
    return {
        "type": "Feature",
        "id": deposit_id,
        "properties": props,
        "geometry": {"type": "Polygon", "coordinates": [[list(c) for c in geometry.exterior.coords]]},
    }


def write_json(path: Path, data) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


@pytest.fixture
def sample_dir() -> Path:
    return SAMPLE_DIR


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES_DIR
