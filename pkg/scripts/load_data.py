#!/usr/bin/env python3
"""
Load salt deposits, exclusion layers, demand and region tables.

This module:
- Loads salt deposit polygons from GeoJSON and validates their attributes
- Repairs trivially broken rings (unclosed) and rejects invalid geometries
- Loads the exclusion layer manifest and applies per-category buffer defaults
- Loads the national demand table and the country -> region map (CSV)
- Builds the per-deposit local metric grid used by the raster stages

All inputs are WGS84 lon/lat. Distances are handled on a local
equirectangular projection anchored at each deposit centroid.
"""

import json
import logging
import math
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import shapely
from shapely.geometry import mapping, shape
from shapely.validation import explain_validity

from scripts.errors import GeometryError, SchemaError, SplitRequiredError, ValidationError

logger = logging.getLogger(__name__)

EARTH_RADIUS_M = 6371008.8

# Projection distortion bound for a single deposit grid
MAX_EXTENT_M = 2_000_000.0

# Tolerance used when snapping projected bounds onto cell multiples
SNAP_EPS = 1e-6

# Allowed mismatch between declared and geometric deposit area
AREA_TOLERANCE = 0.05

SALT_TYPES = ("domal", "bedded")
SUITABILITY_HINTS = ("unknown", "guaranteed", "partial", "unsuitable")

REQUIRED_DEPOSIT_PROPERTIES = [
    "name",
    "salt_type",
    "depth_top_m",
    "thickness_m",
    "insoluble_fraction",
    "area_km2",
    "country_iso3",
]

EXCLUSION_CATEGORIES = (
    "settlement",
    "infrastructure",
    "seismic_fault",
    "airport",
    "protected_area",
    "forest",
    "water_stress",
    "other",
)

DEFAULT_BUFFERS_M: Dict[str, float] = {
    "settlement": 2000.0,
    "seismic_fault": 200.0,
    "airport": 20000.0,
}

# Ground subsidence and fault damage also occur with directional drilling
HARD_CATEGORIES = ("settlement", "seismic_fault")


# ==================== Domain types ====================


@dataclass(frozen=True)
class SaltDeposit:
    """
    A salt deposit (or a subdivided part of one).

    Attributes:
        id (str): Unique deposit identifier
        name (str): Human readable name
        geometry: Shapely Polygon/MultiPolygon in lon/lat degrees
        salt_type (str): "domal" or "bedded"
        depth_top_m (tuple | None): (min, max) depth below surface, None if unknown
        thickness_m (float | None): Salt thickness, None if unknown
        insoluble_fraction (float | None): Share of insoluble minerals, None if unknown
        area_km2 (float): Deposit area
        suitability_hint (str): Input-provided suitability
        country_iso3 (str): Country code ("" if unassigned)
        parent_id (str | None): Parent deposit for subdivided partial deposits
        flags (tuple): Data quality flags, e.g. "depth_unknown"
        suitability (str | None): Classified suitability (set by geology)
    """

    id: str
    name: str
    geometry: object = field(compare=False, repr=False)
    salt_type: str
    depth_top_m: Optional[Tuple[float, float]]
    thickness_m: Optional[float]
    insoluble_fraction: Optional[float]
    area_km2: float
    suitability_hint: str = "unknown"
    country_iso3: str = ""
    parent_id: Optional[str] = None
    flags: Tuple[str, ...] = ()
    suitability: Optional[str] = None


@dataclass(frozen=True)
class ExclusionLayer:
    """
    One exclusion criterion of the land eligibility analysis.

    Attributes:
        category (str): One of EXCLUSION_CATEGORIES
        geometry_path (str): GeoJSON file with the layer features
        buffer_m (float): Exclusion distance around features
        applies_in_horizontal_mode (bool): Still excluded with directional drilling
        name (str): Layer label used in provenance reports
        geometries (tuple | None): Loaded features in lon/lat (lazy)
    """

    category: str
    geometry_path: str
    buffer_m: float
    applies_in_horizontal_mode: bool
    name: str = ""
    geometries: Optional[tuple] = field(default=None, compare=False, repr=False)


def meters_per_degree(lat: float) -> Tuple[float, float]:
    """
    Meters per degree of longitude and latitude at a given latitude.

    Args:
        lat: Latitude in degrees

    Returns:
        Tuple of (meters per degree lon, meters per degree lat)
    """
    m_lat = math.pi * EARTH_RADIUS_M / 180.0
    return m_lat * math.cos(math.radians(lat)), m_lat


@dataclass(frozen=True)
class LocalGrid:
    """
    Regular metric grid around a deposit.

    Local coordinates are meters east (x) and north (y) of the anchor
    (the deposit centroid). Row 0 is the northern edge.

    Attributes:
        anchor_lon (float): Projection anchor longitude
        anchor_lat (float): Projection anchor latitude
        x_min (float): Western grid edge in local meters
        y_max (float): Northern grid edge in local meters
        cell_size_m (float): Cell edge length
        width (int): Number of columns
        height (int): Number of rows
        lattice_x (float | None): Western edge of the deposit footprint before
                                  the margin; cavern lattices start here
        lattice_y (float | None): Northern edge of the footprint before the margin
    """

    anchor_lon: float
    anchor_lat: float
    x_min: float
    y_max: float
    cell_size_m: float
    width: int
    height: int
    lattice_x: Optional[float] = None
    lattice_y: Optional[float] = None

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    @property
    def x_max(self) -> float:
        return self.x_min + self.width * self.cell_size_m

    @property
    def y_min(self) -> float:
        return self.y_max - self.height * self.cell_size_m

    @property
    def cell_area_km2(self) -> float:
        return self.cell_size_m * self.cell_size_m / 1e6

    @property
    def lattice_origin(self) -> Tuple[float, float]:
        """Local (x, y) where cavern lattices start; the grid corner by default."""
        x = self.x_min if self.lattice_x is None else self.lattice_x
        y = self.y_max if self.lattice_y is None else self.lattice_y
        return x, y

    @property
    def origin(self) -> Tuple[float, float]:
        """(lon, lat) of the north-west grid corner."""
        lon, lat = self.to_lonlat(self.x_min, self.y_max)
        return float(lon), float(lat)

    def to_local(self, lon, lat):
        """Project lon/lat (scalars or arrays) to local meters."""
        m_lon, m_lat = meters_per_degree(self.anchor_lat)
        x = (np.asarray(lon, dtype=float) - self.anchor_lon) * m_lon
        y = (np.asarray(lat, dtype=float) - self.anchor_lat) * m_lat
        return x, y

    def to_lonlat(self, x, y):
        """Inverse of to_local."""
        m_lon, m_lat = meters_per_degree(self.anchor_lat)
        lon = np.asarray(x, dtype=float) / m_lon + self.anchor_lon
        lat = np.asarray(y, dtype=float) / m_lat + self.anchor_lat
        return lon, lat

    def project_geometry(self, geometry):
        """Return a copy of a lon/lat shapely geometry in local meters."""

        def _forward(coords: np.ndarray) -> np.ndarray:
            x, y = self.to_local(coords[:, 0], coords[:, 1])
            return np.column_stack([x, y])

        return shapely.transform(geometry, _forward)

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """Local coordinates of all cell centers as two (height, width) arrays."""
        cols = np.arange(self.width)
        rows = np.arange(self.height)
        xs = self.x_min + (cols + 0.5) * self.cell_size_m
        ys = self.y_max - (rows + 0.5) * self.cell_size_m
        return np.meshgrid(xs, ys)

    def cell_index(self, x, y):
        """(row, col) of the cell containing local point(s) (x, y)."""
        col = np.floor((np.asarray(x, dtype=float) - self.x_min) / self.cell_size_m).astype(int)
        row = np.floor((self.y_max - np.asarray(y, dtype=float)) / self.cell_size_m).astype(int)
        return row, col


# ==================== Deposits ====================


def _close_rings(geometry: Dict, feature_id: str, location: str) -> Dict:
    """Close unclosed polygon rings; the only repair applied to deposits."""
    geom_type = geometry.get("type")

    def _fix_polygon(rings):
        fixed = []
        for ring in rings:
            ring = [list(pt) for pt in ring]
            if ring and ring[0] != ring[-1]:
                ring.append(list(ring[0]))
            if len(ring) < 4:
                raise GeometryError("polygon ring has fewer than 3 distinct vertices", feature_id, location)
            fixed.append(ring)
        return fixed

    if geom_type == "Polygon":
        return {"type": "Polygon", "coordinates": _fix_polygon(geometry["coordinates"])}
    if geom_type == "MultiPolygon":
        return {"type": "MultiPolygon", "coordinates": [_fix_polygon(p) for p in geometry["coordinates"]]}
    raise GeometryError(f"unsupported deposit geometry type '{geom_type}'", feature_id, location)


def geometry_area_km2(geometry) -> float:
    """Area of a lon/lat polygon on the local projection at its centroid."""
    m_lon, m_lat = meters_per_degree(geometry.centroid.y)
    return geometry.area * m_lon * m_lat / 1e6


def _read_json(path: str) -> Tuple[object, str]:
    """Parsed document and raw text of a JSON file; decode errors name the line."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        return json.loads(text), text
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e.msg}", location=f"{path}:{e.lineno}:{e.colno}") from e


_ID_KEY = re.compile(r'"id"\s*:\s*"?([^",}\s]+)"?')


def _feature_location(index: int, feature, text: str, cursor: int) -> Tuple[str, int]:
    """
    Location label of a feature with its id and source line.

    Ids are matched in file order starting at `cursor`, so repeated ids
    resolve to the right occurrence. Returns the label and the new cursor.
    """
    location = f"features[{index}]"
    if not isinstance(feature, dict):
        return location, cursor
    feature_id = feature.get("id", (feature.get("properties") or {}).get("id"))
    if feature_id is None or str(feature_id) == "":
        return location, cursor

    location += f" id '{feature_id}'"
    pos = cursor
    while True:
        match = _ID_KEY.search(text, pos)
        if match is None:
            return location, cursor
        if match.group(1) == str(feature_id):
            line = text.count("\n", 0, match.start()) + 1
            return f"{location} line {line}", match.end()
        pos = match.end()


def _optional_float(value, name: str, feature_id: str, location: str) -> Optional[float]:
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise SchemaError(f"property '{name}' must be numeric, got {value!r}", feature_id, location)


def parse_deposit_feature(feature: Dict, location: str) -> SaltDeposit:
    """
    Parse one GeoJSON feature into a SaltDeposit.

    Args:
        feature: GeoJSON Feature dict
        location: Position used in error messages (e.g. "features[2]")

    Returns:
        SaltDeposit

    Raises:
        SchemaError: Missing or ill-typed property
        GeometryError: Invalid geometry
    """
    if not isinstance(feature, dict):
        raise SchemaError("feature must be a JSON object", None, location)
    props = feature.get("properties") or {}
    feature_id = feature.get("id", props.get("id"))
    if feature_id is None or str(feature_id) == "":
        raise SchemaError("missing required property 'id'", None, location)
    feature_id = str(feature_id)

    for name in REQUIRED_DEPOSIT_PROPERTIES:
        if name not in props:
            raise SchemaError(f"missing required property '{name}'", feature_id, location)

    salt_type = str(props["salt_type"]).lower()
    if salt_type not in SALT_TYPES:
        raise SchemaError(f"salt_type must be one of {SALT_TYPES}, got {salt_type!r}", feature_id, location)

    hint = str(props.get("suitability_hint") or "unknown").lower()
    if hint not in SUITABILITY_HINTS:
        raise SchemaError(f"suitability_hint must be one of {SUITABILITY_HINTS}", feature_id, location)

    flags: List[str] = []

    depth = props["depth_top_m"]
    if depth is None:
        depth_interval = None
        flags.append("depth_unknown")
    else:
        if not isinstance(depth, (list, tuple)) or len(depth) != 2:
            raise SchemaError("depth_top_m must be [min, max] or null", feature_id, location)
        d_min = _optional_float(depth[0], "depth_top_m", feature_id, location)
        d_max = _optional_float(depth[1], "depth_top_m", feature_id, location)
        if d_min is None or d_max is None:
            raise SchemaError("depth_top_m bounds must both be given", feature_id, location)
        if d_min <= 0 or d_max <= 0 or d_min > d_max:
            raise SchemaError(f"invalid depth interval [{d_min}, {d_max}]", feature_id, location)
        depth_interval = (d_min, d_max)

    thickness = _optional_float(props["thickness_m"], "thickness_m", feature_id, location)
    if thickness is None:
        flags.append("thickness_unknown")
    elif thickness <= 0:
        raise SchemaError("thickness_m must be positive", feature_id, location)

    insoluble = _optional_float(props["insoluble_fraction"], "insoluble_fraction", feature_id, location)
    if insoluble is None:
        flags.append("insolubles_unknown")
    elif not 0.0 <= insoluble <= 1.0:
        raise SchemaError("insoluble_fraction must lie in [0, 1]", feature_id, location)

    raw_geometry = feature.get("geometry")
    if not raw_geometry:
        raise GeometryError("feature has no geometry", feature_id, location)
    geometry = shape(_close_rings(raw_geometry, feature_id, location))
    if geometry.is_empty or not geometry.is_valid:
        raise GeometryError(f"invalid polygon: {explain_validity(geometry)}", feature_id, location)

    geo_area = geometry_area_km2(geometry)
    area = _optional_float(props["area_km2"], "area_km2", feature_id, location)
    if area is None:
        area = geo_area
        flags.append("area_from_geometry")
    if area <= 0:
        raise SchemaError("area_km2 must be positive", feature_id, location)
    if abs(area - geo_area) > AREA_TOLERANCE * geo_area:
        raise GeometryError(
            f"area_km2={area:.3f} inconsistent with geometry area {geo_area:.3f} km²",
            feature_id,
            location,
        )

    if flags:
        logger.debug(f"Deposit {feature_id} flagged: {', '.join(flags)}")

    return SaltDeposit(
        id=feature_id,
        name=str(props["name"]),
        geometry=geometry,
        salt_type=salt_type,
        depth_top_m=depth_interval,
        thickness_m=thickness,
        insoluble_fraction=insoluble,
        area_km2=area,
        suitability_hint=hint,
        country_iso3=str(props["country_iso3"] or "").upper(),
        parent_id=props.get("parent_id"),
        flags=tuple(flags),
    )


class DepositLoader:
    """
    Load and manage salt deposits in memory.

    Attributes:
        path (str): GeoJSON FeatureCollection file
        strict (bool): Raise on the first rejected feature
        deposits (list): Parsed SaltDeposit objects
        rejected (list): Dicts describing rejected features (non-strict mode)
    """

    def __init__(self, path: str, strict: bool = True):
        self.path = str(path)
        self.strict = strict
        self.deposits: List[SaltDeposit] = []
        self.rejected: List[Dict] = []
        self.load_deposits()

    def load_deposits(self) -> None:
        """Load deposits from the GeoJSON file."""
        if not os.path.exists(self.path):
            raise FileNotFoundError(f"Deposit file not found: {self.path}")

        collection, text = _read_json(self.path)

        if not isinstance(collection, dict) or collection.get("type") != "FeatureCollection":
            raise SchemaError("deposit file must be a GeoJSON FeatureCollection", location=self.path)

        seen = set()
        cursor = 0
        for i, feature in enumerate(collection.get("features", [])):
            location, cursor = _feature_location(i, feature, text, cursor)
            try:
                deposit = parse_deposit_feature(feature, location)
                if deposit.id in seen:
                    raise SchemaError("duplicate deposit id", deposit.id, location)
                seen.add(deposit.id)
                self.deposits.append(deposit)
            except (SchemaError, GeometryError) as e:
                if self.strict:
                    raise
                logger.warning(f"Rejected {location}: {e}")
                self.rejected.append({
                    "location": location,
                    "feature_id": getattr(e, "feature_id", None),
                    "reason": str(e),
                })

        logger.info(f"✓ Loaded {len(self.deposits)} deposits from {self.path}")
        if self.rejected:
            logger.warning(f"⚠ {len(self.rejected)} deposits rejected")

    def get_statistics(self) -> Dict:
        """Counts per salt type and country."""
        per_type: Dict[str, int] = {}
        per_country: Dict[str, int] = {}
        for d in self.deposits:
            per_type[d.salt_type] = per_type.get(d.salt_type, 0) + 1
            per_country[d.country_iso3 or "unassigned"] = per_country.get(d.country_iso3 or "unassigned", 0) + 1
        return {
            "total_deposits": len(self.deposits),
            "rejected_deposits": len(self.rejected),
            "deposits_per_salt_type": per_type,
            "deposits_per_country": per_country,
            "flagged_deposits": sum(1 for d in self.deposits if d.flags),
        }


def load_deposits(path: str, strict: bool = True) -> List[SaltDeposit]:
    """
    Convenience function to load deposits.

    Usage:
        deposits = load_deposits("data/sample/deposits.geojson")
    """
    return DepositLoader(path, strict=strict).deposits


def deposits_to_geojson(deposits: Sequence[SaltDeposit]) -> Dict:
    """Serialize deposits back to a GeoJSON FeatureCollection."""
    features = []
    for d in deposits:
        props = {
            "id": d.id,
            "name": d.name,
            "salt_type": d.salt_type,
            "depth_top_m": list(d.depth_top_m) if d.depth_top_m is not None else None,
            "thickness_m": d.thickness_m,
            "insoluble_fraction": d.insoluble_fraction,
            "area_km2": d.area_km2,
            "suitability_hint": d.suitability_hint,
            "country_iso3": d.country_iso3,
        }
        if d.parent_id is not None:
            props["parent_id"] = d.parent_id
        features.append({
            "type": "Feature",
            "id": d.id,
            "geometry": mapping(d.geometry),
            "properties": props,
        })
    return {"type": "FeatureCollection", "features": features}


# ==================== Exclusion layers ====================


def _parse_layer_entry(entry: Dict, base_dir: Path, index: int) -> ExclusionLayer:
    location = f"layers[{index}]"
    category = str(entry.get("category", "")).lower()
    if category not in EXCLUSION_CATEGORIES:
        raise ValidationError(f"{location}: unknown exclusion category {category!r}")

    if "path" not in entry:
        raise ValidationError(f"{location}: missing 'path'")
    path = Path(entry["path"])
    if not path.is_absolute():
        path = base_dir / path

    buffer_m = entry.get("buffer_m")
    if buffer_m is None:
        buffer_m = DEFAULT_BUFFERS_M.get(category, 0.0)
    try:
        buffer_m = float(buffer_m)
    except (TypeError, ValueError):
        raise ValidationError(f"{location}: buffer_m must be numeric")
    if buffer_m < 0:
        raise ValidationError(f"{location}: buffer_m must be >= 0, got {buffer_m}")

    horizontal = entry.get("applies_in_horizontal_mode")
    if category in HARD_CATEGORIES:
        if horizontal is False:
            raise ValidationError(f"{location}: {category} layers always apply in horizontal mode")
        horizontal = True
    elif horizontal is None:
        horizontal = False

    return ExclusionLayer(
        category=category,
        geometry_path=str(path),
        buffer_m=buffer_m,
        applies_in_horizontal_mode=bool(horizontal),
        name=str(entry.get("name") or path.stem),
    )


def load_exclusion_manifest(path: str) -> List[ExclusionLayer]:
    """
    Load the exclusion layer manifest.

    The manifest is a JSON document, either a list of layer entries or an
    object with a "layers" list. Each entry has "category", "path" and
    optionally "buffer_m", "applies_in_horizontal_mode" and "name".
    Relative paths are resolved against the manifest directory.

    Args:
        path: Manifest JSON file

    Returns:
        List of ExclusionLayer in manifest order

    Raises:
        ValidationError: Unknown category, negative buffer, bad entry
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Exclusion manifest not found: {path}")

    manifest, _ = _read_json(path)

    entries = manifest.get("layers", []) if isinstance(manifest, dict) else manifest
    if not isinstance(entries, list):
        raise ValidationError("exclusion manifest must list layers")

    base_dir = Path(path).resolve().parent
    layers = [_parse_layer_entry(entry, base_dir, i) for i, entry in enumerate(entries)]

    logger.info(f"✓ Loaded {len(layers)} exclusion layers from {path}")
    for layer in layers:
        logger.debug(f"  {layer.name}: {layer.category}, buffer {layer.buffer_m:.0f} m")
    return layers


def load_layer_geometries(layer: ExclusionLayer) -> ExclusionLayer:
    """
    Read the features of an exclusion layer.

    Returns a copy of the layer with `geometries` populated. Invalid
    polygons are repaired with shapely.make_valid.
    """
    if layer.geometries is not None:
        return layer
    if not os.path.exists(layer.geometry_path):
        raise FileNotFoundError(f"Exclusion layer not found: {layer.geometry_path}")

    data, _ = _read_json(layer.geometry_path)
    if not isinstance(data, dict):
        raise SchemaError("layer must be a GeoJSON object", location=layer.geometry_path)

    if data.get("type") == "FeatureCollection":
        raw = [feat.get("geometry") for feat in data.get("features", [])]
    elif data.get("type") == "Feature":
        raw = [data.get("geometry")]
    else:
        raw = [data]

    geometries = []
    for geom in raw:
        if not geom:
            continue
        g = shape(geom)
        if g.is_empty:
            continue
        if not g.is_valid:
            logger.warning(f"Repairing invalid geometry in layer {layer.name}")
            g = shapely.make_valid(g)
        geometries.append(g)

    logger.info(f"✓ Layer {layer.name}: {len(geometries)} features")
    return replace(layer, geometries=tuple(geometries))


# ==================== Tables ====================


def load_demand_table(path: str) -> pd.DataFrame:
    """
    Load annual electricity demand per country.

    CSV columns: country_iso3, annual_electricity_demand_TWh

    Returns:
        DataFrame sorted by country_iso3
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Demand table not found: {path}")

    df = pd.read_csv(path, encoding="utf-8", dtype={"country_iso3": str}, keep_default_na=False)
    for column in ("country_iso3", "annual_electricity_demand_TWh"):
        if column not in df.columns:
            raise ValidationError(f"{path}: missing column '{column}'")

    df = df[["country_iso3", "annual_electricity_demand_TWh"]].copy()
    df["country_iso3"] = df["country_iso3"].str.strip().str.upper()
    df["annual_electricity_demand_TWh"] = pd.to_numeric(df["annual_electricity_demand_TWh"], errors="coerce")

    if df["annual_electricity_demand_TWh"].isna().any():
        bad = df.loc[df["annual_electricity_demand_TWh"].isna(), "country_iso3"].tolist()
        raise ValidationError(f"{path}: non-numeric demand for {bad}")
    if (df["annual_electricity_demand_TWh"] < 0).any():
        bad = df.loc[df["annual_electricity_demand_TWh"] < 0, "country_iso3"].tolist()
        raise ValidationError(f"{path}: negative demand for {bad}")
    duplicated = df["country_iso3"][df["country_iso3"].duplicated()].tolist()
    if duplicated:
        raise ValidationError(f"{path}: duplicate country codes {duplicated}")

    logger.info(f"✓ Loaded demand for {len(df)} countries")
    return df.sort_values("country_iso3").reset_index(drop=True)


def load_region_map(path: str, declared_regions: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    Load the country -> region membership table.

    CSV columns: country_iso3, region_name

    Args:
        path: CSV file
        declared_regions: Optional list of allowed region names

    Returns:
        DataFrame sorted by country_iso3
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Region map not found: {path}")

    df = pd.read_csv(path, encoding="utf-8", dtype=str, keep_default_na=False)
    for column in ("country_iso3", "region_name"):
        if column not in df.columns:
            raise ValidationError(f"{path}: missing column '{column}'")

    df = df[["country_iso3", "region_name"]].copy()
    df["country_iso3"] = df["country_iso3"].str.strip().str.upper()
    df["region_name"] = df["region_name"].str.strip()

    duplicated = df["country_iso3"][df["country_iso3"].duplicated()].tolist()
    if duplicated:
        raise ValidationError(f"{path}: countries assigned more than once {duplicated}")
    if declared_regions is not None:
        unknown = sorted(set(df["region_name"]) - set(declared_regions))
        if unknown:
            raise ValidationError(f"{path}: undeclared regions {unknown}")

    logger.info(f"✓ Loaded {df['region_name'].nunique()} regions for {len(df)} countries")
    return df.sort_values("country_iso3").reset_index(drop=True)


# ==================== Grid ====================


def build_local_grid(deposit: SaltDeposit, cell_size_m: float = 100.0, margin_m: float = 0.0) -> LocalGrid:
    """
    Build the local metric grid covering a deposit plus a margin.

    The grid is anchored at the deposit centroid; its edges are snapped to
    multiples of the cell size in projected coordinates so the same
    deposit always yields the same grid.

    Args:
        deposit: Deposit to cover
        cell_size_m: Cell edge length in meters
        margin_m: Extra coverage around the deposit bounding box
                  (at least the largest exclusion buffer)

    Returns:
        LocalGrid

    Raises:
        ValidationError: cell_size_m <= 0 or margin_m < 0
        SplitRequiredError: deposit extent above 2000 km
    """
    if cell_size_m is None or cell_size_m <= 0:
        raise ValidationError(f"cell_size_m must be positive, got {cell_size_m}")
    if margin_m < 0:
        raise ValidationError(f"margin_m must be >= 0, got {margin_m}")

    centroid = deposit.geometry.centroid
    anchor_lon, anchor_lat = float(centroid.x), float(centroid.y)
    m_lon, m_lat = meters_per_degree(anchor_lat)

    min_lon, min_lat, max_lon, max_lat = deposit.geometry.bounds
    x0, x1 = (min_lon - anchor_lon) * m_lon, (max_lon - anchor_lon) * m_lon
    y0, y1 = (min_lat - anchor_lat) * m_lat, (max_lat - anchor_lat) * m_lat

    extent = max(x1 - x0, y1 - y0)
    if extent > MAX_EXTENT_M:
        raise SplitRequiredError(
            f"deposit {deposit.id} spans {extent / 1000:.0f} km; split it into parts below "
            f"{MAX_EXTENT_M / 1000:.0f} km"
        )

    c = cell_size_m
    x_min = math.floor((x0 - margin_m) / c + SNAP_EPS) * c
    x_max = math.ceil((x1 + margin_m) / c - SNAP_EPS) * c
    y_min = math.floor((y0 - margin_m) / c + SNAP_EPS) * c
    y_max = math.ceil((y1 + margin_m) / c - SNAP_EPS) * c

    grid = LocalGrid(
        anchor_lon=anchor_lon,
        anchor_lat=anchor_lat,
        x_min=x_min,
        y_max=y_max,
        cell_size_m=float(c),
        width=max(1, int(round((x_max - x_min) / c))),
        height=max(1, int(round((y_max - y_min) / c))),
        lattice_x=math.floor(x0 / c + SNAP_EPS) * c,
        lattice_y=math.ceil(y1 / c - SNAP_EPS) * c,
    )
    logger.debug(f"Grid for {deposit.id}: {grid.width} x {grid.height} cells of {c:.0f} m")
    return grid
