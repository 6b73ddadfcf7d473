#!/usr/bin/env python3
"""
Cavern placement inside eligible land.

This module:
- Defines the cavern geometry per salt type (domal / bedded)
- Packs caverns on a square lattice whose pitch is the separation distance
- Assigns each cavern the deepest admissible top depth
- Checks minimum center-to-center separation of a placement set
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from scripts.eligibility import EligibilityRaster
from scripts.errors import DepthWindowError, ValidationError
from scripts.load_data import SaltDeposit

logger = logging.getLogger(__name__)

SEPARATION_FACTORS = (3, 4, 5)

# (height_m, diameter_m, volume_m3)
CAVERN_GEOMETRY: Dict[str, Tuple[float, float, float]] = {
    "domal": (300.0, 58.0, 750_000.0),
    "bedded": (120.0, 84.0, 500_000.0),
}

# Float slack when mapping lattice nodes onto cells
_NODE_EPS = 1e-9


@dataclass(frozen=True)
class CavernSpec:
    """
    Geometry of one cavern and its separation rule.

    Attributes:
        shape (str): "domal" or "bedded"
        height_m (float): Cavern height
        diameter_m (float): Cavern diameter
        volume_m3 (float): Geometric cavern volume
        separation_factor (int): Center distance as multiple of the diameter
    """

    shape: str
    height_m: float
    diameter_m: float
    volume_m3: float
    separation_factor: int = 4

    def __post_init__(self):
        if self.shape not in CAVERN_GEOMETRY:
            raise ValidationError(f"cavern shape must be one of {tuple(CAVERN_GEOMETRY)}, got {self.shape!r}")
        if self.separation_factor not in SEPARATION_FACTORS:
            raise ValidationError(
                f"separation_factor must be one of {SEPARATION_FACTORS}, got {self.separation_factor!r}"
            )
        if (self.height_m, self.diameter_m, self.volume_m3) != CAVERN_GEOMETRY[self.shape]:
            raise ValidationError(f"{self.shape} caverns are fixed at {CAVERN_GEOMETRY[self.shape]}")

    @property
    def separation_m(self) -> float:
        return self.separation_factor * self.diameter_m

    @classmethod
    def for_salt_type(cls, salt_type: str, separation_factor: int = 4) -> "CavernSpec":
        if salt_type not in CAVERN_GEOMETRY:
            raise ValidationError(f"unknown salt type {salt_type!r}")
        height, diameter, volume = CAVERN_GEOMETRY[salt_type]
        return cls(salt_type, height, diameter, volume, separation_factor)


@dataclass(frozen=True)
class CavernPlacement:
    """
    One cavern at a fixed location.

    Attributes:
        deposit_id (str): Host deposit
        placement_id (str): "<deposit>-<row>-<col>", stable sort key
        row (int): Grid row of the wellhead cell
        col (int): Grid column of the wellhead cell
        lon (float): Longitude of the lattice node
        lat (float): Latitude of the lattice node
        x_m (float): Local easting of the node
        y_m (float): Local northing of the node
        spec (CavernSpec): Cavern geometry
        insoluble_fraction (float | None): Host deposit insolubles
        country_iso3 (str): Host country ("" if unassigned)
        cavern_top_depth_m (float | None): Set by assign_depth
        capacity_GWh (float | None): Set by the capacity stage
    """

    deposit_id: str
    placement_id: str
    row: int
    col: int
    lon: float
    lat: float
    x_m: float
    y_m: float
    spec: CavernSpec
    insoluble_fraction: Optional[float] = None
    country_iso3: str = ""
    cavern_top_depth_m: Optional[float] = None
    capacity_GWh: Optional[float] = None


def pack_caverns(
    raster: EligibilityRaster,
    spec: CavernSpec,
    deposit: Optional[SaltDeposit] = None,
) -> List[CavernPlacement]:
    """
    Pack caverns on a square lattice over an eligibility mask.

    The lattice starts at the grid's lattice origin (the north-west corner
    of the deposit footprint, so a wider exclusion margin does not move it)
    and extends over the whole grid with pitch equal to the separation
    distance. A node is kept iff the cell containing it is eligible.

    Args:
        raster: Eligibility raster of one deposit
        spec: Cavern spec (shape and separation)
        deposit: Host deposit for ids, insolubles and country

    Returns:
        Placements sorted by (row, col); possibly empty
    """
    grid = raster.grid
    c = grid.cell_size_m
    pitch = spec.separation_m
    deposit_id = deposit.id if deposit is not None else "deposit"

    ox, oy = grid.lattice_origin
    kx = np.arange(
        -math.floor((ox - grid.x_min) / pitch + _NODE_EPS),
        math.ceil((grid.x_max - ox) / pitch - _NODE_EPS),
    )
    ky = np.arange(
        -math.floor((grid.y_max - oy) / pitch + _NODE_EPS),
        math.ceil((oy - grid.y_min) / pitch - _NODE_EPS),
    )
    node_x = ox + kx * pitch
    node_y = oy - ky * pitch
    cols = np.floor((node_x - grid.x_min) / c + _NODE_EPS).astype(int)
    rows = np.floor((grid.y_max - node_y) / c + _NODE_EPS).astype(int)

    placements = []
    for j, row in enumerate(rows):
        if row < 0 or row >= grid.height:
            continue
        for i, col in enumerate(cols):
            if col < 0 or col >= grid.width or not raster.mask[row, col]:
                continue
            x = node_x[i]
            y = node_y[j]
            lon, lat = grid.to_lonlat(x, y)
            placements.append(CavernPlacement(
                deposit_id=deposit_id,
                placement_id=f"{deposit_id}-{row:05d}-{col:05d}",
                row=int(row),
                col=int(col),
                lon=float(lon),
                lat=float(lat),
                x_m=float(x),
                y_m=float(y),
                spec=spec,
                insoluble_fraction=deposit.insoluble_fraction if deposit is not None else None,
                country_iso3=deposit.country_iso3 if deposit is not None else "",
            ))

    placements.sort(key=lambda p: (p.row, p.col))
    logger.debug(f"{deposit_id}: {len(placements)} caverns at pitch {pitch:.0f} m")
    return placements


def assign_depth(
    placement: CavernPlacement,
    deposit: SaltDeposit,
    window: Tuple[float, float],
) -> CavernPlacement:
    """
    Place the cavern top as deep as the window allows.

    top = min(window_max - height, deposit_depth_max), clamped to at least
    max(window_min, deposit_depth_min). Deposits of unknown depth use the
    window as their depth interval.

    Args:
        placement: Placement without depth
        deposit: Host deposit
        window: Admissible depth interval (typically geology.suitable_depth_window)

    Returns:
        Placement with cavern_top_depth_m set

    Raises:
        DepthWindowError: Window thinner than the cavern height
    """
    w_min, w_max = window
    height = placement.spec.height_m
    d_min, d_max = deposit.depth_top_m if deposit.depth_top_m is not None else window

    if w_max - w_min < height:
        raise DepthWindowError(
            f"window [{w_min:.0f}, {w_max:.0f}] m too thin for a {height:.0f} m {placement.spec.shape} cavern"
        )

    top = min(w_max - height, d_max)
    top = max(top, w_min, d_min)
    if top + height > w_max:
        raise DepthWindowError(
            f"cavern bottom at {top + height:.0f} m below window max {w_max:.0f} m"
        )
    return replace(placement, cavern_top_depth_m=float(top))


def place_deposit(
    raster: EligibilityRaster,
    deposit: SaltDeposit,
    window: Optional[Tuple[float, float]],
    separation_factor: int = 4,
) -> Tuple[List[CavernPlacement], Counter]:
    """
    Pack a deposit and assign depths.

    Returns:
        Tuple of (accepted placements, Counter of rejection reasons)
    """
    spec = CavernSpec.for_salt_type(deposit.salt_type, separation_factor)
    candidates = pack_caverns(raster, spec, deposit)
    rejected: Counter = Counter()

    if window is None:
        if candidates:
            rejected["outside depth window"] += len(candidates)
            logger.warning(f"⚠ {deposit.id}: no admissible depth, {len(candidates)} caverns rejected")
        return [], rejected

    accepted = []
    for placement in candidates:
        try:
            accepted.append(assign_depth(placement, deposit, window))
        except DepthWindowError as e:
            rejected[e.reason] += 1

    if rejected:
        logger.warning(f"⚠ {deposit.id}: {sum(rejected.values())} caverns rejected ({', '.join(rejected)})")
    return accepted, rejected


def min_pairwise_distance(placements: Sequence[CavernPlacement], grid=None) -> float:
    """
    Smallest center distance between any two placements (inf for < 2).

    With a grid, distances are recomputed from lon/lat on that grid's
    projection; otherwise the stored local coordinates are used.
    """
    if len(placements) < 2:
        return math.inf
    if grid is not None:
        xs, ys = grid.to_local([p.lon for p in placements], [p.lat for p in placements])
    else:
        xs = np.array([p.x_m for p in placements])
        ys = np.array([p.y_m for p in placements])
    return float(pdist(np.column_stack([xs, ys])).min())
