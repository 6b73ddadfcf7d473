#!/usr/bin/env python3
"""
Land eligibility rasters for cavern placement.

This module:
- Rasterizes buffered exclusion layers onto a deposit's LocalGrid
- Combines the deposit footprint and all exclusions into one eligibility mask
- Extends eligibility below soft exclusions for horizontal (directional) drilling
- Reports per-layer provenance of excluded cells

Cell membership rule: a cell is excluded iff its center lies within the
layer geometry dilated by the buffer distance, measured in local meters.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import shapely
from scipy import ndimage

from scripts.errors import ValidationError
from scripts.load_data import ExclusionLayer, LocalGrid, SaltDeposit, load_layer_geometries

logger = logging.getLogger(__name__)

DRILLING_MODES = ("vertical", "horizontal")


@dataclass(frozen=True)
class DrillingMode:
    """
    Well trajectory assumption.

    Attributes:
        mode (str): "vertical" or "horizontal"
        reach_m (float): Maximal lateral offset in horizontal mode
    """

    mode: str = "vertical"
    reach_m: float = 5000.0

    def validate(self) -> "DrillingMode":
        if self.mode not in DRILLING_MODES:
            raise ValidationError(f"drilling mode must be one of {DRILLING_MODES}, got {self.mode!r}")
        if self.mode == "horizontal" and self.reach_m <= 0:
            raise ValidationError("reach_m must be positive in horizontal mode")
        return self


@dataclass
class EligibilityRaster:
    """
    Eligibility of every grid cell of one deposit.

    Attributes:
        grid (LocalGrid): Grid the mask is defined on
        mask (np.ndarray): True where caverns may be placed
        inside (np.ndarray): True where the cell center lies in the deposit
        provenance (list): Dicts with layer name, category, cells excluded
                           (overlaps attributed to the first layer) and
                           gross cells excluded by the layer alone
    """

    grid: LocalGrid
    mask: np.ndarray
    inside: np.ndarray
    provenance: List[Dict] = field(default_factory=list)

    @property
    def eligible_cells(self) -> int:
        return int(np.count_nonzero(self.mask))


def deposit_mask(deposit: SaltDeposit, grid: LocalGrid) -> np.ndarray:
    """Cells whose center lies inside the deposit polygon (boundary included)."""
    polygon = grid.project_geometry(deposit.geometry)
    xs, ys = grid.cell_centers()
    return shapely.intersects_xy(polygon, xs, ys)


def rasterize_exclusion(layer: ExclusionLayer, grid: LocalGrid) -> np.ndarray:
    """
    Rasterize one exclusion layer with its buffer.

    Distances are exact Euclidean distances from cell centers to the
    layer geometry in local meters; only the window around each feature's
    buffered bounding box is evaluated.

    Args:
        layer: Exclusion layer (geometries are loaded on demand)
        grid: Target grid

    Returns:
        Boolean mask, True = excluded. Features outside the grid give an
        all-False mask.
    """
    layer = load_layer_geometries(layer)
    excluded = np.zeros(grid.shape, dtype=bool)
    if not layer.geometries:
        return excluded

    buffer_m = layer.buffer_m
    c = grid.cell_size_m
    xs, ys = grid.cell_centers()

    for geometry in layer.geometries:
        local = grid.project_geometry(geometry)
        min_x, min_y, max_x, max_y = local.bounds
        min_x, min_y = min_x - buffer_m, min_y - buffer_m
        max_x, max_y = max_x + buffer_m, max_y + buffer_m
        if max_x < grid.x_min or min_x > grid.x_max or max_y < grid.y_min or min_y > grid.y_max:
            continue

        # window of cells whose centers may fall inside the buffered bbox
        col0 = max(0, int(np.floor((min_x - grid.x_min) / c - 0.5)))
        col1 = min(grid.width, int(np.ceil((max_x - grid.x_min) / c + 0.5)))
        row0 = max(0, int(np.floor((grid.y_max - max_y) / c - 0.5)))
        row1 = min(grid.height, int(np.ceil((grid.y_max - min_y) / c + 0.5)))
        if col0 >= col1 or row0 >= row1:
            continue

        wx = xs[row0:row1, col0:col1]
        wy = ys[row0:row1, col0:col1]
        if buffer_m == 0:
            hit = shapely.intersects_xy(local, wx, wy)
        else:
            shapely.prepare(local)
            points = shapely.points(wx, wy)
            hit = shapely.distance(local, points) <= buffer_m
        excluded[row0:row1, col0:col1] |= hit

    return excluded


def combine(
    grid: LocalGrid,
    deposit_polygon_mask: np.ndarray,
    exclusions: Sequence[np.ndarray],
    labels: Optional[Sequence[Dict]] = None,
) -> EligibilityRaster:
    """
    Combine the deposit footprint with exclusion masks.

    eligible = inside deposit AND NOT any exclusion. The mask does not
    depend on the order of exclusions; only the provenance attribution
    of overlapping cells does (first layer wins).

    Args:
        grid: Grid shared by all masks
        deposit_polygon_mask: Cells inside the deposit
        exclusions: Exclusion masks (True = excluded)
        labels: Optional dicts with "name"/"category" per exclusion

    Returns:
        EligibilityRaster

    Raises:
        ValidationError: Mask shape differs from the grid
    """
    inside = np.asarray(deposit_polygon_mask, dtype=bool)
    if inside.shape != grid.shape:
        raise ValidationError(f"deposit mask shape {inside.shape} != grid shape {grid.shape}")

    excluded = np.zeros(grid.shape, dtype=bool)
    provenance = []
    for i, mask in enumerate(exclusions):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != grid.shape:
            raise ValidationError(f"exclusion {i} shape {mask.shape} != grid shape {grid.shape}")
        newly = mask & inside & ~excluded
        label = dict(labels[i]) if labels is not None else {"name": f"layer_{i}", "category": "other"}
        label["excluded_cells"] = int(np.count_nonzero(newly))
        label["gross_cells"] = int(np.count_nonzero(mask & inside))
        provenance.append(label)
        excluded |= mask

    return EligibilityRaster(grid=grid, mask=inside & ~excluded, inside=inside, provenance=provenance)


def apply_drilling_mode(
    raster: EligibilityRaster,
    mode: DrillingMode,
    hard_exclusions: Sequence[np.ndarray],
) -> EligibilityRaster:
    """
    Extend eligibility for horizontal drilling.

    In horizontal mode, cells inside the deposit that are not hard
    excluded (settlements, seismic faults) become eligible when they lie
    within reach_m of a vertically eligible cell, measured center to
    center. Vertical mode returns the raster unchanged.
    """
    mode.validate()
    if mode.mode == "vertical" or not raster.mask.any():
        return raster

    hard = np.zeros(raster.grid.shape, dtype=bool)
    for mask in hard_exclusions:
        hard |= np.asarray(mask, dtype=bool)

    c = raster.grid.cell_size_m
    distance = ndimage.distance_transform_edt(~raster.mask, sampling=(c, c))
    reachable = distance <= mode.reach_m
    extended = raster.mask | (raster.inside & ~hard & reachable)

    gained = int(np.count_nonzero(extended)) - raster.eligible_cells
    logger.debug(f"Horizontal drilling reclaimed {gained} cells")
    return replace(raster, mask=extended)


def eligible_area_km2(raster: EligibilityRaster) -> float:
    """Eligible cell count times cell area."""
    return raster.eligible_cells * raster.grid.cell_area_km2


def build_eligibility(
    deposit: SaltDeposit,
    grid: LocalGrid,
    layers: Sequence[ExclusionLayer],
    mode: DrillingMode = DrillingMode(),
) -> EligibilityRaster:
    """
    Full eligibility chain for one deposit: footprint, exclusions, drilling mode.

    Args:
        deposit: Deposit
        grid: Its LocalGrid
        layers: Exclusion layers in manifest order
        mode: Drilling mode

    Returns:
        EligibilityRaster
    """
    inside = deposit_mask(deposit, grid)
    masks = [rasterize_exclusion(layer, grid) for layer in layers]
    labels = [{"name": layer.name, "category": layer.category} for layer in layers]
    raster = combine(grid, inside, masks, labels)

    hard = [m for m, layer in zip(masks, layers) if layer.applies_in_horizontal_mode]
    raster = apply_drilling_mode(raster, mode, hard)

    logger.info(
        f"✓ {deposit.id}: {raster.eligible_cells} eligible cells "
        f"({eligible_area_km2(raster):.2f} km² of {np.count_nonzero(inside) * grid.cell_area_km2:.2f} km²)"
    )
    return raster


def write_pgm(mask: np.ndarray, path: str) -> None:
    """Write a mask as binary PGM (P5), 255 = eligible, for visual inspection."""
    mask = np.asarray(mask, dtype=bool)
    height, width = mask.shape
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write((mask.astype(np.uint8) * 255).tobytes())
