#!/usr/bin/env python3
"""
Unit Tests for land eligibility.

This module contains pytest tests for:
- rasterize_exclusion(): buffered exclusion masks
- combine(): footprint and exclusions into one raster
- apply_drilling_mode(): horizontal drilling reach
- eligible_area_km2() and the PGM debug export

The oracles evaluate every cell center with plain numpy geometry,
independent of shapely and scipy.

Run tests with:
    pytest tests/test_eligibility.py -v
"""

import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely.geometry import LineString, Point

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from scripts.eligibility import (
    DrillingMode,
    EligibilityRaster,
    apply_drilling_mode,
    build_eligibility,
    combine,
    deposit_mask,
    eligible_area_km2,
    rasterize_exclusion,
    write_pgm,
)
from scripts.errors import ValidationError
from scripts.load_data import ExclusionLayer, LocalGrid, build_local_grid
from tests.conftest import local_box, local_to_lonlat, make_deposit


def layer(category, geometries, buffer_m, hard=False, name=None):
    """Exclusion layer with in-memory geometries."""
    return ExclusionLayer(
        category=category,
        geometry_path="",
        buffer_m=buffer_m,
        applies_in_horizontal_mode=hard,
        name=name or category,
        geometries=tuple(geometries),
    )


def centers(grid):
    cols = np.arange(grid.width)
    rows = np.arange(grid.height)
    return np.meshgrid(grid.x_min + (cols + 0.5) * grid.cell_size_m, grid.y_max - (rows + 0.5) * grid.cell_size_m)


# Settlement at the anchor, fault along x = 2520 m, reserve over x in [-4020, -2020], y in [1030, 3030]
SETTLEMENT_XY = (0.0, 0.0)
FAULT_X = 2520.0
RESERVE = (-4020.0, 1030.0, -2020.0, 3030.0)


class TestEligibilityOracle:
    """Brute-force oracle on a 10 km x 10 km deposit at 100 m resolution."""

    @pytest.fixture
    def deposit(self):
        return make_deposit(width_m=10_000.0, height_m=10_000.0)

    @pytest.fixture
    def grid(self, deposit):
        return build_local_grid(deposit, cell_size_m=100.0)

    @pytest.fixture
    def layers(self):
        lon_f, lat_a = local_to_lonlat(FAULT_X, -8000.0)
        _, lat_b = local_to_lonlat(FAULT_X, 8000.0)
        return [
            layer("settlement", [Point(*local_to_lonlat(*SETTLEMENT_XY))], 2000.0, hard=True),
            layer("seismic_fault", [LineString([(lon_f, lat_a), (lon_f, lat_b)])], 200.0, hard=True),
            layer("protected_area", [local_box(*RESERVE)], 0.0),
        ]

    @pytest.fixture
    def expected(self, grid):
        """Fixture: per-cell brute-force eligibility."""
        xs, ys = centers(grid)
        settled = np.hypot(xs - SETTLEMENT_XY[0], ys - SETTLEMENT_XY[1]) <= 2000.0
        faulted = np.abs(xs - FAULT_X) <= 200.0
        x0, y0, x1, y1 = RESERVE
        reserved = (xs >= x0) & (xs <= x1) & (ys >= y0) & (ys <= y1)
        return ~(settled | faulted | reserved)

    # ==================== Tests for rasterize_exclusion() ====================

    def test_settlement_disk(self, grid, layers):
        """Test that a 2000 m buffered point excludes a disk of about 1257 cells."""
        mask = rasterize_exclusion(layers[0], grid)
        assert mask.sum() == pytest.approx(np.pi * 20 ** 2, rel=0.01), "Disk of radius 20 cells expected"

    def test_fault_band(self, grid, layers):
        """Test that a 200 m buffered line excludes a band 4 cells wide."""
        mask = rasterize_exclusion(layers[1], grid)
        assert (mask.sum(axis=1) == 4).all(), "Every row should have a 4 cell band"

    def test_empty_layer(self, grid):
        """Test that an empty layer gives an all-false mask."""
        assert not rasterize_exclusion(layer("forest", [], 0.0), grid).any()

    def test_layer_outside_grid(self, grid):
        """Test that features far outside the grid give an empty mask."""
        far = Point(*local_to_lonlat(200_000.0, 0.0))
        assert not rasterize_exclusion(layer("airport", [far], 20_000.0), grid).any()

    # ==================== Tests for combine() ====================

    def test_mask_matches_brute_force(self, deposit, grid, layers, expected):
        """Test that the eligibility mask equals the per-cell oracle exactly."""
        raster = build_eligibility(deposit, grid, layers)
        differing = int((raster.mask != expected).sum())
        assert differing == 0, f"{differing} cells differ from the brute-force oracle"

    def test_area_matches_brute_force(self, deposit, grid, layers, expected):
        """Test eligible area = oracle cell count x 0.01 km²."""
        raster = build_eligibility(deposit, grid, layers)
        assert eligible_area_km2(raster) == pytest.approx(expected.sum() * 0.01)

    def test_provenance_attributes_each_cell_once(self, deposit, grid, layers, expected):
        """Test that provenance counts add up to the excluded cells."""
        raster = build_eligibility(deposit, grid, layers)
        assert [p["name"] for p in raster.provenance] == ["settlement", "seismic_fault", "protected_area"]
        assert sum(p["excluded_cells"] for p in raster.provenance) == int((~expected).sum())
        assert all(p["gross_cells"] >= p["excluded_cells"] for p in raster.provenance)

    def test_layer_order_does_not_change_mask(self, deposit, grid, layers):
        """Test that the mask is independent of layer order."""
        forward = build_eligibility(deposit, grid, layers).mask
        backward = build_eligibility(deposit, grid, layers[::-1]).mask
        assert np.array_equal(forward, backward)


class TestCombine:
    """Test suite for combine() edge cases."""

    @pytest.fixture
    def grid(self):
        return LocalGrid(anchor_lon=0.0, anchor_lat=0.0, x_min=0.0, y_max=1000.0,
                         cell_size_m=100.0, width=10, height=10)

    # ==================== Tests for combine() ====================

    def test_no_exclusions(self, grid):
        """Test that without exclusions the deposit interior is eligible."""
        inside = np.zeros(grid.shape, dtype=bool)
        inside[2:8, 3:9] = True
        assert np.array_equal(combine(grid, inside, []).mask, inside)

    def test_full_exclusion(self, grid):
        """Test that an exclusion covering the grid leaves nothing."""
        inside = np.ones(grid.shape, dtype=bool)
        assert combine(grid, inside, [np.ones(grid.shape, dtype=bool)]).eligible_cells == 0

    @settings(max_examples=50)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_overlapping_exclusions_equal_union(self, seed):
        """Test that two overlapping exclusions act as their union."""
        grid = LocalGrid(0.0, 0.0, 0.0, 1000.0, 100.0, 10, 10)
        rng = np.random.default_rng(seed)
        inside = rng.random(grid.shape) < 0.8
        a, b = rng.random(grid.shape) < 0.3, rng.random(grid.shape) < 0.3
        assert np.array_equal(combine(grid, inside, [a, b]).mask, combine(grid, inside, [a | b]).mask)

    def test_shape_mismatch(self, grid):
        """Test that masks of another shape are rejected."""
        with pytest.raises(ValidationError):
            combine(grid, np.ones(grid.shape, dtype=bool), [np.ones((3, 3), dtype=bool)])

    def test_area_of_hundred_cells(self, grid):
        """Test that 100 eligible cells at 100 m give 1 km²."""
        raster = combine(grid, np.ones(grid.shape, dtype=bool), [])
        assert eligible_area_km2(raster) == pytest.approx(1.0)
        assert eligible_area_km2(combine(grid, np.zeros(grid.shape, dtype=bool), [])) == 0


MONO_DEPOSIT = make_deposit(width_m=6000.0, height_m=6000.0)
MONO_GRID = build_local_grid(MONO_DEPOSIT, cell_size_m=200.0)

feature_geometries = st.one_of(
    st.tuples(st.floats(-5000, 5000), st.floats(-5000, 5000)).map(lambda xy: Point(*local_to_lonlat(*xy))),
    st.tuples(
        st.floats(-5000, 5000), st.floats(-5000, 5000), st.floats(50, 2000), st.floats(50, 2000)
    ).map(lambda b: local_box(b[0], b[1], b[0] + b[2], b[1] + b[3])),
)
random_layers = st.lists(
    st.tuples(st.lists(feature_geometries, min_size=1, max_size=3), st.floats(0, 1500)),
    max_size=3,
)


def area_with(layers):
    return eligible_area_km2(build_eligibility(MONO_DEPOSIT, MONO_GRID, layers))


def as_layers(specs):
    return [layer("other", geoms, buffer_m, name=f"layer_{i}") for i, (geoms, buffer_m) in enumerate(specs)]


class TestExclusionMonotonicity:
    """Property tests: more or wider exclusions never add eligible area."""

    # ==================== Tests for build_eligibility() ====================

    @settings(max_examples=40, deadline=None)
    @given(base=random_layers, extra=st.lists(feature_geometries, min_size=1, max_size=3), buffer_m=st.floats(0, 1500))
    def test_added_layer_never_increases_area(self, base, extra, buffer_m):
        """Test that adding an exclusion layer never increases eligible area."""
        layers = as_layers(base)
        before = area_with(layers)
        after = area_with(layers + [layer("other", extra, buffer_m, name="extra")])
        assert after <= before

    @settings(max_examples=40, deadline=None)
    @given(
        base=random_layers,
        geoms=st.lists(feature_geometries, min_size=1, max_size=3),
        buffer_m=st.floats(0, 1500),
        widen=st.floats(0, 1500),
    )
    def test_larger_buffer_never_increases_area(self, base, geoms, buffer_m, widen):
        """Test that growing one layer's buffer never increases eligible area."""
        layers = as_layers(base)
        narrow = area_with(layers + [layer("other", geoms, buffer_m, name="grown")])
        wide = area_with(layers + [layer("other", geoms, buffer_m + widen, name="grown")])
        assert wide <= narrow

    def test_settlement_buffers_shrink_area(self):
        """Test eligible area over settlement buffers 0, 500, 1000 and 2000 m."""
        town = [Point(*local_to_lonlat(0.0, 0.0))]
        areas = [area_with([layer("settlement", town, b)]) for b in (0.0, 500.0, 1000.0, 2000.0)]
        assert areas == sorted(areas, reverse=True)
        assert areas[0] > areas[-1]



class TestDrillingMode:
    """Test suite for apply_drilling_mode() on a 12 km x 3 km deposit at 150 m."""

    RESERVE_X = (-6500.0, 2000.0)
    SETTLEMENT_XY = (-4000.0, 0.0)

    @pytest.fixture
    def deposit(self):
        return make_deposit(width_m=12_000.0, height_m=3_000.0)

    @pytest.fixture
    def grid(self, deposit):
        return build_local_grid(deposit, cell_size_m=150.0)

    @pytest.fixture
    def layers(self):
        x0, x1 = self.RESERVE_X
        return [
            layer("settlement", [Point(*local_to_lonlat(*self.SETTLEMENT_XY))], 2000.0, hard=True),
            layer("protected_area", [local_box(x0, -2000.0, x1, 2000.0)], 0.0),
        ]

    # ==================== Tests for apply_drilling_mode() ====================

    def test_vertical_is_identity(self, deposit, grid, layers):
        """Test that vertical mode returns the raster unchanged."""
        raster = build_eligibility(deposit, grid, layers)
        assert apply_drilling_mode(raster, DrillingMode("vertical"), []) is raster

    def test_horizontal_matches_brute_force_dilation(self, deposit, grid, layers):
        """Test that reclaimed cells are exactly those within reach of eligible land."""
        vertical = build_eligibility(deposit, grid, layers)
        horizontal = build_eligibility(deposit, grid, layers, DrillingMode("horizontal", 5000.0))

        xs, ys = centers(grid)
        hard = np.hypot(xs - self.SETTLEMENT_XY[0], ys - self.SETTLEMENT_XY[1]) <= 2000.0
        ex, ey = xs[vertical.mask], ys[vertical.mask]
        nearest = np.sqrt((xs.ravel()[:, None] - ex[None, :]) ** 2 + (ys.ravel()[:, None] - ey[None, :]) ** 2).min(axis=1)
        reachable = nearest.reshape(grid.shape) <= 5000.0
        expected = vertical.mask | (vertical.inside & ~hard & reachable)

        assert np.array_equal(horizontal.mask, expected), "Horizontal mask should equal the dilation oracle"
        assert horizontal.eligible_cells > vertical.eligible_cells, "Some reserve cells should be reclaimed"
        assert not (horizontal.mask & hard).any(), "Settlement buffer must never be reclaimed"

    def test_no_gain_without_eligible_cells(self, grid):
        """Test that dilation of an empty eligible set gains nothing."""
        raster = EligibilityRaster(grid=grid, mask=np.zeros(grid.shape, dtype=bool),
                                   inside=np.ones(grid.shape, dtype=bool))
        result = apply_drilling_mode(raster, DrillingMode("horizontal", 5000.0), [])
        assert result.eligible_cells == 0

    def test_invalid_mode(self, grid):
        """Test that an unknown drilling mode is rejected."""
        raster = EligibilityRaster(grid=grid, mask=np.ones(grid.shape, dtype=bool),
                                   inside=np.ones(grid.shape, dtype=bool))
        with pytest.raises(ValidationError):
            apply_drilling_mode(raster, DrillingMode("diagonal"), [])


class TestDepositMaskAndExport:
    """Test suite for deposit_mask() and write_pgm()."""

    def test_deposit_mask_covers_rectangle(self):
        """Test that every cell of an aligned rectangle is inside."""
        deposit = make_deposit(width_m=2000.0, height_m=1000.0)
        grid = build_local_grid(deposit, 100.0, margin_m=500.0)
        inside = deposit_mask(deposit, grid)
        assert inside.sum() == 20 * 10
        assert not inside[0].any(), "Margin rows lie outside the deposit"

    def test_write_pgm(self, tmp_path):
        """Test the binary PGM layout."""
        mask = np.array([[True, False, True], [False, True, False]])
        path = tmp_path / "masks" / "m.pgm"
        write_pgm(mask, str(path))
        data = path.read_bytes()
        assert data.startswith(b"P5\n3 2\n255\n")
        assert data[-6:] == bytes([255, 0, 255, 0, 255, 0])
