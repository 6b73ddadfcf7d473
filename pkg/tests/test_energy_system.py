#!/usr/bin/env python3
"""
Unit Tests for storage need, sufficiency and regional sharing.

This module contains pytest tests for:
- storage_need() and sufficiency() with their sentinels
- build_country_ledger() and regional_sufficiency()
- storage_abroad(): greedy allocation inside regions
- balanced_demand_share(), counts and buildable storage
- Build-out indicators: transport increment, expansion rate, lifetime

Run tests with:
    pytest tests/test_energy_system.py -v
"""

import itertools
import math
import os
import sys

import pandas as pd
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from scripts.energy_system import (
    SufficiencyLedger,
    balanced_demand_share,
    build_country_ledger,
    buildable_storage,
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
    storage_need,
    sufficiency,
    sufficiency_pct_label,
    sufficient_country_count,
    transport_increment,
)
from scripts.errors import ValidationError
from tests.conftest import FIXTURES_DIR


def tables(rows):
    """(iso3, region, demand_TWh, potential_TWh) rows -> potentials, demand, regions."""
    potentials = {iso3: potential for iso3, _, _, potential in rows}
    demand = pd.DataFrame({
        "country_iso3": [r[0] for r in rows],
        "annual_electricity_demand_TWh": [float(r[2]) for r in rows],
    })
    regions = pd.DataFrame({
        "country_iso3": [r[0] for r in rows if r[1]],
        "region_name": [r[1] for r in rows if r[1]],
    })
    return potentials, demand, regions


def ledger_from(rows, fraction=0.10):
    potentials, demand, regions = tables(rows)
    return build_country_ledger(potentials, demand, fraction, regions)


def greedy_oracle_totals(surpluses, deficits):
    """Allocated total for every recipient and donor order."""
    totals = []
    for recipients in itertools.permutations(deficits):
        for donors in itertools.permutations(surpluses):
            left = list(donors)
            total = 0.0
            for deficit in recipients:
                for i, s in enumerate(left):
                    take = min(deficit, s)
                    left[i] -= take
                    deficit -= take
                    total += take
            totals.append(total)
    return totals


# Hypothesis strategy: up to 8 countries in up to 3 regions
country_rows = st.lists(
    st.tuples(
        st.sampled_from(["R1", "R2", "R3"]),
        st.floats(min_value=1.0, max_value=1000.0),
        st.floats(min_value=0.0, max_value=300.0),
    ),
    min_size=1,
    max_size=8,
).map(lambda items: [(f"C{i:02d}", r, d, p) for i, (r, d, p) in enumerate(items)])


class TestElementaryMetrics:
    """Test suite for storage_need() and sufficiency()."""

    # ==================== Tests for storage_need() ====================

    @pytest.mark.parametrize("demand, fraction, expected", [
        (1000.0, 0.10, 100.0),
        (1000.0, 0.06, 60.0),
        (0.0, 0.10, 0.0),
    ])
    def test_storage_need(self, demand, fraction, expected):
        """Test need = fraction x demand."""
        assert storage_need(demand, fraction) == pytest.approx(expected)

    @pytest.mark.parametrize("fraction", [0.0, -0.1, 1.5])
    def test_invalid_fraction(self, fraction):
        """Test that fractions outside (0, 1] are rejected."""
        with pytest.raises(ValidationError):
            storage_need(1000.0, fraction)

    # ==================== Tests for sufficiency() ====================

    def test_australia_row(self):
        """Test 119,677 TWh against a need giving 167,777 %."""
        need = 119_677 / 1677.77
        assert sufficiency(119_677.0, need) * 100 == pytest.approx(167_777, rel=1e-6)

    def test_equal_and_zero(self):
        """Test potential = need -> 100 % and zero potential -> 0 %."""
        assert sufficiency(50.0, 50.0) == 1.0
        assert sufficiency(0.0, 50.0) == 0.0

    def test_sentinels(self):
        """Test the unbounded and undefined sentinels."""
        assert math.isinf(sufficiency(5.0, 0.0))
        assert math.isnan(sufficiency(0.0, 0.0))
        assert sufficiency_pct_label(math.inf) == "unbounded"
        assert sufficiency_pct_label(math.nan) == "undefined"
        assert sufficiency_pct_label(0.5) == "50.000"

    def test_negative_inputs(self):
        """Test that negative values are rejected."""
        with pytest.raises(ValidationError):
            sufficiency(-1.0, 10.0)


class TestLedgers:
    """Test suite for country and region ledgers."""

    @pytest.fixture
    def reference_regions(self):
        return pd.read_csv(FIXTURES_DIR / "regional_reference.csv")

    # ==================== Tests for build_country_ledger() ====================

    def test_count_three_of_five(self):
        """Test a fixture with 3 sufficient of 5 countries."""
        ledger = ledger_from([
            ("AAA", "", 100, 20), ("BBB", "", 100, 10), ("CCC", "", 100, 50),
            ("DDD", "", 100, 5), ("EEE", "", 100, 0),
        ])
        assert sufficient_country_count(ledger) == (3, 5)

    def test_empty_ledger_count(self):
        """Test that an empty ledger counts (0, 0)."""
        ledger = build_country_ledger({}, pd.DataFrame(columns=["country_iso3", "annual_electricity_demand_TWh"]))
        assert sufficient_country_count(ledger) == (0, 0)

    def test_zero_demand_handling(self):
        """Test that 0/0 leaves the denominator and x/0 counts as sufficient."""
        ledger = ledger_from([("AAA", "", 0, 0), ("BBB", "", 0, 5), ("CCC", "", 100, 1)])
        assert sufficient_country_count(ledger) == (1, 2)
        assert ledger.get("AAA")["no_potential"]

    def test_potential_outside_demand_table_dropped(self):
        """Test that the demand table defines the country universe."""
        potentials, demand, _ = tables([("AAA", "", 100, 20)])
        ledger = build_country_ledger({**potentials, "ZZZ": 50.0}, demand)
        assert ledger.table["entity"].tolist() == ["AAA"]

    # ==================== Tests for regional_sufficiency() ====================

    def test_two_country_region(self):
        """Test (10, 1) and (0, 1) TWh -> region sufficiency 500 %."""
        ledger = ledger_from([("AAA", "R", 10, 10), ("BBB", "R", 10, 0)])
        region = regional_sufficiency(ledger)
        assert region.get("R")["sufficiency"] == pytest.approx(5.0)
        assert ledger.get("BBB")["region_sufficient"]
        assert sharing_dependent_count(ledger) == 1

    def test_single_country_region(self):
        """Test that a one-country region has the country's sufficiency."""
        ledger = ledger_from([("AAA", "R", 200, 7)])
        assert regional_sufficiency(ledger).get("R")["sufficiency"] == ledger.get("AAA")["sufficiency"]

    def test_missing_region_is_unassigned(self):
        """Test that countries without region are grouped as unassigned."""
        ledger = ledger_from([("AAA", "R", 10, 10), ("BBB", "", 10, 0)])
        assert ledger.get("BBB")["region"] == "unassigned"
        assert not ledger.get("BBB")["region_sufficient"]
        assert "unassigned" in regional_sufficiency(ledger).table["entity"].tolist()

    def test_region_ledger_requires_country_level(self):
        """Test that a region ledger cannot be aggregated again."""
        region = regional_sufficiency(ledger_from([("AAA", "R", 10, 10)]))
        with pytest.raises(ValidationError):
            regional_sufficiency(region)

    def test_reference_partial_follows_from_guaranteed(self, reference_regions):
        """Test that partial sufficiencies follow, within 1 %, from needs implied by the guaranteed columns."""
        rows = reference_regions[reference_regions["guaranteed_capacity_TWh"] > 0]
        # One country per region; its need comes from the guaranteed pair only
        needs = rows["guaranteed_capacity_TWh"] / (rows["guaranteed_sufficiency_pct"] / 100.0)
        demand = pd.DataFrame({
            "country_iso3": [f"C{i:02d}" for i in range(len(rows))],
            "annual_electricity_demand_TWh": (needs / 0.10).to_numpy(),
        })
        regions = pd.DataFrame({"country_iso3": demand["country_iso3"], "region_name": rows["region"].to_numpy()})

        potentials = dict(zip(demand["country_iso3"], rows["partial_capacity_TWh"].astype(float)))
        region_ledger = regional_sufficiency(build_country_ledger(potentials, demand, 0.10, regions))
        for region, expected in zip(rows["region"], rows["partial_sufficiency_pct"]):
            computed = region_ledger.get(region)["sufficiency"] * 100.0
            assert computed == pytest.approx(expected, rel=0.01), f"{region}: {computed:.1f} vs {expected}"

    def test_reference_capacity_ratio_equals_sufficiency_ratio(self, reference_regions):
        """Test partial/guaranteed capacity ratio = sufficiency ratio (North America 16.70)."""
        rows = reference_regions[reference_regions["guaranteed_capacity_TWh"] > 0]
        for _, row in rows.iterrows():
            capacity_ratio = row["partial_capacity_TWh"] / row["guaranteed_capacity_TWh"]
            sufficiency_ratio = row["partial_sufficiency_pct"] / row["guaranteed_sufficiency_pct"]
            assert capacity_ratio == pytest.approx(sufficiency_ratio, rel=0.01), row["region"]

    @settings(max_examples=100)
    @given(rows=country_rows)
    def test_mediant_bound(self, rows):
        """Test that region sufficiency lies between its members' extremes."""
        ledger = ledger_from(rows)
        region_ledger = regional_sufficiency(ledger)
        for region, members in ledger.table.groupby("region"):
            ratios = members["sufficiency"]
            value = region_ledger.get(region)["sufficiency"]
            assert ratios.min() - 1e-9 <= value <= ratios.max() + 1e-9

    @settings(max_examples=50)
    @given(rows=country_rows, scale=st.floats(min_value=0.01, max_value=100.0))
    def test_scale_invariance(self, rows, scale):
        """Test that scaling potentials and demands leaves ratios and shares unchanged."""
        scaled = [(c, r, d * scale, p * scale) for c, r, d, p in rows]
        a, b = ledger_from(rows), ledger_from(scaled)
        for ledger in (a, regional_sufficiency(a)):
            assume(not any(abs(s - 1.0) < 1e-6 for s in ledger.table["sufficiency"]))
        pd.testing.assert_series_equal(a.table["sufficiency"], b.table["sufficiency"], rtol=1e-9)
        assert balanced_demand_share(a, "region") == pytest.approx(balanced_demand_share(b, "region"), rel=1e-9)


class TestSharing:
    """Test suite for storage_abroad() and demand shares."""

    # ==================== Tests for storage_abroad() ====================

    def test_all_self_sufficient(self):
        """Test that no flows arise when every country is self-sufficient."""
        plan = storage_abroad(ledger_from([("AAA", "R", 100, 50), ("BBB", "R", 100, 20)]))
        assert plan.total_TWh == 0.0
        assert plan.flows.empty

    def test_surplus_100_deficits_30_90(self):
        """Test surplus 100 TWh against deficits 30 and 90 -> 100 TWh abroad."""
        ledger = ledger_from([("AAA", "R", 100, 110), ("BBB", "R", 300, 0), ("CCC", "R", 900, 0)])
        plan = storage_abroad(ledger)
        assert plan.total_TWh == pytest.approx(100.0)
        inflow = plan.flows.groupby("recipient")["TWh"].sum()
        assert inflow["CCC"] == pytest.approx(90.0), "Largest deficit is served first"
        assert inflow["BBB"] == pytest.approx(10.0)

    def test_flows_stay_inside_regions(self):
        """Test that a surplus in one region never reaches another."""
        ledger = ledger_from([("AAA", "R1", 100, 500), ("BBB", "R2", 1000, 0), ("CCC", "", 1000, 0)])
        plan = storage_abroad(ledger)
        assert plan.total_TWh == 0.0
        assert global_transport_demand(plan) == 0.0

    @settings(max_examples=100)
    @given(rows=country_rows)
    def test_greedy_matches_permutation_oracle(self, rows):
        """Test region totals against every allocation order, and conservation."""
        assume(len(rows) <= 6)
        ledger = ledger_from(rows)
        plan = storage_abroad(ledger)
        t = ledger.table
        for region, members in t.groupby("region"):
            balance = members["potential_TWh"] - members["need_TWh"]
            surpluses = [b for b in balance if b > 0]
            deficits = [-b for b in balance if b < 0]
            totals = greedy_oracle_totals(surpluses, deficits)
            assert max(totals) - min(totals) <= 1e-6, "Regional totals do not depend on allocation order"
            got = plan.regions.set_index("region").loc[region, "storage_abroad_TWh"]
            assert got == pytest.approx(totals[0], abs=1e-6)
            assert got <= sum(surpluses) + 1e-9

        if not plan.flows.empty:
            assert plan.flows["TWh"].sum() == pytest.approx(plan.total_TWh)
            surplus = dict(zip(t["entity"], t["potential_TWh"] - t["need_TWh"]))
            for donor, given_TWh in plan.flows.groupby("donor")["TWh"].sum().items():
                assert given_TWh <= surplus[donor] + 1e-9
            for recipient, got_TWh in plan.flows.groupby("recipient")["TWh"].sum().items():
                assert got_TWh <= -surplus[recipient] + 1e-9

    # ==================== Tests for balanced_demand_share() ====================

    def test_share_weighted_by_demand(self):
        """Test demands (60, 40) with only the first sufficient -> 60 %."""
        ledger = ledger_from([("AAA", "", 60, 100), ("BBB", "", 40, 0)])
        assert balanced_demand_share(ledger) == pytest.approx(60.0)

    def test_share_extremes(self):
        """Test 100 % when everyone is sufficient and 0 % when nobody is."""
        assert balanced_demand_share(ledger_from([("AAA", "", 60, 100), ("BBB", "", 40, 4)])) == 100.0
        assert balanced_demand_share(ledger_from([("AAA", "", 60, 1), ("BBB", "", 40, 0)])) == 0.0

    def test_zero_global_demand(self):
        """Test that zero global demand is rejected."""
        with pytest.raises(ValidationError):
            balanced_demand_share(ledger_from([("AAA", "", 0, 10)]))

    def test_invalid_mode(self):
        """Test that an unknown mode is rejected."""
        ledger = ledger_from([("AAA", "", 60, 100)])
        with pytest.raises(ValidationError):
            balanced_demand_share(ledger, "planet")
        with pytest.raises(ValidationError):
            buildable_storage(ledger, "planet")

    @settings(max_examples=100)
    @given(rows=country_rows)
    def test_region_share_not_below_country_share(self, rows):
        """Test that sharing can only raise the balanced demand share."""
        ledger = ledger_from(rows)
        assert balanced_demand_share(ledger, "region") >= balanced_demand_share(ledger, "country") - 1e-9

    # ==================== Tests for buildable_storage() ====================

    def test_buildable_storage(self):
        """Test min(potential, need) per country and per region."""
        ledger = ledger_from([("AAA", "R", 100, 50), ("BBB", "R", 100, 0), ("CCC", "", 100, 4)])
        assert buildable_storage(ledger, "country") == pytest.approx(10.0 + 0.0 + 4.0)
        assert buildable_storage(ledger, "region") == pytest.approx(20.0 + 4.0)
        assert global_sufficiency(ledger) == pytest.approx(54.0 / 30.0)

    def test_need_fraction_sweep(self):
        """Test that a larger need fraction never raises the balanced share."""
        ledger = ledger_from([("AAA", "R", 100, 5), ("BBB", "R", 200, 12), ("CCC", "", 300, 30)])
        sweep = need_fraction_sweep(ledger)
        assert sweep["fraction"].tolist() == [0.02, 0.04, 0.06, 0.08, 0.10]
        assert sweep["share_country_pct"].is_monotonic_decreasing
        assert (sweep["share_region_pct"] >= sweep["share_country_pct"]).all()

    def test_ledger_to_frame(self):
        """Test export columns and labels."""
        ledger = ledger_from([("AAA", "R", 100, 20), ("BBB", "R", 0, 0)])
        frame = ledger_to_frame(ledger)
        assert list(frame.columns) == [
            "iso3", "region", "demand_TWh", "potential_TWh", "need_TWh", "sufficiency_pct", "flags"
        ]
        assert frame.loc[0, "sufficiency_pct"] == "200.000"
        assert frame.loc[1, "sufficiency_pct"] == "undefined"
        assert frame.loc[1, "flags"] == "region_sufficient;no_potential"

    def test_ledger_get_unknown(self):
        """Test that an unknown entity raises KeyError."""
        with pytest.raises(KeyError):
            ledger_from([("AAA", "R", 100, 20)]).get("ZZZ")
        assert isinstance(ledger_from([("AAA", "R", 100, 20)]), SufficiencyLedger)


class TestIndicators:
    """Test suite for the build-out indicators."""

    # ==================== Tests for transport_increment() ====================

    def test_transport_increment(self):
        """Test 207 TWh shared against 1,325 TWh trade -> 15.6 %."""
        assert transport_increment(207.0, 1325.0) == pytest.approx(15.623, abs=1e-3)
        assert transport_increment(0.0, 1325.0) == 0.0
        assert transport_increment(414.0, 1325.0) == pytest.approx(2 * transport_increment(207.0, 1325.0))

    def test_transport_increment_zero_baseline(self):
        """Test that a zero baseline is rejected."""
        with pytest.raises(ValidationError):
            transport_increment(207.0, 0.0)

    # ==================== Tests for expansion_rate() ====================

    def test_expansion_rate(self):
        """Test 4,942 TWh over 25 years -> 197.7 TWh/a."""
        assert expansion_rate(4942.0, 25.0) == pytest.approx(197.68)
        assert expansion_rate(0.0, 25.0) == 0.0
        assert expansion_rate(4942.0, 12.5) == pytest.approx(2 * 197.68)
        with pytest.raises(ValidationError):
            expansion_rate(4942.0, 0.0)

    def test_relative_expansion_and_lifetime(self):
        """Test build-out relative to existing storage and supply lifetime."""
        assert relative_expansion(4942.0, 1000.0) == pytest.approx(494.2)
        assert storage_lifetime_years(2.0) == pytest.approx(120.0)
        assert storage_lifetime_years(0.5, 40.0) == pytest.approx(20.0)
