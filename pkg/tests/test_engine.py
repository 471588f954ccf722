import dataclasses

import numpy as np
import pytest

from flexmarket.engine import Simulation, aggregate_metrics, run_simulation
from flexmarket.rng import RunRandom
from flexmarket.scenario import (
    ApplianceConfig,
    NoiseConfig,
    RenewableConfig,
    default_scenario,
)


def small_scenario(**overrides):
    base = dict(n_days=4, warmup_days=1, seed=11)
    base.update(overrides)
    return default_scenario(**base)


class TestRunRandom:
    def test_streams_reproducible_and_independent(self):
        a = RunRandom(5).stream("demand_noise", 2).standard_normal(4)
        b = RunRandom(5).stream("demand_noise", 2).standard_normal(4)
        c = RunRandom(5).stream("anneal", 2).standard_normal(4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_day_changes_stream(self):
        a = RunRandom(5).stream("demand_noise", 0).standard_normal(4)
        b = RunRandom(5).stream("demand_noise", 1).standard_normal(4)
        assert not np.array_equal(a, b)


class TestPerfectInformationNull:
    def test_no_noise_no_flex_no_balancing(self):
        scenario = small_scenario(noise=NoiseConfig(sigma=0.0), flexible_ratio=0.0)
        report = run_simulation(scenario)
        for day in report.days:
            assert day.activations == ()
            assert day.balancing_energy_mwh == 0.0
        assert report.metrics["balancing_eur_per_mwh"] == 0.0
        assert report.metrics["balancing_volume_mwh"] == 0.0


class TestDeterminism:
    def test_same_seed_identical_run(self):
        scenario = small_scenario(regime="rtp", flexible_ratio=0.5)
        a = run_simulation(scenario)
        b = run_simulation(scenario)
        assert a.metrics == b.metrics
        for da, db in zip(a.days, b.days):
            np.testing.assert_array_equal(da.spot_prices, db.spot_prices)
            np.testing.assert_array_equal(da.realized_minute, db.realized_minute)
            assert da.selections == db.selections

    def test_seed_argument_overrides_scenario_seed(self):
        scenario = small_scenario(regime="rtp", flexible_ratio=0.5)
        a = run_simulation(scenario, seed=11)
        b = run_simulation(scenario, seed=12)
        assert a.seed == 11 and b.seed == 12
        assert any(
            not np.array_equal(da.realized_minute, db.realized_minute)
            for da, db in zip(a.days, b.days)
        )


class TestDailyPipeline:
    def test_day_counter_and_immutability(self):
        sim = Simulation(small_scenario())
        first = sim.run_day()
        second = sim.run_day()
        assert (first.day, second.day) == (0, 1)
        with pytest.raises(dataclasses.FrozenInstanceError):
            first.day = 5

    def test_rtp_utilities_bid_one_profile(self):
        sim = Simulation(small_scenario(regime="rtp", flexible_ratio=0.5))
        for u in sim.utilities:
            profiles, labels = u.profiles()
            assert len(profiles) == 1 and labels == [0]

    def test_integrated_utilities_bid_all_shifts(self):
        scenario = small_scenario(regime="integrated", flexible_ratio=0.5)
        sim = Simulation(scenario)
        for u, cfg in zip(sim.utilities, scenario.utilities):
            profiles, labels = u.profiles()
            assert len(profiles) == len(cfg.exg_shifts)
            assert labels == [int(s) for s in cfg.exg_shifts]

    def test_prices_within_cap_and_ledger_zero_sum(self):
        report = run_simulation(small_scenario(regime="rtp", flexible_ratio=0.8))
        for day in report.days:
            assert np.all(day.spot_prices >= 0) and np.all(day.spot_prices <= 3000)
            assert np.all(day.imbalance_prices >= 0)
            day.ledger.check_zero_sum()

    def test_group_rows_cover_total_energy(self):
        report = run_simulation(small_scenario(regime="integrated", flexible_ratio=0.4))
        for day in report.days:
            row_energy = sum(r["energy_mwh"] for r in day.group_rows)
            assert row_energy == pytest.approx(day.total_energy_mwh, rel=1e-9)

    def test_forecast_learns_realized_demand(self):
        scenario = small_scenario(regime="rtp", flexible_ratio=0.0,
                                  noise=NoiseConfig(sigma=0.0))
        sim = Simulation(scenario)
        day = sim.run_day()
        # with zero noise and no flexibility the forecast is already exact
        np.testing.assert_allclose(
            day.forecast_minute, day.realized_minute, rtol=1e-12
        )


class TestRenewable:
    def test_renewable_day_settles(self):
        scenario = small_scenario(renewable=RenewableConfig(), flexible_ratio=0.2)
        report = run_simulation(scenario)
        assert np.isfinite(report.metrics["combined_eur_per_mwh"])
        parties = {e.party for d in report.days for e in d.ledger.entries}
        assert "renewable" in parties

    def test_renewable_lowers_mean_spot(self):
        base = run_simulation(small_scenario(n_days=6, warmup_days=2))
        wind = run_simulation(
            small_scenario(n_days=6, warmup_days=2, renewable=RenewableConfig())
        )
        assert wind.metrics["mean_spot_eur_per_mwh"] < base.metrics["mean_spot_eur_per_mwh"]


class TestApplianceMode:
    def test_runs_and_conserves_fleet_energy(self):
        scenario = small_scenario(
            appliance_mode=ApplianceConfig(), regime="rtp", flexible_ratio=0.5
        )
        report = run_simulation(scenario)
        assert np.isfinite(report.metrics["combined_eur_per_mwh"])
        assert report.metrics["total_energy_mwh"] > 0


class TestAggregateMetrics:
    def test_warmup_days_excluded(self):
        report = run_simulation(small_scenario(regime="rtp", flexible_ratio=0.3))
        all_days = aggregate_metrics(report.days, warmup_days=0)
        counted = aggregate_metrics(report.days, warmup_days=1)
        expected = sum(d.total_energy_mwh for d in report.days if d.day >= 1)
        assert counted["total_energy_mwh"] == pytest.approx(expected, rel=1e-9)
        assert all_days["total_energy_mwh"] > counted["total_energy_mwh"]

    def test_empty_after_warmup(self):
        report = run_simulation(small_scenario())
        assert aggregate_metrics(report.days, warmup_days=99) == {}
