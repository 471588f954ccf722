"""Simulation engine: owns the clock, the per-run random source and the
daily market -> balancing -> settlement loop.

Forecast state is kept at minute resolution (the hourly bid is its block
sum), so the scheduled production carries the intra-hour shape of the
forecast and a perfectly forecast day produces exactly zero imbalance.
"""

from dataclasses import dataclass, field

import numpy as np

from . import appliances as appl
from .agents import (
    MINUTES_PER_DAY,
    ewma_forecast,
    generate_exg_profiles,
    generate_renewable_day,
    hourly_energy,
    optimal_phase_shift,
    producer_balancing_offers,
    sine_minute_curve,
)
from .balancing import (
    BalancingOffer,
    activate_balancing,
    compute_imbalance,
    hourly_balancing_price,
)
from .market import SupplyOffer, run_market
from .rng import RunRandom
from .scenario import Scenario, validate_scenario
from .settlement import UserBill, settle_day, utility_balancing_cost

RENEWABLE_ID = "renewable"


@dataclass(frozen=True)
class DayResult:
    """Everything one settled day contributes to reports and metrics."""

    day: int
    spot_prices: np.ndarray
    imbalance_prices: np.ndarray
    forecast_minute: np.ndarray   # system scheduled demand, MW
    realized_minute: np.ndarray   # system realized demand, MW
    activations: tuple
    ledger: object
    group_rows: tuple             # per-utility per-group cost/energy records
    selections: dict              # utility -> chosen shift / start hour
    balancing_energy_mwh: float
    total_energy_mwh: float


@dataclass
class SimulationReport:
    scenario: Scenario
    seed: int
    days: list
    metrics: dict


class _UtilityRealization:
    def __init__(self, scheduled_minute, realized_minute, rows, row_ids, row_groups,
                 row_weights, chosen):
        self.scheduled_minute = scheduled_minute
        self.realized_minute = realized_minute
        self.rows = rows              # (n_rows, 24) hourly MWh per billed party
        self.row_ids = row_ids
        self.row_groups = row_groups
        self.row_weights = row_weights  # user-equivalents per row for cost sharing
        self.chosen = chosen

    @property
    def scheduled_hourly(self):
        return hourly_energy(self.scheduled_minute)

    @property
    def realized_hourly(self):
        return hourly_energy(self.realized_minute)


class SineUtilityState:
    """Runtime state of one utility serving identical sine-load users."""

    def __init__(self, cfg, regime, flexible_ratio):
        self.cfg = cfg
        self.name = cfg.name
        self.regime = regime
        self.n_flex = int(round(flexible_ratio * cfg.n_users))
        self.n_norm = cfg.n_users - self.n_flex
        self.user_curve = sine_minute_curve(cfg.mean_load, cfg.amplitude, cfg.base_phase)
        # forecasts initialized to the nominal aggregate curves
        if regime == "rtp":
            self.fc_total = cfg.n_users * self.user_curve
        else:
            self.fc_norm = self.n_norm * self.user_curve
            self.fc_flex = self.n_flex * self.user_curve

    def profiles(self):
        """Exclusive-group bid: list of hourly profiles plus shift labels."""
        if self.regime == "rtp":
            return [hourly_energy(self.fc_total)], [0]
        profiles, shifts = generate_exg_profiles(
            hourly_energy(self.fc_norm), hourly_energy(self.fc_flex), self.cfg.exg_shifts
        )
        return profiles, shifts

    def scheduled_minute(self, choice_shift):
        if self.regime == "rtp":
            return self.fc_total.copy()
        return self.fc_norm + np.roll(self.fc_flex, -60 * choice_shift)

    def realize(self, prices, choice_shift, noise_rng, sigma):
        """Realized demand for the day given announced prices / chosen profile."""
        n = self.cfg.n_users
        if sigma > 0:
            eps = noise_rng.standard_normal((n, MINUTES_PER_DAY)) * sigma
        else:
            eps = np.zeros((n, MINUTES_PER_DAY))
        if self.regime == "rtp":
            shift = (
                optimal_phase_shift(hourly_energy(self.user_curve), prices)
                if self.n_flex > 0
                else 0
            )
        else:
            shift = choice_shift
        flex_curve = (
            np.roll(self.user_curve, -60 * shift) if shift else self.user_curve
        )
        per_user = np.empty((n, MINUTES_PER_DAY))
        per_user[: self.n_norm] = self.user_curve * (1.0 + eps[: self.n_norm])
        per_user[self.n_norm:] = flex_curve * (1.0 + eps[self.n_norm:])
        rows = per_user.reshape(n, 24, 60).sum(axis=2) / 60.0
        realized_minute = per_user.sum(axis=0)
        row_ids = [f"{self.name}/user{j:03d}" for j in range(n)]
        row_groups = ["normal"] * self.n_norm + ["flexible"] * self.n_flex
        realization = _UtilityRealization(
            self.scheduled_minute(choice_shift),
            realized_minute,
            rows,
            row_ids,
            row_groups,
            np.ones(n),
            shift,
        )
        self._norm_minute = per_user[: self.n_norm].sum(axis=0)
        self._flex_minute = per_user[self.n_norm:].sum(axis=0)
        return realization

    def update_forecasts(self, realization):
        alpha = self.cfg.alpha
        if self.regime == "rtp":
            self.fc_total = ewma_forecast(realization.realized_minute, self.fc_total, alpha)
        else:
            self.fc_norm = ewma_forecast(self._norm_minute, self.fc_norm, alpha)
            # rotate the controlled flexible load back to its baseline position
            baseline = np.roll(self._flex_minute, 60 * realization.chosen)
            self.fc_flex = ewma_forecast(baseline, self.fc_flex, alpha)

    def reset_day(self):
        self._norm_minute = None
        self._flex_minute = None


class ApplianceUtilityState:
    """Runtime state of one utility in appliance-fleet mode."""

    def __init__(self, cfg, appliance_cfg, regime, flexible_ratio, n_utilities):
        self.cfg = cfg
        self.acfg = appliance_cfg
        self.name = cfg.name
        self.regime = regime
        self.base_minute = appl.base_load_curve(appliance_cfg.base_peak / n_utilities)
        self.start_probs = appl.start_hour_distribution(self.base_minute)
        agents = appl.build_fleet(appliance_cfg, n_utilities)
        n_opt = int(round(flexible_ratio * len(agents)))
        self.normal_agents, self.optimizing_agents = appl.fleet_split(agents, n_opt)
        self.opt_fleet_mw = sum(a.power_mw for a in self.optimizing_agents)
        self.duration = appliance_cfg.duration_min
        # expected appliance placement spreads the fleet along the base shape
        fleet_energy = sum(
            a.energy_mwh for a in self.normal_agents + self.optimizing_agents
        )
        spread = self.base_minute / (self.base_minute.sum() / 60.0) * fleet_energy
        if regime == "rtp":
            self.fc_total = self.base_minute + spread
        else:
            rest_energy = sum(a.energy_mwh for a in self.normal_agents)
            self.fc_rest = self.base_minute + (
                spread * rest_energy / fleet_energy if fleet_energy > 0 else 0.0
            )

    def _opt_block(self, hour):
        block = np.zeros(MINUTES_PER_DAY)
        start = hour * 60
        block[start:start + self.duration] = self.opt_fleet_mw
        return block

    def profiles(self):
        if self.regime == "rtp":
            return [hourly_energy(self.fc_total)], [0]
        if not self.optimizing_agents:
            return [hourly_energy(self.fc_rest)], [0]
        hours = [int(h) for h in self.acfg.candidate_hours]
        return [
            hourly_energy(self.fc_rest + self._opt_block(h)) for h in hours
        ], hours

    def scheduled_minute(self, choice_hour):
        if self.regime == "rtp":
            return self.fc_total.copy()
        if not self.optimizing_agents:
            return self.fc_rest.copy()
        return self.fc_rest + self._opt_block(choice_hour)

    def realize(self, prices, choice_hour, noise_rng, sigma, appliance_rng):
        eq = self.acfg.users_equivalent
        base_sigma = sigma / np.sqrt(eq) if eq > 0 else sigma
        if base_sigma > 0:
            base = self.base_minute * (
                1.0 + noise_rng.standard_normal(MINUTES_PER_DAY) * base_sigma
            )
        else:
            base = self.base_minute.copy()
        normal_starts = appl.schedule_appliances(
            self.normal_agents, prices, "rtp", appliance_rng, self.start_probs
        )
        if self.regime == "rtp":
            cheapest = int(np.argmin(np.asarray(prices)))
            opt_starts = [cheapest * 60] * len(self.optimizing_agents)
        else:
            opt_starts = [choice_hour * 60] * len(self.optimizing_agents)

        rows = []
        row_ids = []
        row_groups = []
        weights = []
        minutes = [base]
        rows.append(hourly_energy(base))
        row_ids.append(f"{self.name}/base")
        row_groups.append("normal")
        weights.append(float(eq))
        for label, agents, starts, group in (
            ("normal", self.normal_agents, normal_starts, "normal"),
            ("opt", self.optimizing_agents, opt_starts, "flexible"),
        ):
            for j, (agent, start) in enumerate(zip(agents, starts)):
                load = appl.appliance_minute_load(agent, start)
                minutes.append(load)
                rows.append(hourly_energy(load))
                row_ids.append(f"{self.name}/{label}{j:03d}")
                row_groups.append(group)
                weights.append(float(agent.multiplicity))
        realized_minute = np.sum(minutes, axis=0)
        chosen = (
            int(np.argmin(np.asarray(prices))) if self.regime == "rtp" else choice_hour
        )
        realization = _UtilityRealization(
            self.scheduled_minute(choice_hour),
            realized_minute,
            np.array(rows),
            row_ids,
            row_groups,
            np.array(weights),
            chosen,
        )
        self._rest_minute = realized_minute - sum(
            appl.appliance_minute_load(a, s)
            for a, s in zip(self.optimizing_agents, opt_starts)
        ) if self.optimizing_agents else realized_minute
        return realization

    def update_forecasts(self, realization):
        alpha = self.cfg.alpha
        if self.regime == "rtp":
            self.fc_total = ewma_forecast(realization.realized_minute, self.fc_total, alpha)
        else:
            self.fc_rest = ewma_forecast(self._rest_minute, self.fc_rest, alpha)

    def reset_day(self):
        self._rest_minute = None


class Simulation:
    """One deterministic run of the cascaded market for a scenario."""

    def __init__(self, scenario: Scenario, seed=None):
        validate_scenario(scenario)
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else int(seed)
        self.random = RunRandom(self.seed)
        self.day = 0
        if scenario.appliance_mode is not None:
            self.utilities = [
                ApplianceUtilityState(
                    cfg, scenario.appliance_mode, scenario.regime,
                    scenario.flexible_ratio, len(scenario.utilities),
                )
                for cfg in scenario.utilities
            ]
        else:
            self.utilities = [
                SineUtilityState(cfg, scenario.regime, scenario.flexible_ratio)
                for cfg in scenario.utilities
            ]

    # -- daily stages -----------------------------------------------------

    # each plant submits several offers per hour with a small price spread,
    # giving a near-continuous merit-order curve
    TRANCHES = 4
    TRANCHE_SPREAD = 0.12

    def _supply_books(self, renewable_forecast_minute):
        """24 hourly offer books: all producers plus the renewable forecast."""
        producers = self.scenario.producers
        base = []
        k = self.TRANCHES
        for p in producers:
            for j in range(k):
                factor = 1.0 + self.TRANCHE_SPREAD * ((j + 0.5) / k - 0.5)
                price = min(p.marginal_cost * factor, 3000.0)
                base.append(SupplyOffer(f"{p.name}", p.capacity / k, price))
        renewable_hourly = (
            hourly_energy(renewable_forecast_minute)
            if renewable_forecast_minute is not None
            else None
        )
        supply_24 = []
        for h in range(24):
            book = list(base)
            if renewable_hourly is not None and renewable_hourly[h] > 1e-9:
                book.append(SupplyOffer(RENEWABLE_ID, float(renewable_hourly[h]), 0.0))
            supply_24.append(book)
        return supply_24, renewable_hourly

    def _balancing_books(self, producer_scheduled):
        up_by_hour, down_by_hour = [], []
        for h in range(24):
            ups, downs = [], []
            for p in self.scenario.producers:
                scheduled_mw = producer_scheduled.get(p.name, np.zeros(24))[h]
                up, down = producer_balancing_offers(p, scheduled_mw)
                if up is not None:
                    ups.append(BalancingOffer(up.producer, up.power / 4.0, up.price))
                if down is not None:
                    downs.append(BalancingOffer(down.producer, down.power / 4.0, down.price))
            up_by_hour.append(ups)
            down_by_hour.append(downs)
        return up_by_hour, down_by_hour

    def run_day(self):
        scenario = self.scenario
        day = self.day
        noise_rng = self.random.stream("demand_noise", day)
        anneal_rng = self.random.stream("anneal", day)

        # renewable forecast enters the day-ahead book at zero price
        renewable = scenario.renewable
        if renewable is not None:
            renew_fc, renew_real = generate_renewable_day(
                renewable.peak_capacity,
                renewable.forecast_error_sigma,
                self.random.stream("renewable", day),
            )
        else:
            renew_fc = renew_real = None
        supply_24, renew_hourly = self._supply_books(renew_fc)

        # day-ahead clearing over the utilities' exclusive-group bids
        bids, shift_labels = [], []
        for u in self.utilities:
            profiles, labels = u.profiles()
            bids.append(profiles)
            shift_labels.append(labels)
        market = run_market(supply_24, bids, scenario.anneal, anneal_rng)
        choices = [
            shift_labels[i][market.selection[i]] for i in range(len(self.utilities))
        ]

        # realization at minute resolution
        realizations = []
        for u, choice in zip(self.utilities, choices):
            if isinstance(u, ApplianceUtilityState):
                r = u.realize(
                    market.prices, choice, noise_rng, scenario.noise.sigma,
                    self.random.stream("appliance", day),
                )
            else:
                r = u.realize(market.prices, choice, noise_rng, scenario.noise.sigma)
            realizations.append(r)

        producer_scheduled = {}
        for h in range(24):
            for item in market.schedule[h]:
                sched = producer_scheduled.setdefault(item.offer.producer, np.zeros(24))
                sched[h] += item.accepted

        scheduled_minute = np.sum([r.scheduled_minute for r in realizations], axis=0)
        realized_minute = np.sum([r.realized_minute for r in realizations], axis=0)
        production_minute = scheduled_minute.copy()
        producer_deviations = {}
        if renewable is not None:
            accepted = producer_scheduled.get(RENEWABLE_ID, np.zeros(24))
            share = np.where(renew_hourly > 1e-9, accepted / np.maximum(renew_hourly, 1e-12), 1.0)
            share_minute = np.repeat(share, 60)
            production_minute = production_minute + share_minute * (renew_real - renew_fc)
            producer_deviations[RENEWABLE_ID] = share * (
                hourly_energy(renew_real) - hourly_energy(renew_fc)
            )

        # balancing
        series = compute_imbalance(realized_minute, production_minute)
        up_books, down_books = self._balancing_books(producer_scheduled)
        activations, slot_prices = activate_balancing(
            series, up_books, down_books, scenario.balancing
        )
        imbalance_prices = hourly_balancing_price(
            slot_prices, series.diff60, market.prices, scenario.balancing.activation_limit
        )

        # settlement
        utility_scheduled = {u.name: r.scheduled_hourly
                             for u, r in zip(self.utilities, realizations)}
        utility_realized = {u.name: r.realized_hourly
                            for u, r in zip(self.utilities, realizations)}
        ledger = settle_day(
            market, activations, imbalance_prices, utility_scheduled,
            utility_realized, producer_deviations, series.diff60,
            scenario.balancing.activation_limit,
        )

        group_rows = []
        for u, r in zip(self.utilities, realizations):
            cost = utility_balancing_cost(
                market.prices, imbalance_prices, r.scheduled_hourly, r.realized_hourly
            )
            usage = r.rows @ market.prices
            total_weight = r.row_weights.sum()
            shares = cost * r.row_weights / total_weight
            for group in ("normal", "flexible"):
                mask = np.array([g == group for g in r.row_groups])
                if not mask.any():
                    continue
                group_rows.append({
                    "utility": u.name,
                    "group": group,
                    "n_users": float(r.row_weights[mask].sum()),
                    "energy_mwh": float(r.rows[mask].sum()),
                    "usage_cost_eur": float(usage[mask].sum()),
                    "shared_balancing_cost_eur": float(shares[mask].sum()),
                })

        balancing_energy = float(sum(a.energy for a in activations))
        result = DayResult(
            day=day,
            spot_prices=market.prices,
            imbalance_prices=imbalance_prices,
            forecast_minute=scheduled_minute,
            realized_minute=realized_minute,
            activations=tuple(activations),
            ledger=ledger,
            group_rows=tuple(group_rows),
            selections={u.name: c for u, c in zip(self.utilities, choices)},
            balancing_energy_mwh=balancing_energy,
            total_energy_mwh=float(realized_minute.sum() / 60.0),
        )
        self.advance_day(realizations)
        return result

    def advance_day(self, realizations):
        """Update forecasts with the day's realization and clear daily state."""
        for u, r in zip(self.utilities, realizations):
            u.update_forecasts(r)
            u.reset_day()
        self.day += 1

    def day_bills(self, result: DayResult):
        """Reconstruct per-user bills of a settled day from its group rows."""
        bills = []
        for row in result.group_rows:
            bills.append(UserBill(
                f"{row['utility']}/{row['group']}",
                row["usage_cost_eur"],
                row["shared_balancing_cost_eur"],
                row["group"],
                row["energy_mwh"],
            ))
        return bills


def aggregate_metrics(days, warmup_days):
    """Per-MWh cost split and volumes over the post-warm-up days."""
    counted = [d for d in days if d.day >= warmup_days]
    if not counted:
        return {}
    totals = {"normal": [0.0, 0.0], "flexible": [0.0, 0.0]}  # cost, energy
    usage = shared = energy = 0.0
    for d in counted:
        for row in d.group_rows:
            usage += row["usage_cost_eur"]
            shared += row["shared_balancing_cost_eur"]
            energy += row["energy_mwh"]
            totals[row["group"]][0] += (
                row["usage_cost_eur"] + row["shared_balancing_cost_eur"]
            )
            totals[row["group"]][1] += row["energy_mwh"]
    balancing_volume = sum(d.balancing_energy_mwh for d in counted)
    mean_spot = float(np.mean([d.spot_prices for d in counted]))
    if totals["normal"][1] > 0 and totals["flexible"][1] > 0:
        normal = totals["normal"][0] / totals["normal"][1]
        flex = totals["flexible"][0] / totals["flexible"][1]
        advantage = (normal - flex) / normal
    else:
        advantage = float("nan")
    return {
        "combined_eur_per_mwh": (usage + shared) / energy,
        "usage_eur_per_mwh": usage / energy,
        "balancing_eur_per_mwh": shared / energy,
        "balancing_volume_mwh": balancing_volume,
        "mean_spot_eur_per_mwh": mean_spot,
        "group_advantage": advantage,
        "total_energy_mwh": energy,
    }


def run_simulation(scenario: Scenario, seed=None) -> SimulationReport:
    """Run a full scenario; output is fully determined by (scenario, seed)."""
    sim = Simulation(scenario, seed)
    days = [sim.run_day() for _ in range(scenario.n_days)]
    metrics = aggregate_metrics(days, scenario.warmup_days)
    return SimulationReport(scenario, sim.seed, days, metrics)
