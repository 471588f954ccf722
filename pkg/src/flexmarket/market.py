"""Day-ahead market: hourly merit-order clearing and exclusive-group
profile selection by simulated annealing.

Welfare of a selection reduces to sum_h [cap * demand_h - dispatch_cost_h],
which ``HourlyBooks`` evaluates in a few vectorized operations so the
annealing loop stays fast; ``evaluate_selection`` computes the same number
through the explicit per-item formula.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .agents import PRICE_CAP
from .errors import InsufficientSupply, TooLarge


@dataclass(frozen=True)
class SupplyOffer:
    """A producer's priced capacity block for one hour."""

    producer: str
    power: float  # MWh
    price: float  # EUR/MWh

    def __post_init__(self):
        if self.power <= 0:
            raise ValueError("offer power must be > 0")
        if not 0.0 <= self.price <= PRICE_CAP:
            raise ValueError(f"offer price must be within [0, {PRICE_CAP}]")


@dataclass(frozen=True)
class ScheduleItem:
    offer: SupplyOffer
    accepted: float  # MWh, pro-rated for the marginal offer


@dataclass(frozen=True)
class MarketResult:
    prices: np.ndarray          # 24 clearing prices
    schedule: tuple             # 24 tuples of ScheduleItem
    selection: tuple            # chosen profile index per exclusive group
    welfare: float


@dataclass(frozen=True)
class AnnealConfig:
    """Temperature schedule T_i = initial_temp / (i + 1) over `iterations` moves."""

    initial_temp: float = 1000.0
    iterations: int = 2000

    def __post_init__(self):
        if self.initial_temp <= 0:
            raise ValueError("initial_temp must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


def _sorted_offers(offers):
    return sorted(offers, key=lambda o: (o.price, o.producer))


def price_for_demand(demand, offers):
    """Merit-order clearing of a single hour.

    Offers are accepted cheapest-first; the marginal offer is pro-rated so
    accepted volumes sum to demand exactly.  The clearing price is the
    marginal offer's price.  Demand 0 clears at price 0 with no schedule.
    """
    if demand < 0:
        raise ValueError("demand must be >= 0")
    if demand == 0:
        return 0.0, []
    available = 0.0
    schedule = []
    for offer in _sorted_offers(offers):
        remaining = demand - available
        if offer.power >= remaining:  # marginal offer, pro-rated exactly
            schedule.append(ScheduleItem(offer, remaining))
            return offer.price, schedule
        schedule.append(ScheduleItem(offer, offer.power))
        available += offer.power
    raise InsufficientSupply(f"offered {available} MWh < demand {demand} MWh")


def create_schedule(profile_24, supply_24):
    """Clear 24 independent hourly markets for one demand profile."""
    prices = np.empty(24)
    schedule = []
    for h in range(24):
        price, items = price_for_demand(float(profile_24[h]), supply_24[h])
        prices[h] = price
        schedule.append(tuple(items))
    return prices, tuple(schedule)


def _combined_profile(selection, profiles):
    total = np.zeros(24)
    for g, idx in enumerate(selection):
        total = total + np.asarray(profiles[g][idx], dtype=float)
    return total


def evaluate_selection(selection, supply_24, profiles):
    """Welfare of one exclusive-group selection, higher is better.

    Per hour: producer surplus of accepted offers plus cleared demand valued
    at the price cap minus the clearing price.
    """
    demand = _combined_profile(selection, profiles)
    prices, schedule = create_schedule(demand, supply_24)
    welfare = 0.0
    for h in range(24):
        for item in schedule[h]:
            welfare += item.accepted * (prices[h] - item.offer.price)
        welfare += demand[h] * (PRICE_CAP - prices[h])
    return float(welfare)


class HourlyBooks:
    """Pre-sorted cumulative merit-order books for fast dispatch-cost queries.

    Per-hour books are padded to a common width and flattened with large
    per-hour offsets so all 24 marginal offers are found with a single
    searchsorted call.
    """

    def __init__(self, supply_24):
        books = [_sorted_offers(offers) for offers in supply_24]
        if any(len(b) == 0 for b in books):
            raise InsufficientSupply("every hour needs at least one offer")
        width = max(len(b) for b in books)
        prices = np.empty((24, width))
        cum_power = np.empty((24, width))
        cum_cost = np.empty((24, width))
        for h, book in enumerate(books):
            p = np.array([o.price for o in book])
            w = np.array([o.power for o in book])
            n = len(book)
            prices[h, :n] = p
            cum_power[h, :n] = np.cumsum(w)
            cum_cost[h, :n] = np.cumsum(w * p)
            # pad by repeating the last point; queries beyond it signal shortage
            prices[h, n:] = p[-1]
            cum_power[h, n:] = cum_power[h, n - 1]
            cum_cost[h, n:] = cum_cost[h, n - 1]
        self.width = width
        self.prices = prices
        self.cum_power = cum_power
        self.cum_cost = cum_cost
        self.totals = cum_power[:, -1].copy()
        offset = float(cum_power.max()) * 2.0 + 1.0
        self._offsets = offset * np.arange(24)
        self._flat_cum = (cum_power + self._offsets[:, None]).ravel()
        self._rows = np.arange(24)

    def dispatch(self, demand_24):
        """(marginal_price, dispatch_cost) per hour for a 24-demand vector."""
        q = np.asarray(demand_24, dtype=float)
        if np.any(q < 0):
            raise ValueError("demand must be >= 0")
        if np.any(q > self.totals):
            raise InsufficientSupply("demand exceeds total offered power")
        idx = np.searchsorted(self._flat_cum, q + self._offsets, side="left")
        k = idx - self._rows * self.width
        marginal = self.prices[self._rows, k]
        prev_pow = np.where(k > 0, self.cum_power[self._rows, np.maximum(k - 1, 0)], 0.0)
        prev_cost = np.where(k > 0, self.cum_cost[self._rows, np.maximum(k - 1, 0)], 0.0)
        cost = prev_cost + (q - prev_pow) * marginal
        marginal = np.where(q > 0, marginal, 0.0)
        return marginal, np.where(q > 0, cost, 0.0)

    def welfare(self, demand_24):
        _, cost = self.dispatch(demand_24)
        return float(np.sum(np.asarray(demand_24) * PRICE_CAP - cost))


def run_market(supply_24, exg_bids, anneal: AnnealConfig, rng):
    """Select one profile per exclusive group and clear the 24 hourly markets.

    Simulated annealing over the joint selection vector: single-coordinate
    moves, Metropolis acceptance, temperature initial_temp/(i+1).  The best
    selection encountered is returned; with only single-profile groups the
    loop is skipped.
    """
    books = HourlyBooks(supply_24)
    profiles = [[np.asarray(p, dtype=float) for p in group] for group in exg_bids]
    counts = [len(g) for g in profiles]
    if any(c < 1 for c in counts):
        raise ValueError("every exclusive group needs at least one profile")

    selection = [0] * len(profiles)
    demand = _combined_profile(selection, profiles)
    value = books.welfare(demand)
    best_selection = list(selection)
    best_value = value
    best_demand = demand

    movable = [g for g, c in enumerate(counts) if c > 1]
    if movable:
        for i in range(anneal.iterations):
            temp = anneal.initial_temp / (i + 1)
            g = movable[int(rng.integers(len(movable)))]
            cur = selection[g]
            alt = int(rng.integers(counts[g] - 1))
            new = alt + (1 if alt >= cur else 0)
            new_demand = demand - profiles[g][cur] + profiles[g][new]
            new_value = books.welfare(new_demand)
            delta = new_value - value
            if delta > 0:
                accept = True
            else:
                ratio = delta / temp
                accept = ratio > -700 and rng.random() < math.exp(ratio)
            if accept:
                selection[g] = new
                demand = new_demand
                value = new_value
                if new_value > best_value:
                    best_selection = list(selection)
                    best_value = new_value
                    best_demand = new_demand

    prices, schedule = create_schedule(best_demand, supply_24)
    return MarketResult(prices, schedule, tuple(best_selection), best_value)


def brute_force_select(supply_24, exg_bids, cap=10_000):
    """Exact arg-max over all selections; test oracle for run_market.

    Ties break toward the lexicographically smallest selection.  Raises
    TooLarge when the selection space exceeds ``cap``.
    """
    profiles = [[np.asarray(p, dtype=float) for p in group] for group in exg_bids]
    counts = [len(g) for g in profiles]
    space = math.prod(counts)
    if space > cap:
        raise TooLarge(f"{space} selections exceed cap {cap}")
    books = HourlyBooks(supply_24)
    best_value = -math.inf
    best_selection = None
    for selection in itertools.product(*(range(c) for c in counts)):
        value = books.welfare(_combined_profile(selection, profiles))
        if value > best_value:
            best_value = value
            best_selection = selection
    return best_value, best_selection
