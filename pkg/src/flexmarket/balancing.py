"""Balancing market: minute-level imbalance, 15-minute activation against a
dead-band, and hourly imbalance prices.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UpBalancingExhausted

SLOTS_PER_DAY = 96
SLOT_HOURS = 0.25


@dataclass(frozen=True)
class BalancingConfig:
    """``activation_limit`` is the dead-band in MWh per 15-minute slot."""

    activation_limit: float = 10.0

    def __post_init__(self):
        if self.activation_limit < 0:
            raise ValueError("activation_limit must be >= 0")


@dataclass(frozen=True)
class ImbalanceSeries:
    """Minute demand-production difference plus exact 15/60-minute energy sums."""

    diff_minute: np.ndarray  # 1440 MW
    diff15: np.ndarray       # 96 MWh
    diff60: np.ndarray       # 24 MWh


@dataclass(frozen=True)
class BalancingOffer:
    """Energy a producer can deliver (or absorb) within one 15-minute slot."""

    producer: str
    energy: float  # MWh per slot
    price: float   # EUR/MWh


@dataclass(frozen=True)
class BalancingActivation:
    slot: int
    producer: str
    direction: str  # "up" | "down"
    energy: float   # MWh, > 0
    price: float


def compute_imbalance(demand_minute, production_minute):
    """Pointwise demand minus production with 15- and 60-minute aggregation."""
    demand = np.asarray(demand_minute, dtype=float)
    production = np.asarray(production_minute, dtype=float)
    if demand.shape != (1440,) or production.shape != (1440,):
        raise ValueError("both series must have length 1440")
    diff = demand - production
    diff15 = diff.reshape(96, 15).sum(axis=1) / 60.0
    diff60 = diff.reshape(24, 60).sum(axis=1) / 60.0
    return ImbalanceSeries(diff, diff15, diff60)


def _activate(book, need, slot, direction, activations):
    """Walk a pre-sorted book until ``need`` MWh is covered; return slot price."""
    remaining = need
    price = None
    for offer in book:
        take = min(offer.energy, remaining)
        activations.append(BalancingActivation(slot, offer.producer, direction, take, offer.price))
        price = offer.price
        remaining -= take
        if remaining <= 0:
            return price
    if direction == "up":
        raise UpBalancingExhausted(
            f"slot {slot}: {need} MWh up-regulation needed, book exhausted"
        )
    # Down book exhausted: remaining surplus stays unbalanced at the last price.
    return price


def activate_balancing(series: ImbalanceSeries, up_offers_by_hour, down_offers_by_hour,
                       config: BalancingConfig):
    """Activate offers per 15-minute slot where |diff15| exceeds the dead-band.

    Up offers are taken cheapest-first, down offers best-price-first (highest
    repurchase price first); the marginal offer is pro-rated.  Books are
    restored at each slot boundary.  Returns the activation list and a
    96-vector of slot prices (NaN where no activation happened).
    """
    activations = []
    slot_prices = np.full(SLOTS_PER_DAY, np.nan)
    limit = config.activation_limit
    up_books = [sorted(b, key=lambda o: (o.price, o.producer)) for b in up_offers_by_hour]
    down_books = [sorted(b, key=lambda o: (-o.price, o.producer)) for b in down_offers_by_hour]
    for slot in range(SLOTS_PER_DAY):
        hour = slot // 4
        d = series.diff15[slot]
        if d > limit:
            slot_prices[slot] = _activate(up_books[hour], d, slot, "up", activations)
        elif d < -limit:
            slot_prices[slot] = _activate(down_books[hour], -d, slot, "down", activations)
    return activations, slot_prices


def hourly_balancing_price(prices_15, diff60, spot_prices, limit):
    """Hourly imbalance prices from slot prices.

    Net-up hours take the max of their activated slot prices, net-down hours
    the min; hours inside the dead-band (or without any activation) settle at
    the spot price.
    """
    prices_15 = np.asarray(prices_15, dtype=float)
    diff60 = np.asarray(diff60, dtype=float)
    spot = np.asarray(spot_prices, dtype=float)
    hourly = spot.copy()
    for h in range(24):
        active = prices_15[4 * h:4 * h + 4]
        active = active[~np.isnan(active)]
        if active.size == 0:
            continue
        if diff60[h] > limit:
            hourly[h] = active.max()
        elif diff60[h] < -limit:
            hourly[h] = active.min()
    return hourly
