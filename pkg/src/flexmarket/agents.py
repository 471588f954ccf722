"""Market participants: producers, utilities, flexible sine-load consumers
and the intermittent renewable producer.

All load curves live on a 1440-point minute grid (MW).  Hourly energies are
the block sums of that grid divided by 60 (MWh), so every hourly quantity is
exactly consistent with its minute-level counterpart.
"""

from dataclasses import dataclass, field

import numpy as np

MINUTES_PER_DAY = 1440
HOURS_PER_DAY = 24
PRICE_CAP = 3000.0  # upper price limit, also the buffer plant's price


@dataclass(frozen=True)
class Producer:
    """A conventional power plant bidding its marginal cost."""

    name: str
    capacity: float                 # MW
    marginal_cost: float            # EUR/MWh
    min_run_required: bool = True   # ineligible for balancing when not dispatched
    regulation_factor: float = 0.0  # share of capacity usable for balancing
    balancing_markup: float = 0.0   # relative price factor for balancing offers

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError(f"producer {self.name}: capacity must be > 0")
        if self.marginal_cost < 0:
            raise ValueError(f"producer {self.name}: marginal_cost must be >= 0")
        if not 0.0 <= self.regulation_factor <= 1.0:
            raise ValueError(f"producer {self.name}: regulation_factor outside [0,1]")
        if self.balancing_markup < 0:
            raise ValueError(f"producer {self.name}: balancing_markup must be >= 0")


@dataclass(frozen=True)
class ReserveOffer:
    """One direction of a producer's balancing capability for an hour."""

    producer: str
    power: float  # MW
    price: float  # EUR/MWh


@dataclass
class SineConsumer:
    """A consumer whose daily usage pattern is a sine around a mean load.

    ``base_phase`` and ``chosen_shift`` are in hours.  Shifting by ``s``
    rotates the curve ``60*s`` minutes earlier, i.e. the shifted curve at
    minute ``m`` equals the unshifted curve at minute ``m + 60*s``.
    """

    mean_load: float   # MW
    amplitude: float   # MW
    base_phase: float = 0.0
    flexible: bool = False
    chosen_shift: int = 0

    def __post_init__(self):
        if not 0.0 <= self.amplitude < self.mean_load:
            raise ValueError("amplitude must satisfy 0 <= amplitude < mean_load")


@dataclass(frozen=True)
class Appliance:
    """A once-a-day load block, optionally price-optimizing.

    ``multiplicity`` scales one agent object to a population of identical
    devices, so a fleet of ~250k appliances stays cheap to simulate.
    """

    power_kw: float = 3.0
    duration_min: int = 60
    optimizing: bool = False
    multiplicity: int = 1

    @property
    def power_mw(self) -> float:
        return self.power_kw * self.multiplicity / 1000.0

    @property
    def energy_mwh(self) -> float:
        return self.power_mw * self.duration_min / 60.0


def sine_minute_curve(mean_load, amplitude, base_phase_hours, shift_hours=0):
    """Minute-resolution MW curve of a sine consumer for a given shift."""
    m = np.arange(MINUTES_PER_DAY)
    phase = 2.0 * np.pi * base_phase_hours / 24.0
    return mean_load + amplitude * np.sin(
        2.0 * np.pi * (m + 60.0 * shift_hours) / MINUTES_PER_DAY + phase
    )


def hourly_energy(minute_mw):
    """Block sums of a minute MW series to 24 hourly MWh values."""
    minute_mw = np.asarray(minute_mw, dtype=float)
    return minute_mw.reshape(HOURS_PER_DAY, 60).sum(axis=1) / 60.0


def ewma_forecast(realized, state, alpha):
    """One exponentially weighted update of a forecast vector.

    Works on any resolution (hourly or minute): f <- alpha*realized + (1-alpha)*f.
    """
    realized = np.asarray(realized, dtype=float)
    state = np.asarray(state, dtype=float)
    return alpha * realized + (1.0 - alpha) * state


def optimal_phase_shift(usage_24, prices_24):
    """Shift (hours) minimizing the mean-centered usage/price correlation.

    Returns the s in 0..23 minimizing sum_h u[(h+s) % 24] * p[h] with both
    series mean-centered; ties break toward the smallest s.
    """
    u = np.asarray(usage_24, dtype=float)
    p = np.asarray(prices_24, dtype=float)
    if u.shape != (24,) or p.shape != (24,):
        raise ValueError("usage and price series must have length 24")
    uc = u - u.mean()
    pc = p - p.mean()
    # correlation for every cyclic shift via index rolling
    idx = (np.arange(24)[None, :] + np.arange(24)[:, None]) % 24
    corr = uc[idx] @ pc
    return int(np.argmin(corr))


def realize_minute_demand(consumer: SineConsumer, shift_hours, noise):
    """Realized minute MW series for one consumer on one day.

    ``noise`` is a length-1440 array of relative disturbances (may be zeros).
    Without noise the daily energy is shift-invariant by construction.
    """
    curve = sine_minute_curve(
        consumer.mean_load, consumer.amplitude, consumer.base_phase, shift_hours
    )
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (MINUTES_PER_DAY,):
        raise ValueError("noise must have length 1440")
    return curve * (1.0 + noise)


def generate_exg_profiles(inflexible_forecast_24, flexible_forecast_24, candidate_shifts):
    """Alternative 24-hour demand profiles for an exclusive-group bid.

    Each profile keeps the inflexible share and rotates the flexible share by
    one candidate shift.  All profiles carry the same daily energy.  If there
    is no flexible share, a single profile is emitted.
    """
    inflex = np.asarray(inflexible_forecast_24, dtype=float)
    flex = np.asarray(flexible_forecast_24, dtype=float)
    if flex.sum() == 0.0:
        return [inflex + flex], [0]
    profiles = [inflex + np.roll(flex, -int(s)) for s in candidate_shifts]
    return profiles, [int(s) for s in candidate_shifts]


def producer_balancing_offers(producer: Producer, scheduled_mw):
    """Up/down balancing offers (MW) given the day-ahead schedule of an hour.

    A producer under a minimum run requirement that was not dispatched offers
    nothing.  Up offers are priced at marginal cost times (1 + markup), down
    offers at marginal cost times (1 - markup): the producer buys energy back
    below its own cost, so down regulation is activated best-price-first.
    """
    if producer.min_run_required and scheduled_mw <= 0.0:
        return None, None
    cap = producer.capacity
    reg = producer.regulation_factor
    up_power = min(cap - scheduled_mw, reg * cap)
    down_power = min(scheduled_mw, reg * cap)
    up_price = min(producer.marginal_cost * (1.0 + producer.balancing_markup), PRICE_CAP)
    down_price = max(producer.marginal_cost * (1.0 - producer.balancing_markup), 0.0)
    up = ReserveOffer(producer.name, up_power, up_price) if up_power > 0 else None
    down = ReserveOffer(producer.name, down_power, down_price) if down_power > 0 else None
    return up, down


def generate_renewable_day(peak_capacity, forecast_error_sigma, rng):
    """One day of intermittent renewable output: (forecast, realized), MW.

    The forecast is one or two smooth half-sine windows with random start,
    duration and amplitude, capped at peak capacity.  The realization scales
    the forecast by a single relative error drawn once per day and is clamped
    to [0, peak].
    """
    forecast = np.zeros(MINUTES_PER_DAY)
    n_windows = int(rng.integers(1, 3))
    for _ in range(n_windows):
        start = int(rng.integers(0, MINUTES_PER_DAY))
        duration = int(rng.integers(120, 601))  # 2 h .. 10 h
        amplitude = float(rng.uniform(0.3, 1.0)) * peak_capacity
        t = np.arange(duration)
        window = amplitude * np.sin(np.pi * (t + 0.5) / duration)
        idx = (start + t) % MINUTES_PER_DAY  # wrap within the day
        np.add.at(forecast, idx, window)
    np.clip(forecast, 0.0, peak_capacity, out=forecast)
    err = float(rng.normal(0.0, forecast_error_sigma)) if forecast_error_sigma > 0 else 0.0
    realized = np.clip(forecast * (1.0 + err), 0.0, peak_capacity)
    return forecast, realized
