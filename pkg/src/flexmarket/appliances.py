"""Appliance-fleet demand model: a two-peak base load per utility plus a
fleet of once-a-day appliances, a share of which optimizes its start time.

Rather than instantiating ~250k devices, a handful of agent objects carry a
multiplicity that scales them to the configured fleet size.
"""

import numpy as np

from .agents import MINUTES_PER_DAY, Appliance, hourly_energy


def base_load_curve(peak_mw):
    """Minute MW curve with morning and evening peaks, maximum ``peak_mw``."""
    h = np.arange(MINUTES_PER_DAY) / 60.0
    shape = np.ones(MINUTES_PER_DAY)
    for center, width, height in ((8.0, 2.5, 0.35), (19.0, 3.0, 0.5)):
        d = np.minimum(np.abs(h - center), 24.0 - np.abs(h - center))  # circular
        shape += height * np.exp(-0.5 * (d / width) ** 2)
    return peak_mw * shape / shape.max()


def build_fleet(config, n_utilities):
    """Appliance agents for one utility: (normal_agents, optimizing_agents).

    The optimizing share is taken from the scenario's flexible_ratio by the
    caller via ``optimizing_count``.
    """
    per_utility = config.n_appliances // n_utilities
    multiplicity = max(per_utility // config.agents_per_utility, 1)
    agents = [
        Appliance(config.power_kw, config.duration_min, False, multiplicity)
        for _ in range(config.agents_per_utility)
    ]
    return agents


def fleet_split(agents, optimizing_count):
    normal = [a for a in agents[: len(agents) - optimizing_count]]
    optimizing = [
        Appliance(a.power_kw, a.duration_min, True, a.multiplicity)
        for a in agents[len(agents) - optimizing_count:]
    ]
    return normal, optimizing


def start_hour_distribution(base_minute):
    """Hourly start probabilities mirroring the base-load curve."""
    hourly = hourly_energy(base_minute)
    return hourly / hourly.sum()


def schedule_appliances(fleet, prices_24, regime, rng, start_probs=None):
    """Start minute for every appliance agent of a fleet.

    Normal appliances draw their start hour from ``start_probs`` (mirroring
    the base-load curve) and a uniform minute within the hour.  Optimizing
    appliances under RTP all start at the beginning of the cheapest hour
    (ties break toward the earliest hour).  Optimizing appliances under the
    integrated regime are placed by the utility, not here.
    """
    prices = np.asarray(prices_24, dtype=float)
    cheapest = int(np.argmin(prices))
    starts = []
    for appliance in fleet:
        if appliance.optimizing:
            if regime != "rtp":
                raise ValueError("integrated-regime appliances are placed by the utility")
            starts.append(cheapest * 60)
        else:
            hour = int(rng.choice(24, p=start_probs))
            minute = hour * 60 + int(rng.integers(0, 60))
            starts.append(min(minute, MINUTES_PER_DAY - appliance.duration_min))
    return starts


def appliance_minute_load(appliance, start_minute):
    load = np.zeros(MINUTES_PER_DAY)
    load[start_minute:start_minute + appliance.duration_min] = appliance.power_mw
    return load
