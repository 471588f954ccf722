"""Scenario configuration: dataclasses, validation, YAML (de)serialization.

The default scenario is calibrated to a 12.6 GW peak system with a 14%
peak-to-peak daily load cycle, a nine-plant merit-order book terminated by a
1 GW buffer plant at 3000 EUR/MWh, and ten utilities of 100 users each.
"""

import hashlib
import json
from dataclasses import dataclass, field, asdict

import yaml

from .agents import Producer
from .balancing import BalancingConfig
from .errors import ParseError, ValidationError
from .market import AnnealConfig

REGIMES = ("rtp", "integrated")

# every whole-hour rotation: fine enough that the profile selection can place
# flexible load exactly where the merit order wants it
DEFAULT_EXG_SHIFTS = tuple(range(24))


@dataclass(frozen=True)
class NoiseConfig:
    """Multiplicative Gaussian demand noise, per user per minute."""

    sigma: float = 0.01


@dataclass(frozen=True)
class RenewableConfig:
    peak_capacity: float = 2000.0
    forecast_error_sigma: float = 0.1


@dataclass(frozen=True)
class UtilityConfig:
    name: str
    n_users: int = 100
    mean_load: float = 11.718   # MW per user
    amplitude: float = 0.882    # MW per user
    base_phase: float = 12.0    # hours; peak at 18:00
    alpha: float = 0.3          # forecast EWMA weight
    exg_shifts: tuple = DEFAULT_EXG_SHIFTS


@dataclass(frozen=True)
class ApplianceConfig:
    """Appendix-style appliance-fleet demand instead of sine consumers."""

    base_peak: float = 11600.0        # MW, two-peak base-load curve maximum
    n_appliances: int = 250_000
    power_kw: float = 3.0
    duration_min: int = 60
    agents_per_utility: int = 40
    candidate_hours: tuple = tuple(range(24))
    users_equivalent: int = 100       # scales base-load noise like n users


@dataclass(frozen=True)
class Scenario:
    n_days: int = 30
    warmup_days: int = 5
    regime: str = "rtp"
    flexible_ratio: float = 0.0
    seed: int = 1
    utilities: tuple = ()
    producers: tuple = ()
    renewable: RenewableConfig | None = None
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    balancing: BalancingConfig = field(default_factory=BalancingConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    appliance_mode: ApplianceConfig | None = None


def default_producers():
    """Merit-order fleet: a smooth conventional band covering the 10.8-12.6 GW
    daily cycle, peakers without a minimum run requirement, and high-priced
    reserve plants topped by the 1 GW / 3000 EUR buffer that terminates the
    balancing book.
    """
    # Base plants keep sizeable regulation bands (the system needs the depth)
    # but charge steep ramping premiums, so regulation beyond the peaker layer
    # is priced far above the spot range.
    return (
        Producer("nuclear", 2800, 5.0, True, 0.05, 79.0),
        Producer("hydro_a", 1500, 10.0, True, 0.10, 29.0),
        Producer("hydro_b", 1200, 18.0, True, 0.10, 17.0),
        Producer("chp_a", 1200, 26.0, True, 0.10, 12.0),
        Producer("chp_b", 1000, 33.0, True, 0.10, 10.0),
        Producer("coal_a", 900, 40.0, True, 0.10, 9.0),
        Producer("coal_b", 800, 47.0, True, 0.10, 8.0),
        Producer("gas_a", 800, 55.0, True, 0.15, 7.0),
        Producer("gas_b", 700, 64.0, True, 0.15, 6.5),
        Producer("gas_c", 600, 74.0, True, 0.15, 6.0),
        Producer("gas_peak_a", 500, 85.0, False, 0.25, 0.8),
        Producer("gas_peak_b", 500, 100.0, False, 0.25, 0.8),
        Producer("oil_a", 400, 130.0, False, 0.30, 0.5),
        Producer("oil_b", 400, 180.0, False, 0.30, 0.5),
        Producer("reserve_a", 500, 700.0, False, 1.00, 0.0),
        Producer("reserve_b", 500, 1200.0, False, 1.00, 0.0),
        Producer("buffer", 1000, 3000.0, False, 1.00, 0.0),
    )


def default_utilities(n=10):
    return tuple(UtilityConfig(name=f"u{i + 1:02d}") for i in range(n))


def default_scenario(**overrides):
    base = dict(utilities=default_utilities(), producers=default_producers())
    base.update(overrides)
    scenario = Scenario(**base)
    validate_scenario(scenario)
    return scenario


def validate_scenario(s: Scenario):
    """Range-check every field; errors name the offending key."""
    if s.n_days < 1:
        raise ValidationError("n_days", "must be >= 1")
    if s.warmup_days < 0 or s.warmup_days >= s.n_days:
        raise ValidationError("warmup_days", "must be in [0, n_days)")
    if s.regime not in REGIMES:
        raise ValidationError("regime", f"must be one of {REGIMES}")
    if not 0.0 <= s.flexible_ratio <= 1.0:
        raise ValidationError("flexible_ratio", "must be within [0, 1]")
    if not s.utilities:
        raise ValidationError("utilities", "at least one utility required")
    if not s.producers:
        raise ValidationError("producers", "at least one producer required")
    for i, u in enumerate(s.utilities):
        key = f"utilities[{i}]"
        if u.n_users < 1:
            raise ValidationError(f"{key}.n_users", "must be >= 1")
        if not 0.0 < u.alpha <= 1.0:
            raise ValidationError(f"{key}.alpha", "must be in (0, 1]")
        if not 0.0 <= u.amplitude < u.mean_load:
            raise ValidationError(f"{key}.amplitude", "needs 0 <= amplitude < mean_load")
        if not u.exg_shifts or any(not 0 <= int(x) < 24 for x in u.exg_shifts):
            raise ValidationError(f"{key}.exg_shifts", "shifts must be hours in 0..23")
    for i, p in enumerate(s.producers):
        key = f"producers[{i}]"
        if p.capacity <= 0:
            raise ValidationError(f"{key}.capacity", "must be > 0")
        if p.marginal_cost < 0:
            raise ValidationError(f"{key}.marginal_cost", "must be >= 0")
    if s.noise.sigma < 0:
        raise ValidationError("noise.sigma", "must be >= 0")
    if s.balancing.activation_limit < 0:
        raise ValidationError("balancing.activation_limit", "must be >= 0")
    if s.anneal.initial_temp <= 0:
        raise ValidationError("anneal.initial_temp", "must be > 0")
    if s.anneal.iterations < 1:
        raise ValidationError("anneal.iterations", "must be >= 1")
    if s.renewable is not None:
        if s.renewable.peak_capacity <= 0:
            raise ValidationError("renewable.peak_capacity", "must be > 0")
        if s.renewable.forecast_error_sigma < 0:
            raise ValidationError("renewable.forecast_error_sigma", "must be >= 0")
    if s.appliance_mode is not None:
        a = s.appliance_mode
        if a.base_peak <= 0:
            raise ValidationError("appliance_mode.base_peak", "must be > 0")
        if a.n_appliances < 1:
            raise ValidationError("appliance_mode.n_appliances", "must be >= 1")
        if a.duration_min < 1 or a.duration_min > 60:
            raise ValidationError("appliance_mode.duration_min", "must be in 1..60")
        if a.agents_per_utility < 2:
            raise ValidationError("appliance_mode.agents_per_utility", "must be >= 2")
        if any(not 0 <= int(h) < 24 for h in a.candidate_hours):
            raise ValidationError("appliance_mode.candidate_hours", "hours must be in 0..23")
    return s


def scenario_to_dict(s: Scenario) -> dict:
    d = asdict(s)
    d["utilities"] = [asdict(u) for u in s.utilities]
    d["producers"] = [asdict(p) for p in s.producers]
    for u in d["utilities"]:
        u["exg_shifts"] = list(u["exg_shifts"])
    if d["appliance_mode"] is not None:
        d["appliance_mode"]["candidate_hours"] = list(d["appliance_mode"]["candidate_hours"])
    return d


def _build(section_cls, data, key):
    """Construct a config dataclass from a mapping, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ValidationError(key, "expected a mapping")
    allowed = set(section_cls.__dataclass_fields__)
    unknown = set(data) - allowed
    if unknown:
        raise ValidationError(f"{key}.{sorted(unknown)[0]}", "unknown key")
    try:
        return section_cls(**data)
    except (TypeError, ValueError) as exc:
        raise ValidationError(key, str(exc)) from exc


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ValidationError("<root>", "scenario must be a mapping")
    allowed = set(Scenario.__dataclass_fields__)
    unknown = set(data) - allowed
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown key")
    kwargs = {}
    simple = ("n_days", "warmup_days", "flexible_ratio", "seed")
    for key in simple:
        if key in data:
            kwargs[key] = data[key]
    if "regime" in data:
        regime = str(data["regime"]).lower()
        if regime == "exg":  # common shorthand for the integrated regime
            regime = "integrated"
        kwargs["regime"] = regime
    if "utilities" in data:
        utilities = []
        for i, entry in enumerate(data["utilities"]):
            entry = dict(entry)
            if "exg_shifts" in entry:
                entry["exg_shifts"] = tuple(entry["exg_shifts"])
            utilities.append(_build(UtilityConfig, entry, f"utilities[{i}]"))
        kwargs["utilities"] = tuple(utilities)
    if "producers" in data:
        kwargs["producers"] = tuple(
            _build(Producer, dict(entry), f"producers[{i}]")
            for i, entry in enumerate(data["producers"])
        )
    for key, cls in (
        ("anneal", AnnealConfig),
        ("balancing", BalancingConfig),
        ("noise", NoiseConfig),
        ("renewable", RenewableConfig),
        ("appliance_mode", ApplianceConfig),
    ):
        if key in data and data[key] is not None:
            entry = dict(data[key])
            if key == "appliance_mode" and "candidate_hours" in entry:
                entry["candidate_hours"] = tuple(entry["candidate_hours"])
            kwargs[key] = _build(cls, entry, key)
    if "utilities" not in kwargs:
        kwargs["utilities"] = default_utilities()
    if "producers" not in kwargs:
        kwargs["producers"] = default_producers()
    scenario = Scenario(**kwargs)
    validate_scenario(scenario)
    return scenario


def load_scenario(path) -> Scenario:
    """Load and validate a YAML scenario file; defaults fill missing sections."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ParseError(f"cannot parse {path}: {exc}") from exc
    if data is None:
        data = {}
    return scenario_from_dict(data)


def save_scenario(scenario: Scenario, path):
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(scenario_to_dict(scenario), fh, sort_keys=True)


def scenario_hash(scenario: Scenario) -> str:
    """Content hash making every reported number re-derivable from the repo."""
    canonical = json.dumps(scenario_to_dict(scenario), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
