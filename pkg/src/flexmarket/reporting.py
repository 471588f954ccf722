"""Experiment sweeps and result-file emission.

All CSVs carry a header row, comma delimiter, '.' decimal separator, UTF-8.
summary.json embeds the seed and a content hash of the scenario so every
reported number is re-derivable from the repository alone.
"""

import csv
import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor

from .engine import run_simulation
from .errors import IoError
from .scenario import Scenario, scenario_hash

ENV_OUT_DIR = "FLEXMARKET_OUT_DIR"
ENV_THREADS = "FLEXMARKET_THREADS"


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    ratios: tuple
    regimes: tuple = ("rtp", "integrated")
    renewable: bool = False
    seeds: int = 5

    def __post_init__(self):
        if not self.ratios or not self.regimes or self.seeds < 1:
            raise ValueError("sweep axes must be non-empty")


def _cells(base: Scenario, spec: SweepSpec):
    for regime in spec.regimes:
        for ratio in spec.ratios:
            for k in range(spec.seeds):
                renewable = base.renewable if spec.renewable else None
                scenario = dataclasses.replace(
                    base, regime=regime, flexible_ratio=float(ratio), renewable=renewable
                )
                yield scenario, base.seed + k


def _run_cell(args):
    scenario, seed = args
    report = run_simulation(scenario, seed)
    row = {
        "regime": scenario.regime,
        "flexible_ratio": scenario.flexible_ratio,
        "renewable": scenario.renewable is not None,
        "seed": seed,
        "error": "",
    }
    row.update(report.metrics)
    return row, report


def run_sweep(base: Scenario, spec: SweepSpec, keep_reports=False, workers=None):
    """One row per (regime, ratio, renewable, seed) cell plus a seed-averaged
    companion table.  A failing cell is recorded, not fatal for the others.
    """
    if workers is None:
        workers = int(os.environ.get(ENV_THREADS, "1"))
    cells = list(_cells(base, spec))
    rows, reports = [], []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_cell, cells))
        for (scenario, seed), (row, report) in zip(cells, outcomes):
            rows.append(row)
            if keep_reports:
                reports.append(report)
    else:
        for scenario, seed in cells:
            try:
                row, report = _run_cell((scenario, seed))
            except Exception as exc:  # keep the remaining cells running
                row = {
                    "regime": scenario.regime,
                    "flexible_ratio": scenario.flexible_ratio,
                    "renewable": scenario.renewable is not None,
                    "seed": seed,
                    "error": f"{type(exc).__name__}: {exc}",
                }
                report = None
            rows.append(row)
            if keep_reports and report is not None:
                reports.append(report)
    averaged = average_rows(rows)
    return rows, averaged, reports


METRIC_KEYS = (
    "combined_eur_per_mwh",
    "usage_eur_per_mwh",
    "balancing_eur_per_mwh",
    "balancing_volume_mwh",
    "mean_spot_eur_per_mwh",
    "group_advantage",
    "total_energy_mwh",
)


def average_rows(rows):
    """Seed-averaged companion table keyed by (regime, ratio, renewable)."""
    buckets = {}
    for row in rows:
        if row.get("error"):
            continue
        key = (row["regime"], row["flexible_ratio"], row["renewable"])
        buckets.setdefault(key, []).append(row)
    averaged = []
    for key in sorted(buckets, key=lambda k: (k[0], k[1], k[2])):
        group = buckets[key]
        entry = {"regime": key[0], "flexible_ratio": key[1], "renewable": key[2],
                 "n_seeds": len(group)}
        for metric in METRIC_KEYS:
            values = [r[metric] for r in group if metric in r]
            entry[metric] = sum(values) / len(values) if values else float("nan")
        averaged.append(entry)
    return averaged


def _open_w(path):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def write_outputs(reports, out_dir, sweep_rows=None, sweep_averaged=None,
                  scenario: Scenario = None, seed=None):
    """Emit prices.csv, demand.csv, balancing.csv, costs.csv and summary.json."""
    out_dir = os.environ.get(ENV_OUT_DIR, out_dir)
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def path(name):
        p = os.path.join(out_dir, name)
        written.append(p)
        return p

    with _open_w(path("prices.csv")) as fh:
        w = csv.writer(fh)
        w.writerow(["day", "hour", "spot", "imbalance"])
        for report in reports:
            for d in report.days:
                for h in range(24):
                    w.writerow([d.day, h, repr(float(d.spot_prices[h])),
                                repr(float(d.imbalance_prices[h]))])

    with _open_w(path("demand.csv")) as fh:
        w = csv.writer(fh)
        w.writerow(["day", "minute", "forecast", "realized"])
        for report in reports:
            for d in report.days:
                for m in range(1440):
                    w.writerow([d.day, m, repr(float(d.forecast_minute[m])),
                                repr(float(d.realized_minute[m]))])

    with _open_w(path("balancing.csv")) as fh:
        w = csv.writer(fh)
        w.writerow(["day", "slot", "direction", "producer", "energy", "price"])
        for report in reports:
            for d in report.days:
                for a in d.activations:
                    w.writerow([d.day, a.slot, a.direction, a.producer,
                                repr(float(a.energy)), repr(float(a.price))])

    with _open_w(path("costs.csv")) as fh:
        w = csv.writer(fh)
        w.writerow(["day", "utility", "group", "n_users", "energy_mwh",
                    "usage_cost_eur", "shared_balancing_cost_eur"])
        for report in reports:
            for d in report.days:
                for row in d.group_rows:
                    w.writerow([d.day, row["utility"], row["group"],
                                repr(row["n_users"]), repr(row["energy_mwh"]),
                                repr(row["usage_cost_eur"]),
                                repr(row["shared_balancing_cost_eur"])])

    summary = {
        "seed": seed if seed is not None else (scenario.seed if scenario else None),
        "scenario_hash": scenario_hash(scenario) if scenario else None,
        "runs": [r.metrics for r in reports],
    }
    if sweep_rows is not None:
        summary["sweep"] = sweep_rows
    if sweep_averaged is not None:
        summary["sweep_averaged"] = sweep_averaged
    with _open_w(path("summary.json")) as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return written
