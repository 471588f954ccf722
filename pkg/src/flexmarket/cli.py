"""Command line interface: single runs and experiment sweeps."""

import dataclasses
import sys

import click

from .engine import run_simulation
from .reporting import SweepSpec, run_sweep, write_outputs
from .scenario import default_scenario, load_scenario


def _load(scenario_path):
    if scenario_path is None:
        return default_scenario()
    return load_scenario(scenario_path)


def _apply(scenario, days, seed, regime, flex_ratio):
    updates = {}
    if days is not None:
        updates["n_days"] = days
        updates["warmup_days"] = min(scenario.warmup_days, max(days - 1, 0))
    if seed is not None:
        updates["seed"] = seed
    if regime is not None:
        updates["regime"] = "integrated" if regime == "exg" else regime
    if flex_ratio is not None:
        updates["flexible_ratio"] = flex_ratio
    return dataclasses.replace(scenario, **updates) if updates else scenario


@click.group()
def main():
    """Cascaded electricity-market simulator (day-ahead + balancing)."""


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True),
              default=None, help="Scenario YAML; omit for the built-in default.")
@click.option("--days", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--regime", type=click.Choice(["rtp", "exg", "integrated"]), default=None)
@click.option("--flex-ratio", type=float, default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def simulate(scenario_path, days, seed, regime, flex_ratio, out_dir):
    """Run one scenario and write the result files."""
    scenario = _apply(_load(scenario_path), days, seed, regime, flex_ratio)
    report = run_simulation(scenario)
    write_outputs([report], out_dir, scenario=scenario, seed=report.seed)
    for key, value in sorted(report.metrics.items()):
        click.echo(f"{key}: {value}")


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), default=None)
@click.option("--ratios", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
              help="Comma-separated flexible ratios.")
@click.option("--regimes", default="rtp,exg", help="Comma-separated regimes.")
@click.option("--renewable", type=click.Choice(["on", "off"]), default="off")
@click.option("--seeds", type=int, default=5, help="Seeds per cell.")
@click.option("--days", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def sweep(scenario_path, ratios, regimes, renewable, seeds, days, out_dir):
    """Sweep flexible ratio x regime (x renewable) and write summary tables."""
    scenario = _apply(_load(scenario_path), days, None, None, None)
    if renewable == "on" and scenario.renewable is None:
        from .scenario import RenewableConfig
        scenario = dataclasses.replace(scenario, renewable=RenewableConfig())
    spec = SweepSpec(
        ratios=tuple(float(x) for x in ratios.split(",")),
        regimes=tuple("integrated" if r.strip() == "exg" else r.strip()
                      for r in regimes.split(",")),
        renewable=renewable == "on",
        seeds=seeds,
    )
    rows, averaged, _ = run_sweep(scenario, spec)
    write_outputs([], out_dir, sweep_rows=rows, sweep_averaged=averaged,
                  scenario=scenario, seed=scenario.seed)
    failed = [r for r in rows if r.get("error")]
    for row in averaged:
        click.echo(
            f"{row['regime']:<10} ratio={row['flexible_ratio']:<4} "
            f"combined={row['combined_eur_per_mwh']:.3f} "
            f"balancing={row['balancing_eur_per_mwh']:.3f}"
        )
    if failed:
        for row in failed:
            click.echo(f"FAILED cell {row['regime']} ratio={row['flexible_ratio']} "
                       f"seed={row['seed']}: {row['error']}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
