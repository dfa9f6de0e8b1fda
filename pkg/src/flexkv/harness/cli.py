"""Command-line interface: run / sweep / microbench / analyze."""
from __future__ import annotations

import sys
from pathlib import Path

import click

from ..analysis import (TransitionCostInput, additional_cost_flexible,
                        additional_cost_greedy, additional_cost_lazy,
                        transition_cost_and_delay)
from ..config import ConfigError
from ..transitions import TransitionKind
from .experiment import (ExperimentConfig, experiment_config_from_file,
                         run_experiment, sweep_fixed_k, transition_microbench,
                         write_metrics_csv)


@click.group()
def main():
    """FLSM key-value engine benchmark toolkit."""


def _fail(exc: Exception):
    raise click.ClickException(str(exc))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Experiment config JSON.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Directory for metrics.csv and figures.")
@click.option("--workload", "workload_path", type=click.Path(exists=True),
              default=None, help="Workload spec JSON overriding the config.")
@click.option("--plot/--no-plot", default=True, help="Render figures next to the CSV.")
def run(config_path, seed, out_dir, workload_path, plot):
    """Run one experiment and report per-session mean latency."""
    try:
        cfg = experiment_config_from_file(config_path, seed=seed,
                                          workload_path=workload_path)
        result = run_experiment(cfg, out_dir=out_dir, plot=plot)
    except (ConfigError, ValueError) as exc:
        _fail(exc)
    click.echo(f"missions: {len(result.rows)}")
    for s, mean in enumerate(result.session_mean_latency):
        click.echo(f"session {s}: mean simulated latency/op = {mean:.6f}")
    click.echo(f"final policies: {result.final_policies}")
    if result.converged_at is not None:
        click.echo(f"tuner converged at mission {result.converged_at}")
    if result.csv_path:
        click.echo(f"metrics: {result.csv_path}")
    for p in result.figure_paths:
        click.echo(f"figure: {p}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--plot/--no-plot", default=True)
def sweep(config_path, seed, out_dir, plot):
    """Brute-force fixed-K sweep over the identical workload."""
    try:
        cfg = experiment_config_from_file(config_path, seed=seed)
        result = sweep_fixed_k(cfg)
    except (ConfigError, ValueError) as exc:
        _fail(exc)
    click.echo(f"{'K':>3}  {'mean latency/op':>16}")
    for e in result.entries:
        mark = " *" if e.k == result.best_k else ""
        click.echo(f"{e.k:>3}  {e.mean_latency:>16.6f}{mark}")
    click.echo(f"best K: {result.best_k}")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "sweep.csv").open("w") as fh:
            fh.write("K,mean_latency\n")
            for e in result.entries:
                fh.write(f"{e.k},{e.mean_latency!r}\n")
        click.echo(f"table: {out / 'sweep.csv'}")
        if plot:
            from .plots import save_sweep_figure
            click.echo(f"figure: {save_sweep_figure(result.entries, out / 'sweep.png')}")


@main.command()
@click.option("--transition", "kinds", multiple=True,
              type=click.Choice([k.value for k in TransitionKind]),
              help="Transition kind(s); defaults to all three.")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@click.option("--to-policy", type=int, default=None, help="Target policy (default T).")
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--plot/--no-plot", default=True)
def microbench(kinds, config_path, seed, to_policy, out_dir, plot):
    """Mid-workload policy transition micro-benchmark."""
    kinds = kinds or tuple(k.value for k in TransitionKind)
    try:
        cfg = experiment_config_from_file(config_path, seed=seed)
        results = [
            transition_microbench(TransitionKind(k), cfg, to_policy=to_policy,
                                  out_dir=out_dir)
            for k in kinds
        ]
    except (ConfigError, ValueError) as exc:
        _fail(exc)
    for res in results:
        click.echo(f"{res.kind.value:>9}: total sim time {res.total_sim_time:.1f}, "
                   f"write spike x{res.write_spike_ratio:.2f} at mission "
                   f"{res.transition_mission}")
    if out_dir is not None and plot:
        from .plots import save_microbench_figure
        fig = save_microbench_figure(results, Path(out_dir) / "microbench.png")
        click.echo(f"figure: {fig}")


@main.command()
@click.option("--T", "size_ratio", type=int, default=10, show_default=True)
@click.option("--C", "level_capacity", type=float, default=1024000.0, show_default=True)
@click.option("--B", "page_size", type=float, default=4096.0, show_default=True)
@click.option("--E", "entry_size", type=float, default=1024.0, show_default=True)
@click.option("--K", "old_policy", type=int, default=5, show_default=True)
@click.option("--Kp", "new_policy", type=int, default=4, show_default=True)
@click.option("--x", "fill", type=float, default=0.5, show_default=True)
@click.option("--f", "fpr", type=float, default=0.01, show_default=True)
@click.option("--gamma", type=float, default=0.5, show_default=True)
@click.option("--Nu", "updates_per_sec", type=float, default=1000.0, show_default=True)
@click.option("--alt-flexible-shape", is_flag=True,
              help="Use the alternative (1-x) flexible-cost shape.")
def analyze(size_ratio, level_capacity, page_size, entry_size, old_policy,
            new_policy, fill, fpr, gamma, updates_per_sec, alt_flexible_shape):
    """Print the transition cost/delay/additional-cost table."""
    try:
        inp = TransitionCostInput(
            size_ratio=size_ratio, level_capacity=level_capacity,
            page_size=page_size, entry_size=entry_size, old_policy=old_policy,
            new_policy=new_policy, fill=fill, fpr=fpr, lookup_fraction=gamma,
            updates_per_sec=updates_per_sec)
        table = []
        for kind, extra in (
            (TransitionKind.GREEDY, additional_cost_greedy(inp)),
            (TransitionKind.LAZY, additional_cost_lazy(inp)),
            (TransitionKind.FLEXIBLE,
             additional_cost_flexible(inp, text_variant=alt_flexible_shape)),
        ):
            cost, delay = transition_cost_and_delay(kind, inp)
            table.append((kind.value, cost, delay, extra))
    except ValueError as exc:
        _fail(exc)
    click.echo(f"{'transition':<10} {'cost_ios':<22} {'delay_s':<22} {'additional_ios':<22}")
    for name, cost, delay, extra in table:
        click.echo(f"{name:<10} {cost!r:<22} {delay!r:<22} {extra!r:<22}")


if __name__ == "__main__":
    sys.exit(main())
