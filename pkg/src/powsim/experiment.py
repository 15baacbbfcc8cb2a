"""Experiment orchestration: seeded runs, sweeps, CSV outputs."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .config import ExperimentConfig, RunManifest, SyntheticData
from .engine import run_simulation
from .metrics import AggregateReport, RewardReport, aggregate, compute_rewards
from .netmodel import (
    CityLatencies,
    LatencyMatrix,
    MinerSpec,
    build_topology,
    load_placement_csv,
    two_cluster_latency,
    uniform_latency,
)

REWARD_HEADER = "miner_id,city,continent,blocks_mined,blocks_in_chain,f_pct,w_pct"
AGG_HEADER = "miner_id,city,continent,f_mean,f_ci95,w_mean,w_ci95"


def synthetic_miners(spec: SyntheticData) -> list[MinerSpec]:
    """Labeled placeholder miners for file-free experiments.

    Two-cluster setups label the dominant cluster EU and the rest AS so the
    continent summaries stay meaningful.
    """
    n = spec.n
    if spec.kind == "two_cluster":
        nd = int(round(spec.dominant_fraction * n))
        return [
            MinerSpec(i, f"c{i}", "EU" if i < nd else "AS")
            for i in range(n)
        ]
    return [MinerSpec(i, f"c{i}", "EU") for i in range(n)]


def synthetic_latency(spec: SyntheticData) -> LatencyMatrix:
    if spec.kind == "uniform":
        return uniform_latency(spec.n, spec.latency_ms)
    nd = int(round(spec.dominant_fraction * spec.n))
    return two_cluster_latency(nd, spec.n - nd, spec.eps_ms, spec.delta_ms)


def load_world(config: ExperimentConfig) -> tuple[list[MinerSpec], LatencyMatrix]:
    if config.synthetic is not None:
        return synthetic_miners(config.synthetic), synthetic_latency(config.synthetic)
    miners = load_placement_csv(config.placement_path)
    latency = CityLatencies.from_csv(config.latency_path).matrix_for(
        miners, same_city_floor_ms=config.same_city_floor_ms
    )
    return miners, latency


def run_one(
    config: ExperimentConfig,
    miners: list[MinerSpec],
    latency: LatencyMatrix,
    run_index: int,
) -> RewardReport:
    topo_run = run_index if config.topology_per_run else 0
    topology = build_topology(config.policy, miners, config.root_seed, topo_run)
    sim = replace(config.sim, seed=config.root_seed)
    result = run_simulation(sim, topology, latency, run_index=run_index)
    if not result.replicas_agree:
        import warnings

        warnings.warn(
            f"run {run_index}: replicas disagree on the retained chain prefix; "
            "rewards are measured from the observer replica",
            stacklevel=2,
        )
    return compute_rewards(result, miners, config.sim.discard_tail)


def _run_cell(args) -> RewardReport:
    config, miners, latency, run_index = args
    return run_one(config, miners, latency, run_index)


def run_reports(
    config: ExperimentConfig,
    miners: list[MinerSpec],
    latency: LatencyMatrix,
    jobs: int = 1,
) -> list[RewardReport]:
    tasks = [(config, miners, latency, k) for k in range(config.runs)]
    if jobs <= 1 or config.runs == 1:
        return [_run_cell(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, tasks))


def write_reward_csv(path, report: RewardReport) -> None:
    lines = [REWARD_HEADER]
    for i in range(report.n):
        lines.append(
            f"{int(report.miner_ids[i])},{report.cities[i]},{report.continents[i]},"
            f"{int(report.blocks_mined[i])},{int(report.blocks_in_chain[i])},"
            f"{report.f_pct[i]:.6f},{report.w_pct[i]:.6f}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def write_aggregate_csv(path, agg: AggregateReport) -> None:
    lines = [AGG_HEADER]
    for i in range(len(agg.miner_ids)):
        lines.append(
            f"{int(agg.miner_ids[i])},{agg.cities[i]},{agg.continents[i]},"
            f"{agg.f_mean[i]:.6f},{agg.f_ci95[i]:.6f},"
            f"{agg.w_mean[i]:.6f},{agg.w_ci95[i]:.6f}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def sweep_cells(config: ExperimentConfig) -> list[tuple[str, ExperimentConfig]]:
    """Expand the sweep axis into (cell name, cell config) pairs.

    Cells share the base config's root seed, so the untouched part of every
    topology draw is identical across cells and only the intervention moves.
    """
    if config.sweep is None:
        return [("base", config)]
    cells = []
    sweep = config.sweep
    for v in sweep.values:
        if sweep.kind == "group_degree":
            from .netmodel import DegreeOverride

            overrides = tuple(
                o for o in config.policy.overrides if o.group != sweep.group
            ) + (DegreeOverride(degree=int(v), group=sweep.group),)
            cell = replace(config, policy=replace(config.policy, overrides=overrides))
            cells.append((f"degree_{int(v)}", cell))
        elif sweep.kind == "dominant_fraction":
            cell = replace(
                config, synthetic=replace(config.synthetic, dominant_fraction=float(v))
            )
            cells.append((f"fraction_{float(v):g}", cell))
        else:  # delta_ms
            cell = replace(config, synthetic=replace(config.synthetic, delta_ms=float(v)))
            cells.append((f"delta_{float(v):g}", cell))
    return cells


def run_experiment(config: ExperimentConfig, outdir, jobs: int = 1) -> dict:
    """Execute all runs (and sweep cells), writing CSVs and a manifest.

    Returns {cell name: AggregateReport}.  A failing cell is recorded and
    skipped; other cells still complete.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    results: dict[str, AggregateReport] = {}
    failures: dict[str, str] = {}

    for name, cell in sweep_cells(config):
        cell_dir = outdir if name == "base" else outdir / name
        cell_dir.mkdir(parents=True, exist_ok=True)
        try:
            miners, latency = load_world(cell)
            reports = run_reports(cell, miners, latency, jobs=jobs)
            for k, rep in enumerate(reports):
                write_reward_csv(cell_dir / f"run_{k:03d}.csv", rep)
            agg = aggregate(reports)
            write_aggregate_csv(cell_dir / "aggregate.csv", agg)
            results[name] = agg
        except Exception as exc:  # noqa: BLE001 - cell isolation is the point
            failures[name] = f"{type(exc).__name__}: {exc}"
            (cell_dir / "FAILED.txt").write_text(failures[name] + "\n", encoding="utf-8")

    RunManifest.create(config).write(outdir / "manifest.json")
    if failures and not results:
        raise RuntimeError(f"all sweep cells failed: {failures}")
    return results
