"""Command-line interface.

Subcommands: simulate, sweep, theory, oracle, optimum, validate-data.
Exit codes: 0 success, 1 validation/configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import oracle as oracle_mod
from . import theory
from .config import ExperimentConfig, parse_config
from .metrics import continent_summary
from .netmodel import CityLatencies, ConfigError, DataError, load_placement_csv


def _add_common_run_flags(p):
    p.add_argument("--config", required=True, help="TOML experiment file")
    p.add_argument("--seed", type=int, default=None, help="override the root seed")
    p.add_argument("--runs", type=int, default=None, help="override the run count")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="powsim")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the seeded simulations of a config")
    _add_common_run_flags(sim)

    sw = sub.add_parser("sweep", help="run every cell of the config's sweep axis")
    _add_common_run_flags(sw)

    th = sub.add_parser("theory", help="closed-form reward tables")
    thsub = th.add_subparsers(dest="kind", required=True)
    t1 = thsub.add_parser("single")
    t1.add_argument("--eps", type=float, required=True)
    t1.add_argument("--n", type=int, default=20)
    t2 = thsub.add_parser("two")
    t2.add_argument("--p", type=float, required=True)
    t2.add_argument("--n", type=int, default=246)
    t3 = thsub.add_parser("three")
    t3.add_argument("--p1", type=float, required=True)
    t3.add_argument("--p2", type=float, required=True)
    t3.add_argument("--p3", type=float, required=True)
    t3.add_argument("--n", type=int, default=246)
    for t in (t1, t2, t3):
        t.add_argument("--csv", default=None, help="also write the table to this file")

    orc = sub.add_parser("oracle", help="round-model Monte Carlo versus the formulas")
    osub = orc.add_subparsers(dest="kind", required=True)
    o1 = osub.add_parser("single")
    o1.add_argument("--eps", type=float, required=True)
    o2 = osub.add_parser("two")
    o2.add_argument("--p", type=float, required=True)
    o2.add_argument("--eps", type=float, default=0.3)
    o2.add_argument("--delta", type=float, default=1.5)
    o3 = osub.add_parser("three")
    o3.add_argument("--p1", type=float, required=True)
    o3.add_argument("--p2", type=float, required=True)
    o3.add_argument("--p3", type=float, required=True)
    o3.add_argument("--eps", type=float, default=0.3)
    o3.add_argument("--delta", type=float, default=1.5)
    for o in (o1, o2, o3):
        o.add_argument("--n", type=int, default=20)
        o.add_argument("--rounds", type=int, default=100_000)
        o.add_argument("--seed", type=int, default=1)
        o.add_argument("--csv", default=None)

    opt = sub.add_parser("optimum", help="grid-scan the optimal dominant-cluster size")
    opt.add_argument("kind", choices=["two", "three-equal", "two-equal-dominant"])
    opt.add_argument("--step", type=float, default=0.005)

    vd = sub.add_parser("validate-data", help="check placement/latency files")
    vd.add_argument("--placement", required=True)
    vd.add_argument("--latency", required=True)

    return ap


def _load_config(args) -> ExperimentConfig:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, root_seed=args.seed, sim=replace(cfg.sim, seed=args.seed))
    if args.runs is not None:
        if args.runs < 1:
            raise ConfigError("--runs must be >= 1")
        cfg = replace(cfg, runs=args.runs)
    return cfg


def cmd_simulate(args) -> int:
    from .experiment import load_world, run_experiment

    cfg = _load_config(args)
    if args.command == "simulate":
        cfg = replace(cfg, sweep=None)
    results = run_experiment(cfg, args.out, jobs=args.jobs)
    miners, _ = load_world(cfg)
    for name, agg in results.items():
        print(f"[{name}] {agg.runs} runs, fair share {agg.fair_pct:.4f}%")
        for row in continent_summary(agg, miners):
            print(
                f"  {row.continent}: {row.miner_count:3d} miners, "
                f"mean f {row.f_mean_pct:.4f}% ({row.gain_vs_fair:.3f}x fair)"
            )
    print(f"outputs in {Path(args.out).resolve()}")
    return 0


def _print_table(header: list[str], rows: list[list], csv_path=None) -> None:
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) for i, h in enumerate(header)]
    print("  ".join(str(h).ljust(w) for h, w in zip(header, widths)))
    for r in rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))
    if csv_path:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(",".join(map(str, header)) + "\n")
            for r in rows:
                fh.write(",".join(map(str, r)) + "\n")
        print(f"wrote {csv_path}")


def cmd_theory(args) -> int:
    if args.kind == "single":
        f, w = theory.single_cluster(args.n, args.eps)
        _print_table(
            ["eps", "n", "f_per_miner", "w_per_miner"],
            [[args.eps, args.n, f"{f:.6f}", f"{w:.6f}"]],
            args.csv,
        )
    elif args.kind == "two":
        params = theory.TwoClusterParams(p=args.p, n=args.n)
        f = theory.two_cluster_F(params)
        w = theory.two_cluster_W(params)
        _print_table(
            ["p", "n", "f_dominant", "gain", "w_dominant"],
            [[args.p, args.n, f"{f:.6f}", f"{f * args.n:.4f}", f"{w:.6f}"]],
            args.csv,
        )
    else:
        params = theory.ThreeClusterParams(args.p1, args.p2, args.p3, n=args.n)
        res = theory.three_cluster_F(params)
        _print_table(
            ["p1", "p2", "p3", "n", "f_cluster1", "gain", "m1", "m2", "m3"],
            [[
                args.p1, args.p2, args.p3, args.n,
                f"{res.f_per_miner:.6f}", f"{res.gain:.4f}",
                f"{res.m1:.4f}", f"{res.m2:.4f}", f"{res.m3:.4f}",
            ]],
            args.csv,
        )
    return 0


def cmd_oracle(args) -> int:
    n, rounds = args.n, args.rounds
    if args.kind == "single":
        delta = oracle_mod.single_cluster_delta(n, args.eps)
        labels = np.zeros(n, dtype=int)
        f_ref, w_ref = theory.single_cluster(n, args.eps)
        refs = [(0, n, f_ref, w_ref)]
    elif args.kind == "two":
        n1 = int(round(args.p * n))
        delta = oracle_mod.two_cluster_delta(n1, n - n1, args.eps, args.delta)
        labels = np.array([0] * n1 + [1] * (n - n1))
        params = theory.TwoClusterParams(p=args.p, n=n, eps=args.eps, delta=args.delta)
        refs = [(0, n1, theory.two_cluster_F(params), theory.two_cluster_W(params))]
    else:
        sizes = [int(round(args.p1 * n)), int(round(args.p2 * n))]
        sizes.append(n - sum(sizes))
        delta, labels = oracle_mod.cluster_delta(sizes, args.eps, args.delta)
        params = theory.ThreeClusterParams(
            args.p1, args.p2, args.p3, n=n, eps=args.eps, delta=args.delta
        )
        refs = [(0, sizes[0], theory.three_cluster_F(params).f_per_miner, None)]

    trace = oracle_mod.round_oracle(delta, rounds, args.seed)
    f_hat = trace.f_hat()
    w_hat = trace.w_hat()
    se = trace.f_hat_stderr()

    rows = []
    for cl, size, f_ref, w_ref in refs:
        sel = labels == cl
        fm = f_hat[sel].mean()
        wm = w_hat[sel].mean()
        sem = se[sel].mean()
        z = (fm - f_ref) / sem if sem > 0 else 0.0
        rows.append([
            cl, size, f"{fm:.6f}", f"{f_ref:.6f}", f"{sem:.6f}", f"{z:+.2f}",
            f"{wm:.6f}", "-" if w_ref is None else f"{w_ref:.6f}",
        ])
    _print_table(
        ["cluster", "size", "f_hat", "f_formula", "stderr", "z", "w_hat", "w_formula"],
        rows,
        args.csv,
    )
    return 0


def cmd_optimum(args) -> int:
    if args.kind == "two":
        p, g = theory.optimal_two_cluster(step=args.step)
    elif args.kind == "three-equal":
        p, g = theory.optimal_three_cluster_equal_minorities(step=args.step)
    else:
        p, g = theory.optimal_cluster_fraction(
            theory.two_equal_dominant_gain, 0.25, 0.495, args.step
        )
    _print_table(["kind", "argmax_p", "max_gain"], [[args.kind, f"{p:.4f}", f"{g:.4f}"]])
    return 0


def cmd_validate_data(args) -> int:
    miners = load_placement_csv(args.placement)
    lats = CityLatencies.from_csv(args.latency)
    mat = lats.matrix_for(miners)
    by_cont = {}
    for m in miners:
        by_cont[m.continent] = by_cont.get(m.continent, 0) + 1
    print(f"{len(miners)} miners over {len({m.city for m in miners})} cities: {by_cont}")
    iu = np.triu_indices(mat.n, 1)
    print(
        f"latency ok: {mat.n}x{mat.n}, median {np.median(mat.delays[iu]):.1f} ms, "
        f"max {mat.delays.max():.1f} ms"
    )
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("simulate", "sweep"):
            return cmd_simulate(args)
        if args.command == "theory":
            return cmd_theory(args)
        if args.command == "oracle":
            return cmd_oracle(args)
        if args.command == "optimum":
            return cmd_optimum(args)
        if args.command == "validate-data":
            return cmd_validate_data(args)
        raise AssertionError(args.command)
    except (ConfigError, DataError, theory.DomainError, oracle_mod.OracleError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
