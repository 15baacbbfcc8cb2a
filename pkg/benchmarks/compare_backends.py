#!/usr/bin/env python3
"""Time the jitted kernels against the pure-Python fallback.

The two paths run the same source; POWSIM_BACKEND picks whether numba
compiles it.  Run from the repo root:

    python benchmarks/compare_backends.py
"""

import os
import pickle
import subprocess
import sys

WORK = """
import pickle, sys, time
import powsim
from powsim import SimConfig, run_simulation
from powsim.netmodel import MinerSpec, build_topology, random_out_degree_policy, uniform_latency
from powsim.oracle import round_oracle, two_cluster_delta

miners = [MinerSpec(i, f"c{i}", "EU") for i in range(40)]
topo = build_topology(random_out_degree_policy(4), miners, root_seed=3)
lat = uniform_latency(40, 20.0)
cfg = SimConfig(n=40, mean_interblock=2000.0, validation_delay=1.0,
                target_chain_length=100, discard_tail=20, seed=1)
run_simulation(cfg, topo, lat)  # warm-up / compile

cfg = SimConfig(n=40, mean_interblock=2000.0, validation_delay=1.0,
                target_chain_length=4000, discard_tail=100, seed=1)
t0 = time.perf_counter()
r = run_simulation(cfg, topo, lat)
engine_s = time.perf_counter() - t0

dmat = two_cluster_delta(14, 6, 0.3, 1.5)
round_oracle(dmat, 1000, seed=1)  # warm-up
t0 = time.perf_counter()
tr = round_oracle(dmat, 500_000, seed=1)
oracle_s = time.perf_counter() - t0

sys.stdout.buffer.write(pickle.dumps({
    "backend": powsim.backend_name(),
    "engine_s": engine_s,
    "engine_events": r.wall_events,
    "oracle_s": oracle_s,
}))
"""


def run(backend: str) -> dict:
    env = dict(os.environ, POWSIM_BACKEND=backend)
    res = subprocess.run([sys.executable, "-c", WORK], capture_output=True, env=env, check=True)
    return pickle.loads(res.stdout)


def main():
    rows = [run("numba"), run("python")]
    ev = rows[0]["engine_events"]
    print(f"{'backend':<8} {'engine (4k blocks)':>20} {'events/s':>12} {'oracle (5e5 rounds)':>20}")
    for r in rows:
        print(
            f"{r['backend']:<8} {r['engine_s']:>18.2f}s {ev / r['engine_s']:>12.0f} "
            f"{r['oracle_s']:>18.2f}s"
        )
    speed = rows[1]["engine_s"] / rows[0]["engine_s"]
    print(f"numba speedup on the event kernel: {speed:.1f}x")


if __name__ == "__main__":
    main()
