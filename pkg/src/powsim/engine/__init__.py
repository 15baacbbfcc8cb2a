"""Event-driven mining and block-propagation simulator.

Two interchangeable engines implement the same protocol with the same random
streams and event ordering:

* ``kernel``    - array state machine, run through numba (or plain Python when
                  POWSIM_BACKEND=python); the production path.
* ``reference`` - object-based replica of the protocol, used as the
                  cross-checking implementation and for unit-level tests.

Scheduling discipline (shared by both, do not change one without the other):
events pop in (time, push-sequence) order; a handler pushes, in order, its
relay messages to neighbors in ascending id, then any require message, then
its timer re-arm.  Timer draws come one per re-arm from the miner's own
splitmix64 stream.  Once any replica's tip reaches the target height, mining
timers stop firing and already-scheduled deliveries run for one maximum
link-latency window before the run halts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..netmodel import ConfigError, LatencyMatrix, Topology


@dataclass(frozen=True)
class SimConfig:
    n: int
    mean_interblock: float = 15_000.0   # ms per miner
    validation_delay: float = 1.0       # ms per handled block message
    target_chain_length: int = 20_000
    discard_tail: int = 100
    seed: int = 0
    hash_rates: tuple | None = None     # per-miner rates (1/ms), overrides mean

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.mean_interblock <= 0:
            raise ConfigError("mean_interblock must be > 0")
        if self.validation_delay < 0:
            raise ConfigError("validation_delay must be >= 0")
        if self.target_chain_length <= self.discard_tail:
            raise ConfigError("target_chain_length must exceed discard_tail")
        if self.hash_rates is not None:
            if len(self.hash_rates) != self.n:
                raise ConfigError("hash_rates must have length n")
            if any(r <= 0 for r in self.hash_rates):
                raise ConfigError("hash_rates must be positive")

    def miner_means(self) -> np.ndarray:
        if self.hash_rates is not None:
            return 1.0 / np.asarray(self.hash_rates, dtype=np.float64)
        return np.full(self.n, float(self.mean_interblock))


@dataclass
class SimResult:
    per_miner_mined: np.ndarray     # blocks mined by each miner
    final_chain: np.ndarray         # observer's chain, genesis first
    block_miner: np.ndarray         # miner of block id b (genesis = -1)
    block_mined_at: np.ndarray      # mining time of block id b
    fork_count: int                 # mined blocks outside the final chain
    wall_events: int
    observer: int
    tip_heights: np.ndarray
    protocol_errors: int
    replica_tips: np.ndarray
    block_parent: np.ndarray
    replicas_agree: bool            # retained prefix identical at every replica

    @property
    def total_blocks(self) -> int:
        return int(self.block_miner.shape[0]) - 1

    def all_blocks(self) -> dict[int, tuple[int, float]]:
        return {
            b: (int(self.block_miner[b]), float(self.block_mined_at[b]))
            for b in range(1, self.block_miner.shape[0])
        }


def _chain_of(parent: np.ndarray, tip: int) -> np.ndarray:
    out = []
    b = int(tip)
    while b != -1:
        out.append(b)
        b = int(parent[b])
    out.reverse()
    return np.asarray(out, dtype=np.int64)


def finalize_result(
    parent: np.ndarray,
    miner: np.ndarray,
    mined_at: np.ndarray,
    tips: np.ndarray,
    heights: np.ndarray,
    per_miner_mined: np.ndarray,
    wall_events: int,
    protocol_errors: int,
    discard_tail: int,
) -> SimResult:
    tip_heights = heights[tips]
    observer = int(np.argmax(tip_heights))  # argmax takes the lowest id on ties
    final_chain = _chain_of(parent, tips[observer])
    total = parent.shape[0] - 1
    fork_count = int(total - (len(final_chain) - 1))

    retained = len(final_chain) - discard_tail
    agree = True
    if retained > 0:
        prefix = final_chain[:retained]
        for m in range(len(tips)):
            chain_m = _chain_of(parent, tips[m])
            if len(chain_m) < retained or not np.array_equal(chain_m[:retained], prefix):
                agree = False
                break

    return SimResult(
        per_miner_mined=per_miner_mined,
        final_chain=final_chain,
        block_miner=miner,
        block_mined_at=mined_at,
        fork_count=fork_count,
        wall_events=wall_events,
        observer=observer,
        tip_heights=tip_heights,
        protocol_errors=protocol_errors,
        replica_tips=tips,
        block_parent=parent,
        replicas_agree=agree,
    )


def validate_inputs(config: SimConfig, topology: Topology, latency: LatencyMatrix) -> None:
    if topology.n != config.n:
        raise ConfigError("topology size does not match config.n")
    if latency.n != config.n:
        raise ConfigError("latency matrix size does not match config.n")
    if config.n > 1 and not topology.is_connected():
        comp = topology.components()[1]
        raise ConfigError(f"topology is disconnected; isolated component: {comp[:8]}")


def run_simulation(
    config: SimConfig,
    topology: Topology,
    latency: LatencyMatrix,
    backend: str = "kernel",
    run_index: int = 0,
    miner_seeds: np.ndarray | None = None,
) -> SimResult:
    """Run one simulation.

    Timer streams derive from (config.seed, run_index); passing the same
    arguments twice gives bit-identical results.  miner_seeds overrides the
    derived per-miner stream states (used by symmetry tests).
    """
    validate_inputs(config, topology, latency)
    if backend == "kernel":
        from . import kernel
        return kernel.run(config, topology, latency, run_index, miner_seeds)
    if backend == "reference":
        from . import reference
        return reference.run(config, topology, latency, run_index, miner_seeds)
    raise ConfigError(f"unknown engine backend {backend!r}")
