"""Deterministic random streams.

Seed derivation scheme (fixed, versioned with the package):

* run seed for run index k     = SeedSequence(root_seed, spawn_key=(k,))
* topology generator stream    = spawn_key=(k, 0, <substream>)
* miner timer stream seeds     = SeedSequence(root_seed, spawn_key=(k, 1)).generate_state(n)

Miner timers use a splitmix64 counter generator advanced inside the
simulation kernels; the same code runs under both numba and plain Python, so
draw sequences do not depend on the active backend.
"""

import numpy as np

from ._accel import maybe_njit

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
# 2**-53, maps the top 53 bits of a draw into (0, 1]
_INV53 = 1.0 / 9007199254740992.0


@maybe_njit
def splitmix64_next(state):
    """Advance one splitmix64 state (uint64 array of length >= 1) in place."""
    s = (state[0] + _GAMMA) & _MASK
    state[0] = s
    z = s
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return (z ^ (z >> 31)) & _MASK


@maybe_njit
def exponential_draw(state, mean):
    """One exponential variate with the given mean from a splitmix64 stream."""
    z = splitmix64_next(state)
    u = ((z >> 11) + 1) * _INV53
    return -mean * np.log(u)


def run_seed_sequence(root_seed: int, run_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(root_seed, spawn_key=(run_index,))


def miner_stream_seeds(root_seed: int, run_index: int, n: int) -> np.ndarray:
    """Per-miner splitmix64 initial states, disjoint across miners and runs."""
    ss = np.random.SeedSequence(root_seed, spawn_key=(run_index, 1))
    return ss.generate_state(n, dtype=np.uint64)


def topology_rng(root_seed: int, run_index: int, substream: int) -> np.random.Generator:
    """Generator for one topology substream.

    Substream indices: miner i's neighbor draws use substream i; group
    assignment, bridge picks and similar whole-policy draws use indices from
    1_000_000 up.  Keeping each miner on its own substream means a degree
    override for one group leaves every other miner's picks untouched.
    """
    ss = np.random.SeedSequence(root_seed, spawn_key=(run_index, 0, substream))
    return np.random.Generator(np.random.PCG64(ss))


ASSIGN_SUBSTREAM = 1_000_000
BRIDGE_SUBSTREAM = 1_000_001


def derive_run_seeds(root_seed: int, runs: int) -> list[int]:
    """Integer per-run seeds recorded in run manifests."""
    return [
        int(run_seed_sequence(root_seed, k).generate_state(1, dtype=np.uint64)[0])
        for k in range(runs)
    ]
