"""Object-based engine: one Miner per node, explicit message handlers.

This is the readable statement of the protocol.  The array kernel follows
the exact same event discipline; an equivalence test keeps them in lock step.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .. import rngs
from ..chain import GENESIS, Block, BlockTree, Outcome
from ..netmodel import LatencyMatrix, Topology
from . import SimConfig, SimResult, finalize_result

TIMER, BLOCK, REQUIRE, RESPONSE = 0, 1, 2, 3


@dataclass(frozen=True)
class Event:
    time: float
    seq: int
    kind: int
    miner: int            # receiver (or the owner, for timers)
    sender: int = -1
    block: Block | None = None
    block_id: int = -1    # requested id for REQUIRE
    generation: int = 0   # timer validity token

    def sort_key(self):
        return (self.time, self.seq)


class Scheduler:
    def __init__(self):
        self._heap: list[tuple[float, int, Event]] = []
        self._seq = 0
        self.pushed = 0

    def push(self, time: float, **kw) -> Event:
        ev = Event(time=time, seq=self._seq, **kw)
        heapq.heappush(self._heap, (ev.time, ev.seq, ev))
        self._seq += 1
        self.pushed += 1
        return ev

    def pop(self) -> Event | None:
        if not self._heap:
            return None
        return heapq.heappop(self._heap)[2]

    def peek_time(self) -> float | None:
        return self._heap[0][0] if self._heap else None


@dataclass
class MinerState:
    id: int
    tree: BlockTree
    neighbors: list[int]
    mean: float
    rng_stream: np.ndarray          # length-1 uint64 splitmix state
    timer_generation: int = 1
    timer_deadline: float | None = None


class Simulation:
    def __init__(
        self,
        config: SimConfig,
        topology: Topology,
        latency: LatencyMatrix,
        run_index: int = 0,
        miner_seeds: np.ndarray | None = None,
    ):
        self.config = config
        self.latency = latency
        self.sched = Scheduler()
        means = config.miner_means()
        if miner_seeds is None:
            miner_seeds = rngs.miner_stream_seeds(config.seed, run_index, config.n)
        nbrs = topology.neighbor_lists()
        self.miners = [
            MinerState(
                id=m,
                tree=BlockTree(),
                neighbors=nbrs[m],
                mean=float(means[m]),
                rng_stream=np.array([miner_seeds[m]], dtype=np.uint64),
            )
            for m in range(config.n)
        ]
        self.blocks: list[Block] = [GENESIS]
        self.per_miner_mined = np.zeros(config.n, dtype=np.int64)
        self.protocol_errors = 0
        self.wall_events = 0
        self.draining = False
        self.drain_deadline = np.inf
        lat_max = max(
            (latency[u, v] for u, v in topology.edges), default=0.0
        )
        self.drain_window = lat_max + config.validation_delay

    # -- handlers ----------------------------------------------------------

    def _arm_timer(self, miner: MinerState, now: float) -> None:
        miner.timer_generation += 1
        dt = rngs.exponential_draw(miner.rng_stream, miner.mean)
        miner.timer_deadline = now + dt
        self.sched.push(
            now + dt, kind=TIMER, miner=miner.id, generation=miner.timer_generation
        )

    def on_timer_expiry(self, miner: MinerState, now: float) -> None:
        """Mine on the current tip, flood the block, restart the timer."""
        block = Block(
            id=len(self.blocks),
            parent_id=miner.tree.tip,
            miner_id=miner.id,
            mined_at=now,
        )
        self.blocks.append(block)
        self.per_miner_mined[miner.id] += 1
        miner.tree.insert_block(block, arrival_time=now)
        for nb in miner.neighbors:
            self.sched.push(
                now + self.latency[miner.id, nb],
                kind=BLOCK, miner=nb, sender=miner.id, block=block,
            )
        self._arm_timer(miner, now)

    def on_block_message(self, miner: MinerState, block: Block, sender: int, now: float) -> None:
        """Validate, store, relay if it extended the tip, or request the gap."""
        tp = now + self.config.validation_delay
        result = miner.tree.insert_block(block, arrival_time=tp)
        if result.outcome is Outcome.EXTENDED_TIP:
            for nb in miner.neighbors:
                if nb != sender:
                    self.sched.push(
                        tp + self.latency[miner.id, nb],
                        kind=BLOCK, miner=nb, sender=miner.id, block=block,
                    )
        elif result.outcome is Outcome.ORPHAN:
            self.sched.push(
                tp + self.latency[miner.id, sender],
                kind=REQUIRE, miner=sender, sender=miner.id,
                block_id=result.missing_parent_id,
            )
        if result.tip_changed:
            self._arm_timer(miner, tp)

    def on_require(self, miner: MinerState, block_id: int, sender: int, now: float) -> None:
        if not miner.tree.knows(block_id):
            # Unreachable under FIFO links; counted rather than fatal.
            self.protocol_errors += 1
            return
        block = miner.tree.get_block(block_id)
        self.sched.push(
            now + self.config.validation_delay + self.latency[miner.id, sender],
            kind=RESPONSE, miner=sender, sender=miner.id, block=block,
        )

    def on_response(self, miner: MinerState, block: Block, sender: int, now: float) -> None:
        self.on_block_message(miner, block, sender, now)

    # -- main loop ----------------------------------------------------------

    def dispatch(self, ev: Event) -> None:
        """Handle one event; updates drain state afterwards."""
        miner = self.miners[ev.miner]
        if ev.kind == TIMER:
            if self.draining or ev.generation != miner.timer_generation:
                return
            self.on_timer_expiry(miner, ev.time)
        elif ev.kind == BLOCK:
            self.on_block_message(miner, ev.block, ev.sender, ev.time)
        elif ev.kind == REQUIRE:
            self.on_require(miner, ev.block_id, ev.sender, ev.time)
        else:
            self.on_response(miner, ev.block, ev.sender, ev.time)

        if not self.draining and miner.tree.tip_height >= self.config.target_chain_length:
            self.draining = True
            self.drain_deadline = ev.time + self.drain_window

    def run(self) -> SimResult:
        for miner in self.miners:
            self._arm_timer(miner, 0.0)

        while True:
            nxt = self.sched.peek_time()
            if nxt is None or (self.draining and nxt > self.drain_deadline):
                break
            ev = self.sched.pop()
            self.wall_events += 1
            self.dispatch(ev)

        return self._result()

    def _result(self) -> SimResult:
        nb = len(self.blocks)
        parent = np.array([b.parent_id for b in self.blocks], dtype=np.int64)
        miner = np.array([b.miner_id for b in self.blocks], dtype=np.int64)
        mined = np.array([b.mined_at for b in self.blocks], dtype=np.float64)
        tips = np.array([m.tree.tip for m in self.miners], dtype=np.int64)
        heights = np.zeros(nb, dtype=np.int64)
        for m in self.miners:
            for bid, entry in m.tree.entries.items():
                heights[bid] = entry.height
        return finalize_result(
            parent, miner, mined, tips, heights,
            self.per_miner_mined, self.wall_events, self.protocol_errors,
            self.config.discard_tail,
        )


def run(
    config: SimConfig,
    topology: Topology,
    latency: LatencyMatrix,
    run_index: int = 0,
    miner_seeds: np.ndarray | None = None,
) -> SimResult:
    return Simulation(config, topology, latency, run_index, miner_seeds).run()
