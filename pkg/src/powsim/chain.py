"""Block data structures and longest-chain state for one miner's replica."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

GENESIS_ID = 0
NO_MINER = -1


@dataclass(frozen=True)
class Block:
    id: int
    parent_id: int
    miner_id: int
    mined_at: float


GENESIS = Block(id=GENESIS_ID, parent_id=-1, miner_id=NO_MINER, mined_at=0.0)


@dataclass
class BlockEntry:
    block: Block
    height: int
    arrival_time: float
    # Breaks exact arrival-time ties deterministically: the order in which
    # this replica inserted entries (orphans keep the index from when they
    # first arrived, not from promotion).
    order: int


class Outcome(Enum):
    EXTENDED_TIP = "extended_tip"
    SIDE_BLOCK = "side_block"
    ORPHAN = "orphan"
    DUPLICATE = "duplicate"


@dataclass
class InsertResult:
    outcome: Outcome
    # First ancestor id this replica has never seen; set only for ORPHAN.
    missing_parent_id: int | None = None
    # Whether the tip moved, including moves caused by orphan promotion.
    tip_changed: bool = False


class MalformedBlockError(ValueError):
    """Same id presented twice with different content."""


class ChainError(RuntimeError):
    pass


@dataclass
class _Orphan:
    block: Block
    arrival_time: float
    order: int


@dataclass
class BlockTree:
    """One replica: connected entries, current tip, and parked orphans.

    All mutation goes through insert_block.  Arrival stamps carry the time a
    block finished validating; the event kernel may insert a self-mined block
    with a stamp slightly before the previous message's stamp, which is fine
    because the tip rule only ever compares stamps at equal heights.
    """

    entries: dict[int, BlockEntry] = field(default_factory=dict)
    tip: int = GENESIS_ID
    orphans: dict[int, _Orphan] = field(default_factory=dict)
    _order_counter: int = 0

    def __post_init__(self):
        if GENESIS_ID not in self.entries:
            self.entries[GENESIS_ID] = BlockEntry(GENESIS, height=0, arrival_time=0.0, order=0)
            self._order_counter = 1

    @property
    def tip_height(self) -> int:
        return self.entries[self.tip].height

    def knows(self, block_id: int) -> bool:
        """True if the block is held as an entry or an orphan."""
        return block_id in self.entries or block_id in self.orphans

    def get_block(self, block_id: int) -> Block:
        if block_id in self.entries:
            return self.entries[block_id].block
        if block_id in self.orphans:
            return self.orphans[block_id].block
        raise KeyError(block_id)

    def insert_block(self, block: Block, arrival_time: float) -> InsertResult:
        if arrival_time < block.mined_at:
            raise ChainError(f"block {block.id} arrived before it was mined")

        existing = None
        if block.id in self.entries:
            existing = self.entries[block.id].block
        elif block.id in self.orphans:
            existing = self.orphans[block.id].block
        if existing is not None:
            if existing != block:
                raise MalformedBlockError(f"conflicting content for block id {block.id}")
            return InsertResult(Outcome.DUPLICATE)

        order = self._order_counter
        self._order_counter += 1

        if block.parent_id not in self.entries:
            self.orphans[block.id] = _Orphan(block, arrival_time, order)
            return InsertResult(Outcome.ORPHAN, missing_parent_id=self._first_unknown_ancestor(block))

        old_tip = self.tip
        became_tip = self._connect(block, arrival_time, order)
        self._promote_orphans(block.id)
        return InsertResult(
            Outcome.EXTENDED_TIP if became_tip else Outcome.SIDE_BLOCK,
            tip_changed=self.tip != old_tip,
        )

    def _first_unknown_ancestor(self, block: Block) -> int:
        """Walk parked orphans toward the root of the missing segment."""
        pid = block.parent_id
        while pid in self.orphans:
            pid = self.orphans[pid].block.parent_id
        return pid

    def _connect(self, block: Block, arrival_time: float, order: int) -> bool:
        height = self.entries[block.parent_id].height + 1
        self.entries[block.id] = BlockEntry(block, height, arrival_time, order)
        return self._maybe_take_tip(block.id, height, arrival_time, order)

    def _maybe_take_tip(self, block_id: int, height: int, arrival_time: float, order: int) -> bool:
        cur = self.entries[self.tip]
        if height > cur.height or (
            height == cur.height and (arrival_time, order) < (cur.arrival_time, cur.order)
        ):
            self.tip = block_id
            return True
        return False

    def _promote_orphans(self, parent_id: int) -> None:
        # Children arrive in mined (id) order so promotion order is stable.
        pending = [parent_id]
        while pending:
            pid = pending.pop(0)
            ready = sorted(
                bid for bid, orph in self.orphans.items() if orph.block.parent_id == pid
            )
            for bid in ready:
                orph = self.orphans.pop(bid)
                self._connect(orph.block, orph.arrival_time, orph.order)
                pending.append(bid)

    def longest_chain(self) -> list[int]:
        """Block ids from genesis to the current tip."""
        out = []
        bid = self.tip
        while bid != -1:
            out.append(bid)
            bid = self.entries[bid].block.parent_id
        out.reverse()
        return out
