import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from powsim.chain import (
    GENESIS_ID,
    Block,
    BlockTree,
    MalformedBlockError,
    Outcome,
)


def replay_oracle(blocks_with_arrivals):
    """Independent reconstruction: repeatedly connect whatever has a parent.

    Returns (heights, tip) computed without BlockTree, using max height with
    earliest-arrival (then earliest-position) tie-break.
    """
    heights = {GENESIS_ID: 0}
    arrivals = {GENESIS_ID: (0.0, -1)}
    pending = list(enumerate(blocks_with_arrivals))
    progress = True
    while pending and progress:
        progress = False
        rest = []
        for pos, (blk, arr) in pending:
            if blk.parent_id in heights:
                heights[blk.id] = heights[blk.parent_id] + 1
                arrivals[blk.id] = (arr, pos)
                progress = True
            else:
                rest.append((pos, (blk, arr)))
        pending = rest
    tip = min(heights, key=lambda b: (-heights[b], arrivals[b][0], arrivals[b][1]))
    return heights, tip


def test_first_child_of_genesis_extends():
    tree = BlockTree()
    res = tree.insert_block(Block(1, GENESIS_ID, 0, 1.0), arrival_time=5.0)
    assert res.outcome is Outcome.EXTENDED_TIP
    assert tree.tip == 1
    assert tree.tip_height == 1


def test_equal_height_sibling_is_side_block():
    tree = BlockTree()
    tree.insert_block(Block(1, GENESIS_ID, 0, 1.0), arrival_time=5.0)
    res = tree.insert_block(Block(2, GENESIS_ID, 1, 2.0), arrival_time=7.0)
    assert res.outcome is Outcome.SIDE_BLOCK
    assert tree.tip == 1  # earliest received at the max height keeps the tip


def test_orphan_then_promotion():
    tree = BlockTree()
    res = tree.insert_block(Block(3, 99, 0, 4.0), arrival_time=6.0)
    assert res.outcome is Outcome.ORPHAN
    assert res.missing_parent_id == 99
    assert 3 in tree.orphans and 3 not in tree.entries

    res2 = tree.insert_block(Block(99, GENESIS_ID, 1, 1.0), arrival_time=8.0)
    assert res2.outcome is Outcome.EXTENDED_TIP
    assert res2.tip_changed
    assert tree.tip == 3
    assert tree.entries[3].height == 2
    assert tree.entries[3].arrival_time == 6.0  # original arrival preserved
    assert not tree.orphans


def test_orphan_chain_reports_deepest_missing_ancestor():
    tree = BlockTree()
    tree.insert_block(Block(5, 4, 0, 5.0), arrival_time=5.0)
    res = tree.insert_block(Block(6, 5, 0, 6.0), arrival_time=6.0)
    assert res.outcome is Outcome.ORPHAN
    assert res.missing_parent_id == 4  # parent 5 is parked, 4 is the true gap


def test_duplicate_absorbed_and_conflict_rejected():
    tree = BlockTree()
    blk = Block(1, GENESIS_ID, 0, 1.0)
    tree.insert_block(blk, arrival_time=2.0)
    assert tree.insert_block(blk, arrival_time=3.0).outcome is Outcome.DUPLICATE
    with pytest.raises(MalformedBlockError):
        tree.insert_block(Block(1, GENESIS_ID, 7, 1.0), arrival_time=4.0)


def test_promoted_equal_height_earlier_arrival_takes_tip():
    # Orphan arrives first (t=6), competing branch completes later (t=11);
    # at equal height the earlier-received block must hold the tip.
    tree = BlockTree()
    tree.insert_block(Block(10, 99, 0, 4.0), arrival_time=6.0)   # orphan, height-2-to-be
    tree.insert_block(Block(20, GENESIS_ID, 1, 1.0), arrival_time=9.0)
    tree.insert_block(Block(21, 20, 1, 2.0), arrival_time=11.0)  # tip at height 2
    assert tree.tip == 21
    tree.insert_block(Block(99, GENESIS_ID, 2, 0.5), arrival_time=12.0)
    assert tree.tip == 10  # promoted with arrival 6.0 < 11.0 at equal height


def test_longest_chain_paths():
    tree = BlockTree()
    assert tree.longest_chain() == [GENESIS_ID]
    for i in range(1, 5):
        tree.insert_block(Block(i, i - 1, 0, float(i)), arrival_time=float(i))
    assert tree.longest_chain() == [0, 1, 2, 3, 4]


def test_longest_chain_takes_higher_fork():
    tree = BlockTree()
    # fork A: 1-2 (height 2), fork B: 3-4-5 (height 3)
    tree.insert_block(Block(1, GENESIS_ID, 0, 1.0), arrival_time=1.0)
    tree.insert_block(Block(2, 1, 0, 2.0), arrival_time=2.0)
    tree.insert_block(Block(3, GENESIS_ID, 1, 1.5), arrival_time=2.5)
    tree.insert_block(Block(4, 3, 1, 3.0), arrival_time=3.0)
    tree.insert_block(Block(5, 4, 1, 4.0), arrival_time=4.0)
    heights, tip = replay_oracle(
        [
            (Block(1, GENESIS_ID, 0, 1.0), 1.0),
            (Block(2, 1, 0, 2.0), 2.0),
            (Block(3, GENESIS_ID, 1, 1.5), 2.5),
            (Block(4, 3, 1, 3.0), 3.0),
            (Block(5, 4, 1, 4.0), 4.0),
        ]
    )
    assert tree.tip == tip == 5
    assert tree.longest_chain() == [0, 3, 4, 5]


def test_side_block_never_moves_tip_and_extension_adds_one():
    tree = BlockTree()
    prev_height = 0
    rng = np.random.default_rng(0)
    next_id = 1
    known = [GENESIS_ID]
    for step in range(200):
        parent = int(rng.choice(known))
        blk = Block(next_id, parent, 0, float(step))
        res = tree.insert_block(blk, arrival_time=float(step))
        if res.outcome is Outcome.EXTENDED_TIP:
            assert tree.tip_height == prev_height + 1
        else:
            assert res.outcome is Outcome.SIDE_BLOCK
            assert tree.tip_height == prev_height
        prev_height = tree.tip_height
        known.append(next_id)
        next_id += 1


@st.composite
def block_forests(draw):
    """Random block sets with unique arrivals, parents among earlier blocks."""
    n = draw(st.integers(min_value=1, max_value=24))
    parents = [draw(st.integers(min_value=0, max_value=i)) for i in range(n)]
    # ids 1..n, parent of block i+1 drawn from {0..i}; arrivals increase with id
    blocks = [
        (Block(i + 1, parents[i], miner_id=0, mined_at=float(i)), 10.0 + i)
        for i in range(n)
    ]
    return blocks


@given(block_forests(), st.randoms())
@settings(max_examples=120, deadline=None)
def test_insertion_order_insensitive(blocks, rnd):
    """Any insertion order with fixed arrival stamps gives one final state."""
    tree_inorder = BlockTree()
    for blk, arr in blocks:
        tree_inorder.insert_block(blk, arrival_time=arr)

    shuffled = list(blocks)
    rnd.shuffle(shuffled)
    tree_shuffled = BlockTree()
    for blk, arr in shuffled:
        tree_shuffled.insert_block(blk, arrival_time=arr)

    assert not tree_inorder.orphans and not tree_shuffled.orphans
    assert tree_inorder.tip == tree_shuffled.tip
    assert {b: e.height for b, e in tree_inorder.entries.items()} == {
        b: e.height for b, e in tree_shuffled.entries.items()
    }

    heights, tip = replay_oracle(blocks)
    assert tree_inorder.tip == tip
    assert {b: e.height for b, e in tree_inorder.entries.items()} == heights


@given(block_forests())
@settings(max_examples=60, deadline=None)
def test_tip_is_max_height_with_earliest_arrival(blocks):
    tree = BlockTree()
    for blk, arr in blocks:
        tree.insert_block(blk, arrival_time=arr)
    max_h = max(e.height for e in tree.entries.values())
    assert tree.entries[tree.tip].height == max_h
    at_max = [e for e in tree.entries.values() if e.height == max_h]
    assert tree.entries[tree.tip].arrival_time == min(e.arrival_time for e in at_max)
