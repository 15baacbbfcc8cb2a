"""Array-state engine.

Same protocol and event discipline as engine.reference, expressed over flat
numpy arrays so the whole run executes inside one jitted loop.  Under
POWSIM_BACKEND=python the identical function runs uninterpreted.

Capacity limits (block table, orphan tables, event heap) are handled by
returning a status code; the wrapper doubles the limit and reruns, which is
cheap and keeps results independent of the initial guesses.
"""

from __future__ import annotations

import numpy as np

from .. import rngs
from .._accel import maybe_njit
from ..netmodel import LatencyMatrix, Topology
from . import SimConfig, SimResult, finalize_result

# Event kinds
_TIMER, _BLOCK, _REQUIRE, _RESPONSE = 0, 1, 2, 3

# Run status
OK, BLOCK_OVERFLOW, ORPHAN_OVERFLOW, HEAP_OVERFLOW = 0, 1, 2, 3


@maybe_njit(inline="always")
def _heap_push(h_time, h_seq, h_kind, h_a, h_b, h_c, count, time, seq, kind, a, b, c):
    i = count
    h_time[i] = time
    h_seq[i] = seq
    h_kind[i] = kind
    h_a[i] = a
    h_b[i] = b
    h_c[i] = c
    while i > 0:
        p = (i - 1) >> 1
        if h_time[p] > h_time[i] or (h_time[p] == h_time[i] and h_seq[p] > h_seq[i]):
            h_time[p], h_time[i] = h_time[i], h_time[p]
            h_seq[p], h_seq[i] = h_seq[i], h_seq[p]
            h_kind[p], h_kind[i] = h_kind[i], h_kind[p]
            h_a[p], h_a[i] = h_a[i], h_a[p]
            h_b[p], h_b[i] = h_b[i], h_b[p]
            h_c[p], h_c[i] = h_c[i], h_c[p]
            i = p
        else:
            break
    return count + 1


@maybe_njit(inline="always")
def _heap_pop(h_time, h_seq, h_kind, h_a, h_b, h_c, count):
    last = count - 1
    if last > 0:
        h_time[0], h_time[last] = h_time[last], h_time[0]
        h_seq[0], h_seq[last] = h_seq[last], h_seq[0]
        h_kind[0], h_kind[last] = h_kind[last], h_kind[0]
        h_a[0], h_a[last] = h_a[last], h_a[0]
        h_b[0], h_b[last] = h_b[last], h_b[0]
        h_c[0], h_c[last] = h_c[last], h_c[0]
        i = 0
        while True:
            l = 2 * i + 1
            best = i
            if l < last and (
                h_time[l] < h_time[best]
                or (h_time[l] == h_time[best] and h_seq[l] < h_seq[best])
            ):
                best = l
            r = l + 1
            if r < last and (
                h_time[r] < h_time[best]
                or (h_time[r] == h_time[best] and h_seq[r] < h_seq[best])
            ):
                best = r
            if best == i:
                break
            h_time[best], h_time[i] = h_time[i], h_time[best]
            h_seq[best], h_seq[i] = h_seq[i], h_seq[best]
            h_kind[best], h_kind[i] = h_kind[i], h_kind[best]
            h_a[best], h_a[i] = h_a[i], h_a[best]
            h_b[best], h_b[i] = h_b[i], h_b[best]
            h_c[best], h_c[i] = h_c[i], h_c[best]
            i = best
    return last


@maybe_njit
def _link_latency(nbr_ptr, nbr_idx, nbr_lat, m, peer):
    for k in range(nbr_ptr[m], nbr_ptr[m + 1]):
        if nbr_idx[k] == peer:
            return nbr_lat[k]
    return -1.0


@maybe_njit
def _run_kernel(  # noqa: C901 - one hot loop on purpose
    n,
    nbr_ptr, nbr_idx, nbr_lat,
    means, validation, target,
    seeds,
    cap, orph_cap, hcap,
    h_time, h_seq, h_kind, h_a, h_b, h_c,
    blk_parent, blk_miner, blk_mined, blk_height,
    child_head, child_tail, child_next,
    state,
    tip, tip_h, tip_arr, tip_ord,
    orph_id, orph_arr, orph_ord, orph_cnt,
    per_miner_mined,
    promo,
    out_stats,
):
    hcount = 0
    seq = 0
    gen = np.ones(n, dtype=np.int64)
    ord_ctr = np.ones(n, dtype=np.int64)

    max_lat = 0.0
    for k in range(nbr_lat.shape[0]):
        if nbr_lat[k] > max_lat:
            max_lat = nbr_lat[k]
    drain_window = max_lat + validation

    next_block = 1
    wall_events = 0
    protocol_errors = 0
    draining = False
    drain_deadline = np.inf
    status = OK
    max_degree = 0
    for m in range(n):
        d = nbr_ptr[m + 1] - nbr_ptr[m]
        if d > max_degree:
            max_degree = d

    for m in range(n):
        gen[m] += 1
        dt = rngs.exponential_draw(seeds[m : m + 1], means[m])
        hcount = _heap_push(
            h_time, h_seq, h_kind, h_a, h_b, h_c, hcount,
            dt, seq, _TIMER, m, -1, gen[m],
        )
        seq += 1

    while hcount > 0:
        t = h_time[0]
        if draining and t > drain_deadline:
            break
        if hcount + max_degree + 2 > hcap:
            status = HEAP_OVERFLOW
            break
        kind = h_kind[0]
        a = h_a[0]
        b = h_b[0]
        c = h_c[0]
        hcount = _heap_pop(h_time, h_seq, h_kind, h_a, h_b, h_c, hcount)
        wall_events += 1

        if kind == _TIMER:
            if draining or c != gen[a]:
                continue
            if next_block >= cap:
                status = BLOCK_OVERFLOW
                break
            nb = next_block
            next_block += 1
            parent = tip[a]
            blk_parent[nb] = parent
            blk_miner[nb] = a
            blk_mined[nb] = t
            blk_height[nb] = blk_height[parent] + 1
            if child_head[parent] == -1:
                child_head[parent] = nb
            else:
                child_next[child_tail[parent]] = nb
            child_tail[parent] = nb
            per_miner_mined[a] += 1
            state[a, nb] = 1
            tip[a] = nb
            tip_h[a] = blk_height[nb]
            tip_arr[a] = t
            tip_ord[a] = ord_ctr[a]
            ord_ctr[a] += 1
            for k in range(nbr_ptr[a], nbr_ptr[a + 1]):
                hcount = _heap_push(
                    h_time, h_seq, h_kind, h_a, h_b, h_c, hcount,
                    t + nbr_lat[k], seq, _BLOCK, nbr_idx[k], a, nb,
                )
                seq += 1
            gen[a] += 1
            dt = rngs.exponential_draw(seeds[a : a + 1], means[a])
            hcount = _heap_push(
                h_time, h_seq, h_kind, h_a, h_b, h_c, hcount,
                t + dt, seq, _TIMER, a, -1, gen[a],
            )
            seq += 1

        elif kind == _REQUIRE:
            if state[a, c] == 0:
                protocol_errors += 1
            else:
                lat = _link_latency(nbr_ptr, nbr_idx, nbr_lat, a, b)
                hcount = _heap_push(
                    h_time, h_seq, h_kind, h_a, h_b, h_c, hcount,
                    t + validation + lat, seq, _RESPONSE, b, a, c,
                )
                seq += 1

        else:  # _BLOCK or _RESPONSE: block c arrives at a from neighbor b
            tp = t + validation
            if state[a, c] != 0:
                pass  # duplicate
            elif state[a, blk_parent[c]] != 1:
                if orph_cnt[a] >= orph_cap:
                    status = ORPHAN_OVERFLOW
                    break
                slot = orph_cnt[a]
                orph_id[a, slot] = c
                orph_arr[a, slot] = tp
                orph_ord[a, slot] = ord_ctr[a]
                ord_ctr[a] += 1
                orph_cnt[a] += 1
                state[a, c] = 2
                missing = blk_parent[c]
                while state[a, missing] == 2:
                    missing = blk_parent[missing]
                lat = _link_latency(nbr_ptr, nbr_idx, nbr_lat, a, b)
                hcount = _heap_push(
                    h_time, h_seq, h_kind, h_a, h_b, h_c, hcount,
                    tp + lat, seq, _REQUIRE, b, a, missing,
                )
                seq += 1
            else:
                old_tip = tip[a]
                state[a, c] = 1
                h = blk_height[c]
                o = ord_ctr[a]
                ord_ctr[a] += 1
                extended = False
                if h > tip_h[a]:
                    tip[a] = c
                    tip_h[a] = h
                    tip_arr[a] = tp
                    tip_ord[a] = o
                    extended = True
                # Promote parked descendants, oldest ids first per parent.
                qh = 0
                qt = 0
                promo[qt] = c
                qt += 1
                while qh < qt:
                    pid = promo[qh]
                    qh += 1
                    ch = child_head[pid]
                    while ch != -1:
                        if state[a, ch] == 2:
                            idx = -1
                            for s in range(orph_cnt[a]):
                                if orph_id[a, s] == ch:
                                    idx = s
                                    break
                            arr = orph_arr[a, idx]
                            o2 = orph_ord[a, idx]
                            last = orph_cnt[a] - 1
                            orph_id[a, idx] = orph_id[a, last]
                            orph_arr[a, idx] = orph_arr[a, last]
                            orph_ord[a, idx] = orph_ord[a, last]
                            orph_cnt[a] = last
                            state[a, ch] = 1
                            h2 = blk_height[ch]
                            if h2 > tip_h[a] or (
                                h2 == tip_h[a]
                                and (
                                    arr < tip_arr[a]
                                    or (arr == tip_arr[a] and o2 < tip_ord[a])
                                )
                            ):
                                tip[a] = ch
                                tip_h[a] = h2
                                tip_arr[a] = arr
                                tip_ord[a] = o2
                            promo[qt] = ch
                            qt += 1
                        ch = child_next[ch]

                if extended:
                    for k in range(nbr_ptr[a], nbr_ptr[a + 1]):
                        peer = nbr_idx[k]
                        if peer == b:
                            continue
                        hcount = _heap_push(
                            h_time, h_seq, h_kind, h_a, h_b, h_c, hcount,
                            tp + nbr_lat[k], seq, _BLOCK, peer, a, c,
                        )
                        seq += 1
                if tip[a] != old_tip:
                    gen[a] += 1
                    dt = rngs.exponential_draw(seeds[a : a + 1], means[a])
                    hcount = _heap_push(
                        h_time, h_seq, h_kind, h_a, h_b, h_c, hcount,
                        tp + dt, seq, _TIMER, a, -1, gen[a],
                    )
                    seq += 1

        if not draining and tip_h[a] >= target:
            draining = True
            drain_deadline = t + drain_window

    out_stats[0] = next_block
    out_stats[1] = wall_events
    out_stats[2] = protocol_errors
    out_stats[3] = status


def _csr(topology: Topology, latency: LatencyMatrix):
    nbrs = topology.neighbor_lists()
    ptr = np.zeros(topology.n + 1, dtype=np.int64)
    for m, lst in enumerate(nbrs):
        ptr[m + 1] = ptr[m] + len(lst)
    idx = np.empty(int(ptr[-1]), dtype=np.int64)
    lat = np.empty(int(ptr[-1]), dtype=np.float64)
    k = 0
    for m, lst in enumerate(nbrs):
        for v in lst:
            idx[k] = v
            lat[k] = latency[m, v]
            k += 1
    return ptr, idx, lat


def run(
    config: SimConfig,
    topology: Topology,
    latency: LatencyMatrix,
    run_index: int = 0,
    miner_seeds: np.ndarray | None = None,
) -> SimResult:
    n = config.n
    ptr, idx, lat = _csr(topology, latency)
    means = config.miner_means()
    if miner_seeds is None:
        miner_seeds = rngs.miner_stream_seeds(config.seed, run_index, n)

    cap = 4 * config.target_chain_length + 4096
    orph_cap = 256
    hcap = max(1 << 17, 16 * idx.shape[0] + 8 * n)
    while True:
        seeds = np.array(miner_seeds, dtype=np.uint64)  # advanced in place
        h_time = np.empty(hcap, dtype=np.float64)
        h_seq = np.empty(hcap, dtype=np.int64)
        h_kind = np.empty(hcap, dtype=np.int64)
        h_a = np.empty(hcap, dtype=np.int64)
        h_b = np.empty(hcap, dtype=np.int64)
        h_c = np.empty(hcap, dtype=np.int64)
        blk_parent = np.full(cap, -1, dtype=np.int64)
        blk_miner = np.full(cap, -1, dtype=np.int64)
        blk_mined = np.zeros(cap, dtype=np.float64)
        blk_height = np.zeros(cap, dtype=np.int64)
        child_head = np.full(cap, -1, dtype=np.int64)
        child_tail = np.full(cap, -1, dtype=np.int64)
        child_next = np.full(cap, -1, dtype=np.int64)
        state = np.zeros((n, cap), dtype=np.uint8)
        state[:, 0] = 1
        tip = np.zeros(n, dtype=np.int64)
        tip_h = np.zeros(n, dtype=np.int64)
        tip_arr = np.zeros(n, dtype=np.float64)
        tip_ord = np.zeros(n, dtype=np.int64)
        orph_id = np.full((n, orph_cap), -1, dtype=np.int64)
        orph_arr = np.zeros((n, orph_cap), dtype=np.float64)
        orph_ord = np.zeros((n, orph_cap), dtype=np.int64)
        orph_cnt = np.zeros(n, dtype=np.int64)
        per_miner_mined = np.zeros(n, dtype=np.int64)
        promo = np.empty(orph_cap + 2, dtype=np.int64)
        out_stats = np.zeros(4, dtype=np.int64)

        _run_kernel(
            n, ptr, idx, lat,
            means, float(config.validation_delay), config.target_chain_length,
            seeds, cap, orph_cap, hcap,
            h_time, h_seq, h_kind, h_a, h_b, h_c,
            blk_parent, blk_miner, blk_mined, blk_height,
            child_head, child_tail, child_next,
            state,
            tip, tip_h, tip_arr, tip_ord,
            orph_id, orph_arr, orph_ord, orph_cnt,
            per_miner_mined, promo, out_stats,
        )
        status = int(out_stats[3])
        if status == BLOCK_OVERFLOW:
            cap *= 2
            continue
        if status == ORPHAN_OVERFLOW:
            orph_cap *= 2
            continue
        if status == HEAP_OVERFLOW:
            hcap *= 2
            continue
        break

    nblocks = int(out_stats[0])
    return finalize_result(
        blk_parent[:nblocks],
        blk_miner[:nblocks],
        blk_mined[:nblocks],
        tip,
        blk_height[:nblocks],
        per_miner_mined,
        int(out_stats[1]),
        int(out_stats[2]),
        config.discard_tail,
    )
