"""Round-based Monte Carlo of the analytical model.

One block per unit-time round; the miner is drawn by hash power.  A block
mined at round r by u becomes visible to m from the first round at or after
r + delta[u, m].  The miner extends the greatest visible height, breaking
ties by earliest arrival, then by earliest round.

Delay matrices built by the cluster helpers apply the intra-cluster delay on
the diagonal as well: a miner re-reads its own blocks with the same lag as
its cluster mates.  That is the reading under which the closed forms hold at
finite n (with a zero diagonal, a miner that mines twice in a row chains its
own blocks and the measured wastage lands visibly below the predicted value).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import maybe_njit


class OracleError(ValueError):
    pass


def single_cluster_delta(n: int, eps: float) -> np.ndarray:
    if eps <= 0:
        raise OracleError("eps must be > 0")
    return np.full((n, n), float(eps))


def two_cluster_delta(n_dominant: int, n_other: int, eps: float, delta: float) -> np.ndarray:
    n = n_dominant + n_other
    cluster = np.array([0] * n_dominant + [1] * n_other)
    return np.where(cluster[:, None] == cluster[None, :], float(eps), float(delta))


def cluster_delta(sizes: list[int], eps: float, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """(delay matrix, per-miner cluster labels) for any cluster sizes."""
    labels = np.concatenate([np.full(s, k, dtype=np.int64) for k, s in enumerate(sizes)])
    mat = np.where(labels[:, None] == labels[None, :], float(eps), float(delta))
    return mat, labels


@maybe_njit
def _run_rounds(miners, delta, parent, height, window):
    """Sequential chain growth; fills parent/height for rounds 1..R."""
    R = miners.shape[0] - 1
    n = delta.shape[0]
    # Per-miner running best visible block under (height, arrival, round).
    best = np.zeros(n, dtype=np.int64)
    best_h = np.zeros(n, dtype=np.int64)
    best_arr = np.zeros(n, dtype=np.float64)
    # Ring of "becomes visible at round v" buckets, each holding (miner, block).
    cap = 2 * n + 2
    ring_m = np.empty((window, cap), dtype=np.int64)
    ring_b = np.empty((window, cap), dtype=np.int64)
    ring_cnt = np.zeros(window, dtype=np.int64)

    for r in range(1, R + 1):
        slot = r % window
        for k in range(ring_cnt[slot]):
            m = ring_m[slot, k]
            b = ring_b[slot, k]
            h = height[b]
            arr = b + delta[miners[b], m]
            if h > best_h[m] or (
                h == best_h[m]
                and (arr < best_arr[m] or (arr == best_arr[m] and b < best[m]))
            ):
                best[m] = b
                best_h[m] = h
                best_arr[m] = arr
        ring_cnt[slot] = 0

        m = miners[r]
        parent[r] = best[m]
        height[r] = best_h[m] + 1

        for mm in range(n):
            d = delta[m, mm]
            v = int(np.ceil(r + d))
            if v <= r:
                v = r + 1
            if v <= R:
                s = v % window
                c = ring_cnt[s]
                ring_m[s, c] = mm
                ring_b[s, c] = r
                ring_cnt[s] = c + 1
    return 0


@dataclass
class RoundTrace:
    """One oracle run: block r is the block mined at round r (0 = genesis)."""

    miners: np.ndarray      # int64[R+1], miners[0] = -1
    parent: np.ndarray      # int64[R+1]
    height: np.ndarray      # int64[R+1]
    in_chain: np.ndarray    # bool[R+1]
    n: int

    @property
    def rounds(self) -> int:
        return self.miners.shape[0] - 1

    def final_chain(self) -> np.ndarray:
        """Chain rounds in height order, genesis excluded."""
        return np.flatnonzero(self.in_chain[1:]) + 1

    def retained_slice(self, discard_tail: int = 100) -> slice:
        last = self.rounds - discard_tail
        if last < 1:
            raise OracleError("trace shorter than the discard tail")
        return slice(1, last + 1)

    def f_hat(self, discard_tail: int = 100) -> np.ndarray:
        """Per-miner fraction of retained chain blocks."""
        keep = self.retained_slice(discard_tail)
        mk = self.miners[keep]
        ck = self.in_chain[keep]
        total = ck.sum()
        counts = np.bincount(mk[ck], minlength=self.n)
        return counts / total

    def w_hat(self, discard_tail: int = 100) -> np.ndarray:
        """Per-miner fraction of own blocks left out of the chain."""
        keep = self.retained_slice(discard_tail)
        mk = self.miners[keep]
        ck = self.in_chain[keep]
        mined = np.bincount(mk, minlength=self.n)
        wasted = np.bincount(mk[~ck], minlength=self.n)
        out = np.zeros(self.n)
        nz = mined > 0
        out[nz] = wasted[nz] / mined[nz]
        return out

    def retained_chain_length(self, discard_tail: int = 100) -> int:
        keep = self.retained_slice(discard_tail)
        return int(self.in_chain[keep].sum())

    def off_chain_count(self) -> int:
        return int(self.rounds - self.in_chain[1:].sum())

    def f_hat_stderr(self, discard_tail: int = 100) -> np.ndarray:
        """Binomial standard error of one miner's f_hat estimate."""
        f = self.f_hat(discard_tail)
        c = self.retained_chain_length(discard_tail)
        return np.sqrt(np.clip(f * (1.0 - f), 0.0, None) / c)


def round_oracle(
    delta: np.ndarray,
    rounds: int,
    seed: int,
    hash_rates: np.ndarray | None = None,
) -> RoundTrace:
    """Simulate the round model over an arbitrary delay matrix.

    The matrix diagonal governs when a miner sees its own past blocks; pass
    cluster matrices from the helpers above to reproduce the closed forms.
    """
    delta = np.ascontiguousarray(delta, dtype=np.float64)
    n = delta.shape[0]
    if delta.ndim != 2 or delta.shape[1] != n:
        raise OracleError("delta matrix must be square")
    if np.any(delta < 0) or not np.all(np.isfinite(delta)):
        raise OracleError("delays must be finite and nonnegative")
    if rounds < 1:
        raise OracleError("rounds must be >= 1")

    rng = np.random.default_rng(seed)
    if hash_rates is None:
        miners = rng.integers(0, n, size=rounds + 1).astype(np.int64)
    else:
        rates = np.asarray(hash_rates, dtype=np.float64)
        if rates.shape != (n,) or np.any(rates <= 0):
            raise OracleError("hash_rates must be positive and length n")
        miners = rng.choice(n, size=rounds + 1, p=rates / rates.sum()).astype(np.int64)
    miners[0] = -1

    parent = np.full(rounds + 1, -1, dtype=np.int64)
    height = np.zeros(rounds + 1, dtype=np.int64)
    window = int(np.ceil(delta.max())) + 3
    _run_rounds(miners, delta, parent, height, window)

    hmax = height.max()
    tip = int(np.argmax(height == hmax))  # earliest mined among max height
    in_chain = np.zeros(rounds + 1, dtype=bool)
    b = tip
    while b != -1:
        in_chain[b] = True
        b = int(parent[b])
    return RoundTrace(miners=miners, parent=parent, height=height, in_chain=in_chain, n=n)


# --------------------------------------------------------------------------
# Phase classification for two-cluster traces


@dataclass(frozen=True)
class Phase:
    kind: str          # "run" | "fork"
    start: int         # first round of the phase (1-based)
    end: int           # last round, inclusive
    winner: int        # cluster label whose blocks of this span joined the chain
    resolved: bool = True  # False when the horizon cut the phase short


class PhaseError(ValueError):
    pass


def classify_phases(trace: RoundTrace, cluster_of: np.ndarray) -> list[Phase]:
    """Partition a two-cluster trace into run and fork phases.

    Also verifies the two-branch structure inside every fork span: each
    cluster's fork blocks must chain onto each other from the shared anchor,
    and the winning side's blocks must all sit in the final chain.
    """
    labels = np.asarray(cluster_of)
    uniq = np.unique(labels)
    if uniq.size != 2:
        raise PhaseError(f"expected exactly 2 clusters, got {uniq.size}")

    R = trace.rounds
    c = np.empty(R + 1, dtype=np.int64)
    c[0] = -1
    c[1:] = labels[trace.miners[1:]]

    phases: list[Phase] = []
    pos = 1
    while pos <= R:
        # Maximal same-cluster stretch starting here.
        k = pos
        while k + 1 <= R and c[k + 1] == c[k]:
            k += 1
        if k == R:
            phases.append(Phase("run", pos, R, int(c[pos])))
            break
        if k > pos:
            # The stretch's last block joins the first fork pair.
            phases.append(Phase("run", pos, k - 1, int(c[pos])))
            pos = k
            continue
        # Fork: consume cluster-mixed round pairs.
        j = pos
        while j + 1 <= R and c[j] != c[j + 1]:
            j += 2
        if j > R:
            # Horizon cut after a complete pair: branches tie on height, so
            # the earlier-mined tip (first block of the last pair) wins.
            phases.append(Phase("fork", pos, R, int(c[R - 1]), resolved=False))
            pos = R + 1
        elif j + 1 > R:
            # Lone trailing block: its branch is one higher at the horizon.
            phases.append(Phase("fork", pos, R, int(c[R]), resolved=False))
            pos = R + 1
        else:
            # Pair (j, j+1) is same-cluster: it ends the fork and opens a run.
            phases.append(Phase("fork", pos, j - 1, int(c[j])))
            pos = j

    _check_partition(phases, R)
    _check_fork_structure(trace, c, phases)
    return phases


def _check_partition(phases: list[Phase], R: int) -> None:
    expect = 1
    for ph in phases:
        if ph.start != expect or ph.end < ph.start:
            raise PhaseError(f"phase list does not partition rounds at {ph}")
        expect = ph.end + 1
    if expect != R + 1:
        raise PhaseError("phase list does not cover the trace")


def _check_fork_structure(trace: RoundTrace, c: np.ndarray, phases: list[Phase]) -> None:
    for ph in phases:
        if ph.kind != "fork":
            continue
        anchor = int(trace.parent[ph.start])
        last_of = {}
        for r in range(ph.start, ph.end + 1):
            cl = int(c[r])
            want = last_of.get(cl, anchor)
            if int(trace.parent[r]) != want:
                raise PhaseError(
                    f"round {r}: fork block does not extend its cluster's branch "
                    f"(parent {int(trace.parent[r])}, expected {want})"
                )
            last_of[cl] = r
        if ph.resolved:
            for r in range(ph.start, ph.end + 1):
                if int(c[r]) == ph.winner and not trace.in_chain[r]:
                    raise PhaseError(f"round {r}: winner-side fork block missing from chain")


def reconstruct_chain(phases: list[Phase], c: np.ndarray) -> list[int]:
    """Chain rounds implied by the phases: runs fully, forks by winner side."""
    out = []
    for ph in phases:
        for r in range(ph.start, ph.end + 1):
            if ph.kind == "run" or int(c[r]) == ph.winner:
                out.append(r)
    return out
