"""Closed-form per-miner reward fractions for clustered latency graphs.

The underlying abstraction is the round model: one block per unit-time round,
the miner drawn by hash power, with delivery delays eps within a cluster and
delta across clusters (1 < delta < 2, delta - 1 > eps).  Chain evolution then
decomposes into run phases (one cluster mines consecutively, all blocks stick)
and fork phases (clusters alternate in round pairs, two branches race and one
is discarded).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class TwoClusterParams:
    p: float       # dominant-cluster fraction
    n: int         # total miner count
    eps: float = 0.3
    delta: float = 1.5

    def __post_init__(self):
        if not (0.5 <= self.p < 1.0):
            raise DomainError(f"p must be in [0.5, 1), got {self.p}")
        if self.n < 2:
            raise DomainError("n must be >= 2")
        if not (0 < self.eps < 1):
            raise DomainError("eps must be in (0, 1)")
        if not (1 < self.delta < 2):
            raise DomainError("delta must be in (1, 2)")
        if not (self.delta - 1 > self.eps):
            raise DomainError("need delta - 1 > eps")


@dataclass(frozen=True)
class ThreeClusterParams:
    p1: float
    p2: float
    p3: float
    n: int
    eps: float = 0.3
    delta: float = 1.5

    def __post_init__(self):
        ps = (self.p1, self.p2, self.p3)
        if any(p < 0 for p in ps):
            raise DomainError("cluster fractions must be >= 0")
        if abs(sum(ps) - 1.0) > 1e-12:
            raise DomainError("cluster fractions must sum to 1")
        if self.n < 3:
            raise DomainError("n must be >= 3")
        if not (0 < self.eps < 1):
            raise DomainError("eps must be in (0, 1)")
        if not (1 + self.eps < self.delta < 2):
            raise DomainError("need 1 + eps < delta < 2")


def single_cluster(n: int, eps: float) -> tuple[float, float]:
    """(per-miner chain fraction, per-miner wastage) for one uniform cluster.

    eps <= 1: every block is delivered before the next round, no forks.
    1 < eps < 2: every height forks once and half of all blocks are discarded.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if not (0 < eps < 2):
        raise DomainError(f"eps must be in (0, 2), got {eps}")
    if eps <= 1.0:
        return 1.0 / n, 0.0
    return 1.0 / n, 0.5


def _two_cluster_terms(p: float) -> tuple[float, float, float]:
    """(per-miner numerator x n, dominant-cluster total, minority-cluster total).

    D = 1 - 2p(1-p) is the per-pair probability that a fork pair does not
    continue; the geometric fork-length sums produce the D**2 denominators.
    """
    q = 1.0 - p
    d2 = (1.0 - 2.0 * p * q) ** 2
    numer = p / q + 2.0 * p * p * q / d2
    m1 = p * p / q + 2.0 * p ** 3 * q / d2
    m2 = q * q / p + 2.0 * q ** 3 * p / d2
    return numer, m1, m2


def two_cluster_gain(p: float) -> float:
    """Dominant-cluster miner's chain fraction relative to the fair 1/n."""
    if not (0.5 <= p < 1.0):
        raise DomainError(f"p must be in [0.5, 1), got {p}")
    numer, m1, m2 = _two_cluster_terms(p)
    return numer / (m1 + m2)


def two_cluster_F(params: TwoClusterParams) -> float:
    """Expected chain fraction per dominant-cluster miner."""
    return two_cluster_gain(params.p) / params.n


def two_cluster_W(params: TwoClusterParams) -> float:
    """Expected fraction of a dominant-cluster miner's blocks left off-chain."""
    p = params.p
    q = 1.0 - p
    d2 = (1.0 - 2.0 * p * q) ** 2
    wasted = 2.0 * q ** 3 / d2
    total = p / q + 2.0 * p * p * q / d2 + wasted
    return wasted / total


def _pair_fractions(p: float, n: int) -> tuple[float, float]:
    """Per-miner chain fractions (cluster of size p*n, cluster of size (1-p)*n).

    Internal helper valid on all of (0, 1); used for degenerate three-cluster
    reductions where the first cluster need not be the dominant one.
    """
    if p <= 0.0 or p >= 1.0:
        raise DomainError("pair fraction needs p in (0, 1)")
    numer1, m1, m2 = _two_cluster_terms(p)
    numer2, _, _ = _two_cluster_terms(1.0 - p)
    tot = m1 + m2
    return numer1 / tot / n, numer2 / tot / n


# --------------------------------------------------------------------------
# Three clusters: 12-unknown linear system over fork-pair winner averages.

_PAIRS = ((1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2))


def _unknown_index(i: int, j: int, w: int) -> int:
    k = _PAIRS.index((i, j))
    return 2 * k + (0 if w == i else 1)


def _succ(x: int, y: int, w: int) -> int:
    """Which of a pair's two blocks survives, given the later winner w.

    The block whose cluster matches w is the one the next round built on; if
    neither matches, the earlier block of the pair wins on arrival order.
    """
    if x == w:
        return x
    if y == w:
        return y
    return x


def alpha_system(p1: float, p2: float, p3: float) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient matrix and constants for the 12 fork-pair recurrences.

    Unknown alpha[i,j,w] is the expected number of cluster-1 blocks that end
    up in the chain across a fork pair of clusters (i, j) won by w, together
    with all earlier pairs of the same fork phase.
    """
    p = (p1, p2, p3)
    A = np.zeros((12, 12))
    b = np.zeros(12)
    for (i, j) in _PAIRS:
        for w in (i, j):
            row = _unknown_index(i, j, w)
            A[row, row] += 1.0
            b[row] = 1.0 if w == 1 else 0.0
            for (x, y) in _PAIRS:
                A[row, _unknown_index(x, y, _succ(x, y, w))] -= p[x - 1] * p[y - 1]
    return A, b


def solve_alphas(p1: float, p2: float, p3: float) -> np.ndarray:
    A, b = alpha_system(p1, p2, p3)
    # Row sums of the off-diagonal part are 1 - sum(p_i^2) < 1, so the system
    # is strictly diagonally dominant and always solvable.
    sol = np.linalg.solve(A, b)
    return sol


def alpha_residual(p1: float, p2: float, p3: float, alphas: np.ndarray) -> float:
    """Max absolute defect of the recurrences at a candidate solution."""
    A, b = alpha_system(p1, p2, p3)
    return float(np.max(np.abs(A @ alphas - b)))


def _fork_tail(p: tuple[float, float, float], alphas: np.ndarray, ending: int) -> float:
    s = 0.0
    for (x, y) in _PAIRS:
        s += p[x - 1] * p[y - 1] * alphas[_unknown_index(x, y, _succ(x, y, ending))]
    return s


def expected_chain_blocks(p1: float, p2: float, p3: float) -> float:
    """Expected cluster-1 chain blocks per phase.

    Run phases contribute p1^2/(1-p1).  Fork phases contribute the winner
    averages weighted by the p_c^2 probability of each ending pair; the sum is
    normalized by sum(p_c^2) so that the geometric tail of fork lengths is
    counted once per pair depth, which is what makes the p3 = 0 case collapse
    exactly to the two-cluster expression.
    """
    if p1 == 0.0:
        return 0.0
    if p1 == 1.0:
        raise DomainError("degenerate single cluster")
    p = (p1, p2, p3)
    alphas = solve_alphas(p1, p2, p3)
    ending_weight = p1 * p1 + p2 * p2 + p3 * p3
    fork = sum(p[c - 1] ** 2 * _fork_tail(p, alphas, c) for c in (1, 2, 3))
    return p1 * p1 / (1.0 - p1) + fork / ending_weight


@dataclass(frozen=True)
class ThreeClusterResult:
    f_per_miner: float
    gain: float
    m1: float
    m2: float
    m3: float


def three_cluster_F(params: ThreeClusterParams) -> ThreeClusterResult:
    """Per-miner chain fraction for a cluster-1 miner plus per-cluster totals.

    Zero-size clusters delegate to the two-cluster expression instead of
    solving a degenerate system.  The printed per-miner fraction carries a
    1/n factor so the fully symmetric case returns exactly 1/n.
    """
    p1, p2, p3, n = params.p1, params.p2, params.p3, params.n
    zeros = [p1, p2, p3].count(0.0)
    if zeros >= 2:
        # Only cluster 1 (or only another) remains.
        if p1 == 1.0:
            return ThreeClusterResult(1.0 / n, 1.0, 1.0, 0.0, 0.0)
        raise DomainError("cluster 1 is empty and no mixture remains")
    if zeros == 1:
        if p1 == 0.0:
            raise DomainError("cluster 1 has zero size; ask about a nonempty cluster")
        # Two clusters remain: size p1*n and (1-p1)*n.
        f, _ = _pair_fractions(p1, n)
        return ThreeClusterResult(f, f * n, np.nan, np.nan, np.nan)

    m1 = expected_chain_blocks(p1, p2, p3)
    m2 = expected_chain_blocks(p2, p1, p3)
    m3 = expected_chain_blocks(p3, p2, p1)
    f = m1 / (p1 * n * (m1 + m2 + m3))
    return ThreeClusterResult(f, f * n, m1, m2, m3)


def three_cluster_gain(p1: float, p2: float, p3: float) -> float:
    """n-free relative gain for a cluster-1 miner."""
    # Gain is independent of n; any valid n works here.
    params = ThreeClusterParams(p1, p2, p3, n=300)
    return three_cluster_F(params).gain


def two_equal_dominant_gain(p_each: float, n: int = 300) -> float:
    """Gain for a cluster-1 miner when clusters 1 and 2 both hold p_each."""
    if not (0 < p_each < 0.5):
        raise DomainError("p_each must be in (0, 0.5)")
    params = ThreeClusterParams(p_each, p_each, 1.0 - 2.0 * p_each, n=n)
    return three_cluster_F(params).gain


# --------------------------------------------------------------------------
# Optimum search


def _grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0:
        raise DomainError("step must be > 0")
    out = []
    k = 0
    while True:
        x = round(lo + k * step, 12)
        if x > hi + 1e-12:
            break
        out.append(min(x, hi))
        k += 1
    return out


def optimal_cluster_fraction(
    gain_fn,
    lo: float,
    hi: float,
    step: float,
) -> tuple[float, float]:
    """Grid-scan argmax of a gain function; ties go to the smaller fraction."""
    best_p, best_g = None, -np.inf
    for p in _grid(lo, hi, step):
        g = gain_fn(p)
        if g > best_g + 1e-15:
            best_p, best_g = p, g
    return best_p, best_g


def optimal_two_cluster(step: float = 0.005) -> tuple[float, float]:
    return optimal_cluster_fraction(two_cluster_gain, 0.5, 0.995, step)


def optimal_three_cluster_equal_minorities(step: float = 0.005) -> tuple[float, float]:
    """Scan of the dominant fraction with the two minority clusters equal."""
    def gain(p1: float) -> float:
        return three_cluster_gain(p1, (1.0 - p1) / 2.0, (1.0 - p1) / 2.0)

    return optimal_cluster_fraction(gain, 0.34, 0.95, step)
