"""Per-miner reward measurement and cross-run aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import SimResult
from .netmodel import MinerSpec


class MetricsError(ValueError):
    pass


@dataclass
class RewardReport:
    miner_ids: np.ndarray
    cities: list[str]
    continents: list[str]
    blocks_mined: np.ndarray     # mined up to the retained-chain cutoff time
    blocks_in_chain: np.ndarray  # of those, in the retained chain
    f_pct: np.ndarray
    w_pct: np.ndarray
    retained_length: int         # retained chain blocks, genesis excluded
    fair_pct: float
    fork_rate: float             # share of cutoff-time blocks off the retained chain

    @property
    def n(self) -> int:
        return len(self.miner_ids)


def compute_rewards(
    result: SimResult, miners: list[MinerSpec], discard_tail: int
) -> RewardReport:
    """Score one run.

    The last discard_tail chain blocks are dropped before measuring, since
    replicas may still disagree about them.  Wastage denominators only count
    blocks mined no later than the last retained block, so blocks whose fate
    is still undecided at the horizon penalize nobody.
    """
    n = len(miners)
    chain = result.final_chain
    if len(chain) - 1 <= discard_tail:
        raise MetricsError(
            f"chain of {len(chain) - 1} blocks is too short for a {discard_tail}-block tail"
        )
    retained = chain[: len(chain) - discard_tail] if discard_tail > 0 else chain
    retained_blocks = retained[1:]  # skip genesis
    cutoff = float(result.block_mined_at[retained[-1]])

    in_chain_by = np.bincount(result.block_miner[retained_blocks], minlength=n)

    all_ids = np.arange(1, result.block_miner.shape[0])
    eligible = all_ids[result.block_mined_at[all_ids] <= cutoff]
    mined_by = np.bincount(result.block_miner[eligible], minlength=n)

    f = in_chain_by / len(retained_blocks)
    w = np.zeros(n)
    nz = mined_by > 0
    w[nz] = (mined_by[nz] - in_chain_by[nz]) / mined_by[nz]

    fork_rate = 1.0 - len(retained_blocks) / max(len(eligible), 1)
    return RewardReport(
        miner_ids=np.arange(n),
        cities=[m.city for m in miners],
        continents=[m.continent for m in miners],
        blocks_mined=mined_by,
        blocks_in_chain=in_chain_by,
        f_pct=f * 100.0,
        w_pct=w * 100.0,
        retained_length=len(retained_blocks),
        fair_pct=100.0 / n,
        fork_rate=fork_rate,
    )


@dataclass
class AggregateReport:
    miner_ids: np.ndarray
    cities: list[str]
    continents: list[str]
    f_mean: np.ndarray
    f_ci95: np.ndarray
    w_mean: np.ndarray
    w_ci95: np.ndarray
    runs: int
    fair_pct: float


def aggregate(reports: list[RewardReport]) -> AggregateReport:
    """Per-miner mean and normal-approximation 95% half-widths over runs."""
    if not reports:
        raise MetricsError("no reports to aggregate")
    first = reports[0]
    for r in reports[1:]:
        if r.cities != first.cities or r.continents != first.continents:
            raise MetricsError("reports cover different miner sets")
    f = np.stack([r.f_pct for r in reports])
    w = np.stack([r.w_pct for r in reports])
    runs = len(reports)
    if runs > 1:
        f_ci = 1.96 * f.std(axis=0, ddof=1) / np.sqrt(runs)
        w_ci = 1.96 * w.std(axis=0, ddof=1) / np.sqrt(runs)
    else:
        f_ci = np.zeros(first.n)
        w_ci = np.zeros(first.n)
    return AggregateReport(
        miner_ids=first.miner_ids,
        cities=first.cities,
        continents=first.continents,
        f_mean=f.mean(axis=0),
        f_ci95=f_ci,
        w_mean=w.mean(axis=0),
        w_ci95=w_ci,
        runs=runs,
        fair_pct=first.fair_pct,
    )


@dataclass
class ContinentSummary:
    continent: str
    miner_count: int
    f_mean_pct: float
    gain_vs_fair: float
    share_above_fair: float


def continent_summary(report: AggregateReport, miners: list[MinerSpec]) -> list[ContinentSummary]:
    out = []
    conts = sorted({m.continent for m in miners})
    for cont in conts:
        sel = np.array([m.continent == cont for m in miners])
        mean = float(report.f_mean[sel].mean())
        out.append(
            ContinentSummary(
                continent=cont,
                miner_count=int(sel.sum()),
                f_mean_pct=mean,
                gain_vs_fair=mean / report.fair_pct,
                share_above_fair=float((report.f_mean[sel] > report.fair_pct).mean()),
            )
        )
    return out
