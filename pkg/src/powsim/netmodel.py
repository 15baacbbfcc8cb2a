"""Overlay topologies, city latency data, and block-delivery-time matrices."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import rngs

CONTINENTS = ("EU", "NA", "AS", "SA", "AF", "AU")

# Miners sharing a city would otherwise get zero-delay links from the
# half-RTT rule; the dataset has no intra-city pings.
DEFAULT_SAME_CITY_FLOOR_MS = 0.5


class DataError(ValueError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MinerSpec:
    miner_id: int
    city: str
    continent: str


def load_placement_csv(path) -> list[MinerSpec]:
    miners = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expect = ["miner_id", "city", "continent"]
        if reader.fieldnames != expect:
            raise DataError(f"{path}: expected header {','.join(expect)}")
        for row in reader:
            cont = row["continent"]
            if cont not in CONTINENTS:
                raise DataError(f"{path}: unknown continent {cont!r}")
            miners.append(MinerSpec(int(row["miner_id"]), row["city"], cont))
    ids = [m.miner_id for m in miners]
    if ids != list(range(len(miners))):
        raise DataError(f"{path}: miner_id column must be 0..n-1 in order")
    return miners


class CityLatencies:
    """Half-RTT city-pair delays keyed by unordered city pair."""

    def __init__(self, delays: dict[frozenset, float], cities: set[str]):
        self._delays = delays
        self.cities = cities

    @classmethod
    def from_csv(cls, path) -> "CityLatencies":
        sums: dict[frozenset, float] = {}
        counts: dict[frozenset, int] = {}
        cities: set[str] = set()
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            expect = ["source", "destination", "avg_rtt_ms"]
            if reader.fieldnames != expect:
                raise DataError(f"{path}: expected header {','.join(expect)}")
            for row in reader:
                rtt = float(row["avg_rtt_ms"])
                if rtt < 0:
                    raise DataError(
                        f"{path}: negative rtt for {row['source']},{row['destination']}"
                    )
                src, dst = row["source"], row["destination"]
                cities.add(src)
                cities.add(dst)
                if src == dst:
                    continue
                key = frozenset((src, dst))
                sums[key] = sums.get(key, 0.0) + rtt / 2.0
                counts[key] = counts.get(key, 0) + 1
        # Rows may appear in one or both directions; average if both.
        delays = {k: sums[k] / counts[k] for k in sums}
        return cls(delays, cities)

    def delay(self, a: str, b: str) -> float:
        if a == b:
            return 0.0
        try:
            return self._delays[frozenset((a, b))]
        except KeyError:
            raise DataError(f"no latency for city pair ({a}, {b})") from None

    def matrix_for(
        self,
        miners: list[MinerSpec],
        same_city_floor_ms: float = DEFAULT_SAME_CITY_FLOOR_MS,
    ) -> "LatencyMatrix":
        missing = []
        for m in miners:
            if m.city not in self.cities:
                missing.append(m.city)
        if missing:
            raise DataError(f"cities absent from latency data: {sorted(set(missing))}")
        n = len(miners)
        mat = np.zeros((n, n))
        pairs_missing = []
        for i in range(n):
            for j in range(i + 1, n):
                ci, cj = miners[i].city, miners[j].city
                if ci == cj:
                    d = same_city_floor_ms
                else:
                    key = frozenset((ci, cj))
                    if key not in self._delays:
                        pairs_missing.append((ci, cj))
                        continue
                    d = self._delays[key]
                mat[i, j] = mat[j, i] = d
        if pairs_missing:
            uniq = sorted(set(pairs_missing))
            raise DataError(f"latency data missing {len(uniq)} city pairs, e.g. {uniq[:5]}")
        return LatencyMatrix(mat)


@dataclass
class LatencyMatrix:
    """Symmetric per-pair propagation delays in milliseconds, zero diagonal."""

    delays: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise DataError("latency matrix must be square")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise DataError("latencies must be finite and nonnegative")
        if np.any(np.diag(d) != 0):
            raise DataError("latency matrix diagonal must be zero")
        if not np.array_equal(d, d.T):
            raise DataError("latency matrix must be symmetric")
        self.delays = d

    @property
    def n(self) -> int:
        return self.delays.shape[0]

    def __getitem__(self, idx):
        return self.delays[idx]


def uniform_latency(n: int, delay_ms: float) -> LatencyMatrix:
    mat = np.full((n, n), float(delay_ms))
    np.fill_diagonal(mat, 0.0)
    return LatencyMatrix(mat)


def two_cluster_latency(n_dominant: int, n_other: int, eps_ms: float, delta_ms: float) -> LatencyMatrix:
    """Dominant cluster first, minority cluster after; eps within, delta across."""
    n = n_dominant + n_other
    cluster = np.array([0] * n_dominant + [1] * n_other)
    mat = np.where(cluster[:, None] == cluster[None, :], float(eps_ms), float(delta_ms))
    np.fill_diagonal(mat, 0.0)
    return LatencyMatrix(mat)


@dataclass(frozen=True)
class Topology:
    n: int
    edges: tuple  # sorted tuple of (u, v) with u < v, deduplicated

    def __post_init__(self):
        for u, v in self.edges:
            if not (0 <= u < v < self.n):
                raise ConfigError(f"bad edge ({u}, {v})")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbor_lists(self) -> list[list[int]]:
        nbrs = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return [sorted(x) for x in nbrs]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        parent = list(range(self.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for u, v in self.edges:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
        root = find(0)
        return all(find(i) == root for i in range(self.n))

    def components(self) -> list[list[int]]:
        seen = [False] * self.n
        nbrs = self.neighbor_lists()
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            stack, comp = [s], []
            seen[s] = True
            while stack:
                u = stack.pop()
                comp.append(u)
                for v in nbrs[u]:
                    if not seen[v]:
                        seen[v] = True
                        stack.append(v)
            comps.append(sorted(comp))
        return comps


# --------------------------------------------------------------------------
# Topology policies


@dataclass(frozen=True)
class Intra:
    kind: str            # "none" | "complete" | "random_out_degree"
    degree: int = 0
    scope: str = "group"  # eligible targets: "group" or "all"

    def __post_init__(self):
        if self.kind not in ("none", "complete", "random_out_degree"):
            raise ConfigError(f"unknown intra policy {self.kind!r}")
        if self.kind == "random_out_degree" and self.degree < 0:
            raise ConfigError("degree must be >= 0")
        if self.scope not in ("group", "all"):
            raise ConfigError(f"unknown scope {self.scope!r}")


@dataclass(frozen=True)
class GroupSpec:
    # "all" | "rest" | {"continents": [...]} | {"ids": [...]} | {"fraction": p}
    select: object
    intra: Intra


@dataclass(frozen=True)
class InterLink:
    a: int
    b: int
    count: int | None = None   # exact number of distinct cross pairs
    degree: int | None = None  # or: each member of group a draws this many in b

    def __post_init__(self):
        if (self.count is None) == (self.degree is None):
            raise ConfigError("inter link needs exactly one of count/degree")
        if self.count is not None and self.count < 0:
            raise ConfigError("inter link count must be >= 0")


@dataclass(frozen=True)
class DegreeOverride:
    degree: int
    group: int | None = None
    miners: tuple | None = None


@dataclass(frozen=True)
class TopologyPolicy:
    groups: tuple
    inter_links: tuple = ()
    overrides: tuple = ()

    @classmethod
    def single(cls, intra: Intra) -> "TopologyPolicy":
        return cls(groups=(GroupSpec("all", intra),))


def random_out_degree_policy(degree: int) -> TopologyPolicy:
    return TopologyPolicy.single(Intra("random_out_degree", degree, scope="all"))


def complete_policy() -> TopologyPolicy:
    return TopologyPolicy.single(Intra("complete"))


def resolve_groups(
    policy: TopologyPolicy, miners: list[MinerSpec], assign_rng: np.random.Generator
) -> list[list[int]]:
    """Partition miner ids according to the group selectors."""
    n = len(miners)
    remaining = set(range(n))
    members: list[list[int] | None] = [None] * len(policy.groups)

    for gi, g in enumerate(policy.groups):
        sel = g.select
        if sel == "all":
            members[gi] = sorted(remaining)
            remaining.clear()
        elif isinstance(sel, dict) and "continents" in sel:
            conts = set(sel["continents"])
            unknown = conts - set(CONTINENTS)
            if unknown:
                raise ConfigError(f"unknown continents {sorted(unknown)}")
            chosen = [i for i in sorted(remaining) if miners[i].continent in conts]
            members[gi] = chosen
            remaining -= set(chosen)
        elif isinstance(sel, dict) and "ids" in sel:
            ids = [int(x) for x in sel["ids"]]
            bad = [i for i in ids if i not in remaining]
            if bad:
                raise ConfigError(f"selector ids not available: {bad}")
            members[gi] = sorted(ids)
            remaining -= set(ids)
        elif isinstance(sel, dict) and "fraction" in sel:
            frac = float(sel["fraction"])
            if not (0 < frac <= 1):
                raise ConfigError("fraction selector must be in (0, 1]")
            pool = sorted(remaining)
            take = int(round(frac * n))
            if take > len(pool):
                raise ConfigError("fraction selector exceeds remaining miners")
            chosen = sorted(assign_rng.permutation(pool)[:take].tolist())
            members[gi] = chosen
            remaining -= set(chosen)
        elif sel == "rest":
            members[gi] = sorted(remaining)
            remaining.clear()
        else:
            raise ConfigError(f"unknown group selector {sel!r}")

    if remaining:
        raise ConfigError(f"group selectors do not cover miners {sorted(remaining)[:5]}...")
    return members  # type: ignore[return-value]


def _effective_degree(policy: TopologyPolicy, groups: list[list[int]], gi: int, miner: int, base: int) -> int:
    d = base
    for ov in policy.overrides:
        if ov.group is not None and ov.group == gi:
            d = ov.degree
        if ov.miners is not None and miner in ov.miners:
            d = ov.degree
    return d


def build_topology(
    policy: TopologyPolicy,
    miners: list[MinerSpec],
    root_seed: int,
    run_index: int = 0,
) -> Topology:
    """Materialize an undirected overlay from a policy.

    Every miner's outgoing picks come off its own substream of the topology
    stream: a prefix of a fixed permutation of the eligible-target list.
    Raising one miner's out-degree therefore extends its own picks and leaves
    everyone else's edges untouched.
    """
    n = len(miners)
    assign = rngs.topology_rng(root_seed, run_index, rngs.ASSIGN_SUBSTREAM)
    groups = resolve_groups(policy, miners, assign)
    edges: set[tuple[int, int]] = set()

    def add(u, v):
        if u == v:
            return
        edges.add((u, v) if u < v else (v, u))

    def draw_targets(miner: int, eligible: list[int], d: int, layer: int):
        pool = [x for x in eligible if x != miner]
        if d > len(pool):
            raise ConfigError(
                f"miner {miner}: out-degree {d} exceeds {len(pool)} eligible targets"
            )
        rng = rngs.topology_rng(root_seed, run_index, miner + layer * n)
        perm = rng.permutation(len(pool))
        for k in perm[:d]:
            add(miner, pool[k])

    for gi, g in enumerate(policy.groups):
        mem = groups[gi]
        if g.intra.kind == "complete":
            for ai in range(len(mem)):
                for bi in range(ai + 1, len(mem)):
                    add(mem[ai], mem[bi])
        elif g.intra.kind == "random_out_degree":
            eligible = list(range(n)) if g.intra.scope == "all" else mem
            for m in mem:
                d = _effective_degree(policy, groups, gi, m, g.intra.degree)
                draw_targets(m, eligible, d, layer=0)

    bridge = rngs.topology_rng(root_seed, run_index, rngs.BRIDGE_SUBSTREAM)
    for li, link in enumerate(policy.inter_links):
        ga, gb = groups[link.a], groups[link.b]
        if link.count is not None:
            total = len(ga) * len(gb)
            if link.count > total:
                raise ConfigError(f"inter link count {link.count} exceeds {total} pairs")
            picks = bridge.choice(total, size=link.count, replace=False)
            for p in sorted(picks.tolist()):
                add(ga[p // len(gb)], gb[p % len(gb)])
        else:
            for m in ga:
                draw_targets(m, gb, link.degree, layer=1 + li)

    return Topology(n, tuple(sorted(edges)))


# --------------------------------------------------------------------------
# Block-delivery-time matrix


@dataclass
class DeltaMatrix:
    """Minimum block-delivery times over the overlay, per ordered pair."""

    times: np.ndarray

    @property
    def n(self) -> int:
        return self.times.shape[0]

    def __getitem__(self, idx):
        return self.times[idx]


def delta_matrix(topology: Topology, latency: LatencyMatrix, validation_delay: float) -> DeltaMatrix:
    """All-pairs minimum delivery times.

    Every hop costs its link latency plus one validation delay charged at the
    receiving node, so a k-hop path costs sum(latencies) + k * validation.
    """
    n = topology.n
    if latency.n != n:
        raise ConfigError("latency matrix size does not match topology")
    comps = topology.components()
    if len(comps) > 1:
        raise ConfigError(f"topology is disconnected; isolated component: {comps[1][:8]}")
    big = np.inf
    dist = np.full((n, n), big)
    np.fill_diagonal(dist, 0.0)
    for u, v in topology.edges:
        w = latency[u, v] + validation_delay
        dist[u, v] = dist[v, u] = min(dist[u, v], w)
    for k in range(n):
        np.minimum(dist, dist[:, k, None] + dist[None, k, :], out=dist)
    return DeltaMatrix(dist)
