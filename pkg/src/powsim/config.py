"""Experiment configuration: TOML schema, validation, and run manifests."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import rngs
from .engine import SimConfig
from .netmodel import (
    CONTINENTS,
    ConfigError,
    DegreeOverride,
    GroupSpec,
    InterLink,
    Intra,
    TopologyPolicy,
)

ARTIFACT_VERSION = "0.1.0"

DEFAULT_MEAN_INTERBLOCK_MS = 15_000.0
DEFAULT_VALIDATION_MS = 1.0
DEFAULT_DISCARD_TAIL = 100
DEFAULT_DEGREE = 6
DEFAULT_TARGET_CHAIN = 20_000


@dataclass(frozen=True)
class SyntheticData:
    kind: str                   # "uniform" | "two_cluster"
    n: int
    latency_ms: float = 10.0    # uniform
    eps_ms: float = 1.0         # two_cluster
    delta_ms: float = 10.0
    dominant_fraction: float = 0.7


@dataclass(frozen=True)
class SweepSpec:
    kind: str                   # "group_degree" | "dominant_fraction" | "delta_ms"
    values: tuple
    group: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    sim: SimConfig
    policy: TopologyPolicy
    runs: int
    root_seed: int
    placement_path: str | None = None
    latency_path: str | None = None
    synthetic: SyntheticData | None = None
    sweep: SweepSpec | None = None
    topology_per_run: bool = True
    same_city_floor_ms: float = 0.5

    def resolved_dict(self) -> dict:
        d = {
            "sim": asdict(self.sim),
            "policy": _policy_dict(self.policy),
            "runs": self.runs,
            "root_seed": self.root_seed,
            "placement_path": self.placement_path,
            "latency_path": self.latency_path,
            "synthetic": asdict(self.synthetic) if self.synthetic else None,
            "sweep": asdict(self.sweep) if self.sweep else None,
            "topology_per_run": self.topology_per_run,
            "same_city_floor_ms": self.same_city_floor_ms,
            "version": ARTIFACT_VERSION,
        }
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()


def _policy_dict(policy: TopologyPolicy) -> dict:
    return {
        "groups": [
            {"select": g.select, "intra": asdict(g.intra)} for g in policy.groups
        ],
        "inter_links": [asdict(x) for x in policy.inter_links],
        "overrides": [asdict(x) for x in policy.overrides],
    }


def _err(path: str, msg: str) -> ConfigError:
    return ConfigError(f"{path}: {msg}")


def _take(table: dict, key: str, path: str, typ, default=None, required=False):
    if key not in table:
        if required:
            raise _err(f"{path}.{key}", "missing required key")
        return default
    val = table.pop(key)
    if typ is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, typ):
        raise _err(f"{path}.{key}", f"expected {typ.__name__}, got {type(val).__name__}")
    return val


def _reject_unknown(table: dict, path: str):
    if table:
        raise _err(f"{path}.{next(iter(table))}", "unknown key")


def _parse_intra(tbl: dict, path: str) -> Intra:
    kind = _take(tbl, "kind", path, str, required=True)
    degree = _take(tbl, "degree", path, int, default=0)
    scope = _take(tbl, "scope", path, str, default="group")
    _reject_unknown(tbl, path)
    return Intra(kind, degree, scope)


def _parse_select(val, path: str):
    if isinstance(val, str):
        if val in ("all", "rest"):
            return val
        raise _err(path, f"unknown selector {val!r}")
    if isinstance(val, dict):
        val = dict(val)
        if "continents" in val:
            conts = val.pop("continents")
            _reject_unknown(val, path)
            bad = set(conts) - set(CONTINENTS)
            if bad:
                raise _err(path, f"unknown continents {sorted(bad)}")
            return {"continents": list(conts)}
        if "ids" in val:
            ids = val.pop("ids")
            _reject_unknown(val, path)
            return {"ids": [int(x) for x in ids]}
        if "fraction" in val:
            frac = float(val.pop("fraction"))
            _reject_unknown(val, path)
            return {"fraction": frac}
    raise _err(path, f"bad selector {val!r}")


def _parse_policy(tbl: dict, path: str) -> TopologyPolicy:
    groups_raw = tbl.pop("groups", None)
    if groups_raw is None:
        groups = (GroupSpec("all", Intra("random_out_degree", DEFAULT_DEGREE, scope="all")),)
    else:
        groups = []
        for gi, g in enumerate(groups_raw):
            g = dict(g)
            gpath = f"{path}.groups[{gi}]"
            select = _parse_select(g.pop("select", "all"), f"{gpath}.select")
            intra_tbl = g.pop("intra", None)
            if intra_tbl is None:
                intra = Intra("random_out_degree", DEFAULT_DEGREE, scope="all")
            else:
                intra = _parse_intra(dict(intra_tbl), f"{gpath}.intra")
            _reject_unknown(g, gpath)
            groups.append(GroupSpec(select, intra))
        groups = tuple(groups)

    inter = []
    for li, l in enumerate(tbl.pop("inter_links", [])):
        l = dict(l)
        lpath = f"{path}.inter_links[{li}]"
        a = _take(l, "a", lpath, int, required=True)
        b = _take(l, "b", lpath, int, required=True)
        count = _take(l, "count", lpath, int)
        degree = _take(l, "degree", lpath, int)
        _reject_unknown(l, lpath)
        if not (0 <= a < len(groups)) or not (0 <= b < len(groups)):
            raise _err(lpath, "group index out of range")
        inter.append(InterLink(a, b, count=count, degree=degree))

    overrides = []
    for oi, o in enumerate(tbl.pop("overrides", [])):
        o = dict(o)
        opath = f"{path}.overrides[{oi}]"
        degree = _take(o, "degree", opath, int, required=True)
        group = _take(o, "group", opath, int)
        miners = o.pop("miners", None)
        _reject_unknown(o, opath)
        if (group is None) == (miners is None):
            raise _err(opath, "need exactly one of group/miners")
        overrides.append(
            DegreeOverride(degree=degree, group=group,
                           miners=tuple(int(x) for x in miners) if miners else None)
        )

    _reject_unknown(tbl, path)
    return TopologyPolicy(groups=groups, inter_links=tuple(inter), overrides=tuple(overrides))


def parse_config(path) -> ExperimentConfig:
    """Load and fully validate a TOML experiment file."""
    path = Path(path)
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)

    sim_tbl = dict(raw.pop("sim", {}))
    data_tbl = dict(raw.pop("data", {}))
    topo_tbl = dict(raw.pop("topology", {}))
    exp_tbl = dict(raw.pop("experiment", {}))
    sweep_tbl = raw.pop("sweep", None)
    _reject_unknown(raw, "config")

    synthetic = None
    placement = latency = None
    syn_tbl = data_tbl.pop("synthetic", None)
    if syn_tbl is not None:
        syn_tbl = dict(syn_tbl)
        kind = _take(syn_tbl, "kind", "data.synthetic", str, required=True)
        if kind not in ("uniform", "two_cluster"):
            raise _err("data.synthetic.kind", f"unknown kind {kind!r}")
        synthetic = SyntheticData(
            kind=kind,
            n=_take(syn_tbl, "n", "data.synthetic", int, required=True),
            latency_ms=_take(syn_tbl, "latency_ms", "data.synthetic", float, default=10.0),
            eps_ms=_take(syn_tbl, "eps_ms", "data.synthetic", float, default=1.0),
            delta_ms=_take(syn_tbl, "delta_ms", "data.synthetic", float, default=10.0),
            dominant_fraction=_take(
                syn_tbl, "dominant_fraction", "data.synthetic", float, default=0.7
            ),
        )
        _reject_unknown(syn_tbl, "data.synthetic")
        n = synthetic.n
    else:
        placement = _take(data_tbl, "placement", "data", str, required=True)
        latency = _take(data_tbl, "latency", "data", str, required=True)
        placement = str((path.parent / placement).resolve())
        latency = str((path.parent / latency).resolve())
        for p, label in ((placement, "placement"), (latency, "latency")):
            if not Path(p).exists():
                raise _err(f"data.{label}", f"file not found: {p}")
        from .netmodel import load_placement_csv

        n = len(load_placement_csv(placement))
    _reject_unknown(data_tbl, "data")

    same_city_floor = _take(sim_tbl, "same_city_floor_ms", "sim", float, default=0.5)
    sim = SimConfig(
        n=n,
        mean_interblock=_take(
            sim_tbl, "mean_interblock_ms", "sim", float, default=DEFAULT_MEAN_INTERBLOCK_MS
        ),
        validation_delay=_take(
            sim_tbl, "validation_delay_ms", "sim", float, default=DEFAULT_VALIDATION_MS
        ),
        target_chain_length=_take(
            sim_tbl, "target_chain_length", "sim", int, default=DEFAULT_TARGET_CHAIN
        ),
        discard_tail=_take(sim_tbl, "discard_tail", "sim", int, default=DEFAULT_DISCARD_TAIL),
        seed=_take(sim_tbl, "seed", "sim", int, default=0),
    )
    _reject_unknown(sim_tbl, "sim")

    policy = _parse_policy(topo_tbl, "topology")

    runs = _take(exp_tbl, "runs", "experiment", int, default=1)
    if runs < 1:
        raise _err("experiment.runs", "must be >= 1")
    root_seed = _take(exp_tbl, "root_seed", "experiment", int, default=sim.seed)
    topology_per_run = _take(exp_tbl, "topology_per_run", "experiment", bool, default=True)
    _reject_unknown(exp_tbl, "experiment")

    sweep = None
    if sweep_tbl is not None:
        sweep_tbl = dict(sweep_tbl)
        kind = _take(sweep_tbl, "kind", "sweep", str, required=True)
        if kind not in ("group_degree", "dominant_fraction", "delta_ms"):
            raise _err("sweep.kind", f"unknown kind {kind!r}")
        values = sweep_tbl.pop("values", None)
        if not values:
            raise _err("sweep.values", "must be a non-empty list")
        group = _take(sweep_tbl, "group", "sweep", int)
        _reject_unknown(sweep_tbl, "sweep")
        if kind == "group_degree" and group is None:
            raise _err("sweep.group", "required for group_degree sweeps")
        if kind in ("dominant_fraction", "delta_ms") and synthetic is None:
            raise _err("sweep.kind", f"{kind} sweeps need [data.synthetic]")
        sweep = SweepSpec(kind=kind, values=tuple(values), group=group)

    cfg = ExperimentConfig(
        sim=sim,
        policy=policy,
        runs=runs,
        root_seed=root_seed,
        placement_path=placement,
        latency_path=latency,
        synthetic=synthetic,
        sweep=sweep,
        topology_per_run=topology_per_run,
        same_city_floor_ms=same_city_floor,
    )
    return cfg


@dataclass
class RunManifest:
    config_hash: str
    root_seed: int
    run_seeds: list
    version: str
    created_utc: str

    @classmethod
    def create(cls, config: ExperimentConfig) -> "RunManifest":
        import datetime

        return cls(
            config_hash=config.config_hash(),
            root_seed=config.root_seed,
            run_seeds=rngs.derive_run_seeds(config.root_seed, config.runs),
            version=ARTIFACT_VERSION,
            created_utc=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        )

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
