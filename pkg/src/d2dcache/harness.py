"""Experiment runner: config -> network + trace -> policies -> regret -> CSV.

Configs are YAML documents (``schema_version: 1``)::

    schema_version: 1
    seed: 0
    horizon: 4000
    replications: 10
    catalog_size: 100
    capacities: 6                  # scalar or one per device
    network:
      device_count: 8
      cell_size_m: 1500            # random placement, or give `positions`
      range_m: 500
      cost_bands: [[100, 2], [300, 5], [400, 7], [500, 9]]
      bs_cost: 10
    workload:
      kind: zipf_iid               # zipf_iid | shifting_zipf | adversarial_cyclic | replay
      zipf_exponent: 0.9
    cost_schedule:                 # optional
      overrides: [[2000, 0, 1, cmax]]
    policies:
      - {name: DOCP, schedule: constant_T}
      - {name: mLRU, variant: one}
      - {name: lazyLRU}
    snapshots: [10]                # the horizon is always added
    message_log: false

Replication ``r`` uses seed ``seed + r`` for both placement and requests.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import baselines, docp, hindsight
from .model import Network, build_network, random_positions
from .workload import CostSchedule, GeneratorSpec, generate_trace, read_cost_schedule, schedule_params

SCHEMA_VERSION = 1
BASELINE_NAMES = set(baselines.KINDS)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    horizon: int
    catalog_size: int
    capacities: object
    network: dict
    workload: dict
    policies: list
    seed: int = 0
    replications: int = 1
    cost_schedule: dict | None = None
    snapshots: list = field(default_factory=lambda: [10])
    message_log: bool = False
    hindsight_method: str = "lp"
    workers: int = 1
    base_dir: Path = field(default_factory=Path.cwd)

    def generator_spec(self, replication: int = 0) -> GeneratorSpec:
        w = dict(self.workload)
        if w.get("path"):
            w["path"] = str(self.base_dir / w["path"])
        return GeneratorSpec(horizon=self.horizon, seed=self.seed + replication, **w)

    def build_network(self, replication: int = 0) -> Network:
        n = self.network
        positions = n.get("positions")
        if positions is None:
            rng = np.random.default_rng(self.seed + replication)
            positions = random_positions(int(n["device_count"]), float(n["cell_size_m"]), rng)
        bands = [tuple(b) for b in n["cost_bands"]]
        return build_network(positions, float(n["range_m"]), bands, float(n["bs_cost"]),
                             self.capacities, self.catalog_size, n.get("c_max"))

    def build_schedule(self) -> CostSchedule | None:
        cs = self.cost_schedule
        if not cs:
            return None
        band_kw = dict(range_m=float(self.network["range_m"]),
                       cost_bands=tuple(tuple(b) for b in self.network["cost_bands"]))
        if cs.get("path"):
            return read_cost_schedule(self.base_dir / cs["path"], **band_kw)
        overrides = tuple((int(t), int(i), int(j), None if str(c).lower() == "cmax" else float(c))
                          for t, i, j, c in cs.get("overrides", []))
        moves = tuple((int(m["slot"]), np.asarray(m["positions"], dtype=float))
                      for m in cs.get("moves", []))
        return CostSchedule(overrides, moves, **band_kw)


# -- config parsing -----------------------------------------------------------

def _key_lines(node, prefix=()) -> dict:
    """Map key paths of a composed YAML node to 1-based line numbers."""
    out = {prefix: node.start_mark.line + 1}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            out.update(_key_lines(v, prefix + (k.value,)))
            out[prefix + (k.value,)] = k.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for idx, v in enumerate(node.value):
            out.update(_key_lines(v, prefix + (idx,)))
    return out


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> ExperimentConfig:
    """Parse and validate a YAML config; errors carry ``source:line``."""
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"{source}: invalid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{source}:1: config must be a mapping")
    lines = _key_lines(node)

    def fail(path, msg):
        line = next((lines[path[:k]] for k in range(len(path), -1, -1) if path[:k] in lines), 1)
        raise ConfigError(f"{source}:{line}: {'.'.join(map(str, path)) or 'config'}: {msg}")

    def need(d, key, path=()):
        if key not in d:
            fail(path, f"missing required key {key!r}")
        return d[key]

    if data.get("schema_version") != SCHEMA_VERSION:
        fail(("schema_version",), f"schema_version must be {SCHEMA_VERSION}")
    horizon = need(data, "horizon")
    if not isinstance(horizon, int) or horizon < 1:
        fail(("horizon",), "horizon must be an integer >= 1")
    catalog = need(data, "catalog_size")
    if not isinstance(catalog, int) or catalog < 1:
        fail(("catalog_size",), "catalog_size must be a positive integer")
    caps = need(data, "capacities")
    net = need(data, "network")
    if not isinstance(net, dict):
        fail(("network",), "network must be a mapping")
    for key in ("range_m", "cost_bands", "bs_cost"):
        need(net, key, ("network",))
    if "positions" not in net:
        need(net, "device_count", ("network",))
        need(net, "cell_size_m", ("network",))
    workload = dict(need(data, "workload"))
    policies = need(data, "policies")
    if not isinstance(policies, list) or not policies:
        fail(("policies",), "at least one policy required")
    for k, p in enumerate(policies):
        name = p.get("name") if isinstance(p, dict) else None
        if name != "DOCP" and name not in BASELINE_NAMES:
            fail(("policies", k), f"unknown policy {name!r}")
        if name == "DOCP" and p.get("schedule", "constant_T") not in docp.SCHEDULES:
            fail(("policies", k, "schedule"), f"schedule must be one of {docp.SCHEDULES}")
        if name == "mLRU" and p.get("variant", "one") not in ("one", "all"):
            fail(("policies", k, "variant"), "variant must be 'one' or 'all'")
    reps = data.get("replications", 1)
    if not isinstance(reps, int) or reps < 1:
        fail(("replications",), "replications must be an integer >= 1")

    cfg = ExperimentConfig(
        horizon=horizon, catalog_size=catalog, capacities=caps, network=net, workload=workload,
        policies=policies, seed=int(data.get("seed", 0)), replications=reps,
        cost_schedule=data.get("cost_schedule"), snapshots=list(data.get("snapshots", [10])),
        message_log=bool(data.get("message_log", False)),
        hindsight_method=data.get("hindsight", {}).get("method", "lp"),
        workers=int(data.get("workers", 1)), base_dir=base_dir or Path.cwd())
    # build once to surface semantic errors (band/BS cost, capacities, generator fields)
    try:
        cfg.build_network(0)
    except (ValueError, TypeError, KeyError) as e:
        fail(("network",), str(e))
    try:
        cfg.generator_spec(0)
    except (ValueError, TypeError) as e:
        fail(("workload",), str(e))
    try:
        cfg.build_schedule()
    except (ValueError, TypeError, OSError) as e:
        fail(("cost_schedule",), str(e))
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path), path.parent)


# -- metrics ------------------------------------------------------------------

def compute_regret(policy_costs, hindsight_slot_costs) -> np.ndarray:
    """Cumulative regret series; the last element is R_T."""
    a = np.asarray(policy_costs, dtype=float)
    b = np.asarray(hindsight_slot_costs, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return np.cumsum(a - b)


def running_average(costs) -> np.ndarray:
    c = np.asarray(costs, dtype=float)
    return np.cumsum(c) / np.arange(1, len(c) + 1)


@dataclass
class PolicySeries:
    costs: np.ndarray
    running_avg: np.ndarray
    regret: np.ndarray
    allocations: dict  # slot -> per-file total fraction

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1])


@dataclass
class MetricsSeries:
    policies: dict  # name -> PolicySeries
    hindsight_costs: np.ndarray
    hindsight: hindsight.HindsightResult
    regret_bound: float
    params: docp.StepParams
    network: Network
    messages: str | None = None

    @property
    def hindsight_allocation(self) -> np.ndarray:
        return self.hindsight.allocation


def policy_label(p: dict) -> str:
    return p.get("label") or p["name"]


def run_replication(cfg: ExperimentConfig, replication: int = 0, audit: bool = False,
                    trace=None) -> MetricsSeries:
    """Run every configured policy on one shared trace and score it against hindsight."""
    net = cfg.build_network(replication)
    schedule = cfg.build_schedule()
    if trace is None:
        trace = generate_trace(cfg.generator_spec(replication), net)
    T = len(trace)
    view = schedule.view_fn(net) if schedule is not None else None
    C, J, c_star = schedule_params(net, schedule, T)
    params = docp.StepParams(C, J, c_star, T)

    if view is None:
        best = hindsight.best_static(hindsight.aggregate(trace), net, method=cfg.hindsight_method)
    else:
        segs = hindsight.aggregate_segments(trace, net, view)
        best = hindsight.best_static(segs, net, method=cfg.hindsight_method)
    h_costs = hindsight.static_slot_costs(trace, best.y, net, view)

    snaps = sorted({s for s in cfg.snapshots if 1 <= s <= T} | {T})
    series = {}
    log = io.StringIO() if cfg.message_log else None
    for p in cfg.policies:
        name = p["name"]
        if name == "DOCP":
            state = docp.init_state(net, p.get("schedule", "constant_T"), T, p.get("init", "uniform"),
                                    p.get("gamma"), params, np.random.default_rng(cfg.seed + replication))
            costs, _, y_snaps = docp.run_docp(trace, net, state, view, log, snaps, audit)
        else:
            costs, _, y_snaps = baselines.run_baseline(name, trace, net, view, p.get("variant", "one"),
                                                       snaps)
        series[policy_label(p)] = PolicySeries(
            costs, running_average(costs), compute_regret(costs, h_costs),
            {s: y.sum(axis=0) for s, y in y_snaps.items()})
    return MetricsSeries(series, h_costs, best, params.regret_bound, params, net,
                         log.getvalue() if log is not None else None)


def _fmt(x: float) -> str:
    return repr(round(float(x), 12))


def metrics_csv(m: MetricsSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["slot", "policy", "cost", "running_avg", "regret"])
    h_avg = running_average(m.hindsight_costs)
    for name, s in list(m.policies.items()) + [("hindsight", None)]:
        costs = m.hindsight_costs if s is None else s.costs
        avg = h_avg if s is None else s.running_avg
        reg = np.zeros(len(costs)) if s is None else s.regret
        for t in range(len(costs)):
            w.writerow([t + 1, name, _fmt(costs[t]), _fmt(avg[t]), _fmt(reg[t])])
    return buf.getvalue()


def allocation_csv(m: MetricsSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["slot", "file", "policy", "total_fraction"])
    T = len(m.hindsight_costs)
    for name, s in m.policies.items():
        for slot, alloc in sorted(s.allocations.items()):
            for n, v in enumerate(alloc):
                w.writerow([slot, n, name, _fmt(v)])
    for n, v in enumerate(m.hindsight_allocation):
        w.writerow([T, n, "hindsight", _fmt(v)])
    return buf.getvalue()


def summary_rows(results: list) -> list:
    rows = []
    for r, m in enumerate(results):
        best_avg = m.hindsight.cost / len(m.hindsight_costs)
        for name, s in m.policies.items():
            rows.append({"replication": r, "policy": name, "running_avg": float(s.running_avg[-1]),
                         "regret": s.final_regret, "regret_bound": m.regret_bound,
                         "hindsight_avg": best_avg})
    return rows


def _run_one(args):
    cfg, r = args
    return run_replication(cfg, r)


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> list:
    """Run all replications; write per-replication CSVs when ``out_dir`` is given."""
    jobs = [(cfg, r) for r in range(cfg.replications)]
    if cfg.workers > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    if out_dir is not None:
        write_outputs(results, out_dir)
    return results


def write_outputs(results: list, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for r, m in enumerate(results):
        (out / f"metrics_rep{r}.csv").write_text(metrics_csv(m))
        (out / f"allocation_rep{r}.csv").write_text(allocation_csv(m))
        if m.messages is not None:
            (out / f"messages_rep{r}.txt").write_text("slot,from,to,file,beta\n" + m.messages)
    buf = io.StringIO()
    fields = ["replication", "policy", "running_avg", "regret", "regret_bound", "hindsight_avg"]
    w = csv.DictWriter(buf, fields, lineterminator="\n")
    w.writeheader()
    for row in summary_rows(results):
        w.writerow({k: (_fmt(v) if isinstance(v, float) else v) for k, v in row.items()})
    (out / "summary.csv").write_text(buf.getvalue())


def cosine(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    den = np.linalg.norm(a) * np.linalg.norm(b)
    return float(a @ b / den) if den > 0 else math.nan
