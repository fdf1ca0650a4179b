"""Reactive whole-file baselines: LRU, LFU, mLRU and lazy LRU.

Each device keeps an ordered list of at most C_i files, most recent first.
A request is served by the cheapest reachable cache holding the whole file,
else by the BS.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .model import BS, Network, Request
from .routing import sources

KINDS = ("LRU", "LFU", "mLRU", "lazyLRU")


@dataclass
class ReactiveState:
    lists: list  # per device: list of file ids, most recent first
    counts: list = field(default_factory=list)  # per device Counter (LFU)
    clock: int = 0
    last_use: list = field(default_factory=list)  # per device {file: clock} (LFU ties)

    @classmethod
    def empty(cls, net: Network) -> "ReactiveState":
        n = net.device_count
        return cls([[] for _ in range(n)], [Counter() for _ in range(n)], 0, [{} for _ in range(n)])

    def copy(self) -> "ReactiveState":
        return ReactiveState([list(x) for x in self.lists], [Counter(c) for c in self.counts],
                             self.clock, [dict(d) for d in self.last_use])

    def as_cache(self, net: Network) -> np.ndarray:
        """The induced 0/1 placement, a point of the fractional feasible set."""
        y = np.zeros((net.device_count, net.catalog_size))
        for i, files in enumerate(self.lists):
            y[i, files] = 1.0
        return y


def reactive_route(req: Request, state: ReactiveState, net: Network) -> tuple[float, int]:
    """Cost and source (device id or ``BS``) of the cheapest full copy."""
    src, costs = sources(net, req.user)
    for j, c in zip(src, costs):
        if req.file in state.lists[j]:
            return float(c), int(j)
    return float(net.bs_cost[req.user]), BS


def _touch(files: list, n: int, capacity: int) -> None:
    if n in files:
        files.remove(n)
    elif len(files) >= capacity:
        if capacity == 0:
            return
        files.pop()
    files.insert(0, n)


def baseline_update(kind: str, state: ReactiveState, req: Request, net: Network,
                    mlru_variant: str = "one") -> ReactiveState:
    """Return the state after serving ``req`` under policy ``kind``.

    mLRU refreshes the file in the single serving cache on a hit (variant
    ``one``) or in every reachable cache holding it (variant ``all``); on a
    neighborhood miss it inserts at the requester. lazyLRU only ever inserts
    at the requester on a neighborhood miss and leaves hits untouched.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {KINDS}")
    if mlru_variant not in ("one", "all"):
        raise ValueError(f"unknown mLRU variant {mlru_variant!r}")
    s = state.copy()
    s.clock += 1
    i, n = req.user, req.file
    cap = int(net.capacities[i])
    if kind == "LRU":
        _touch(s.lists[i], n, cap)
    elif kind == "LFU":
        s.counts[i][n] += 1
        s.last_use[i][n] = s.clock
        if n not in s.lists[i] and cap > 0:
            s.lists[i].append(n)
            if len(s.lists[i]) > cap:
                # evict the least-frequent file, older first on ties
                victim = min(s.lists[i], key=lambda f: (s.counts[i][f], s.last_use[i][f]))
                s.lists[i].remove(victim)
        s.lists[i].sort(key=lambda f: (-s.counts[i][f], -s.last_use[i][f]))
    else:
        _, src = reactive_route(req, state, net)
        if src == BS:
            _touch(s.lists[i], n, cap)
        elif kind == "mLRU":
            if mlru_variant == "one":
                _touch(s.lists[src], n, int(net.capacities[src]))
            else:
                for j in net.neighbors(i):
                    if n in s.lists[j]:
                        _touch(s.lists[j], n, int(net.capacities[j]))
    return s


def run_baseline(kind: str, trace, net: Network, cost_view=None, mlru_variant: str = "one",
                 snapshots=()):
    """Serve a trace from empty caches; returns ``(costs, final_state, snapshots)``."""
    state = ReactiveState.empty(net)
    snapshots = set(snapshots)
    costs = np.empty(len(trace))
    snaps = {}
    for k, req in enumerate(trace):
        slot_net = cost_view(req.slot) if cost_view is not None else net
        if req.slot in snapshots:
            snaps[req.slot] = state.as_cache(net)
        costs[k], _ = reactive_route(req, state, slot_net)
        state = baseline_update(kind, state, req, slot_net, mlru_variant)
    return costs, state, snaps
