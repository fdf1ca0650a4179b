"""Distributed online caching policy: route, send multipliers, gradient step, project."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, TextIO

import numpy as np

from .model import BS, Network, Request, empty_cache, uniform_cache, validate_cache
from .projection import project_capped_box
from .routing import RoutingPlan, optimal_routing

SCHEDULES = ("constant_T", "inverse_sqrt_t", "doubling")


@dataclass(frozen=True)
class StepParams:
    """Quantities entering the no-regret step size sqrt(2 C J*) / (c* sqrt(T))."""

    capacity: float  # C = max_i C_i
    max_neighborhood: int  # J* = max_i |J(i)|
    max_cost: float  # c* = max_i c_i0
    horizon: int | None = None

    @classmethod
    def from_network(cls, net: Network, horizon: int | None = None) -> "StepParams":
        return cls(net.max_capacity, net.max_neighborhood, net.max_bs_cost, horizon)

    @property
    def regret_bound(self) -> float:
        if self.horizon is None:
            raise ValueError("regret bound needs a horizon")
        return self.max_cost * math.sqrt(2 * self.capacity * self.max_neighborhood * self.horizon)


@dataclass(frozen=True)
class DocpState:
    cache: np.ndarray
    schedule: str
    params: StepParams
    t: int = 1  # slot of the next request
    gamma: float | None = None  # fixed override; bypasses the schedule

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown step schedule {self.schedule!r}; expected one of {SCHEDULES}")


@dataclass(frozen=True)
class MultiplierMessage:
    slot: int
    sender: int
    receiver: int
    file: int
    beta: float

    def to_line(self) -> str:
        return f"{self.slot},{self.sender},{self.receiver},{self.file},{self.beta:.12g}"


@dataclass(frozen=True)
class StepResult:
    cost: float
    plan: RoutingPlan
    messages: list
    state: DocpState


def init_state(net: Network, schedule: str = "constant_T", horizon: int | None = None,
               init: str = "uniform", gamma: float | None = None,
               params: StepParams | None = None, rng: np.random.Generator | None = None) -> DocpState:
    """Initial DOCP state. ``init`` is ``uniform`` (C_i/N), ``zeros`` or ``random``."""
    if init == "uniform":
        y = uniform_cache(net)
    elif init == "zeros":
        y = empty_cache(net)
    elif init == "random":
        rng = rng or np.random.default_rng()
        y = rng.uniform(size=(net.device_count, net.catalog_size))
        y = np.stack([project_capped_box(row, c).y for row, c in zip(y, net.capacities)])
    else:
        raise ValueError(f"unknown init {init!r}")
    params = params or StepParams.from_network(net, horizon)
    return DocpState(y, schedule, params, 1, gamma)


def step_size(state: DocpState) -> float:
    if state.gamma is not None:
        return state.gamma
    p = state.params
    numerator = math.sqrt(2 * p.capacity * p.max_neighborhood)
    if state.schedule == "constant_T":
        if p.horizon is None:
            raise ValueError("constant_T schedule needs a known horizon T")
        return numerator / (p.max_cost * math.sqrt(p.horizon))
    if state.schedule == "inverse_sqrt_t":
        return numerator / (p.max_cost * math.sqrt(state.t))
    # doubling: epoch k covers slots [2^k, 2^(k+1)) and is tuned for T = 2^k
    epoch_len = 1 << (state.t.bit_length() - 1)
    return numerator / (p.max_cost * math.sqrt(epoch_len))


def docp_step(state: DocpState, req: Request, net: Network) -> StepResult:
    """One slot: pay the cost on the current cache, then update the neighborhood.

    The requester computes the optimal routing; every reachable cache ``j``
    with a positive multiplier receives it and moves ``y[j, n_t]`` up by
    ``gamma * beta_j`` before projecting its own row back onto its capped box.
    """
    if req.slot != state.t:
        raise ValueError(f"request slot {req.slot} does not match state slot {state.t}")
    plan = optimal_routing(req, state.cache, net)
    gamma = step_size(state)
    messages = [MultiplierMessage(req.slot, req.user, j, req.file, b)
                for j, b in plan.beta.items() if j != BS and b > 0]
    y = state.cache
    if messages:
        y = y.copy()
        for msg in messages:
            row = y[msg.receiver].copy()
            row[msg.file] += gamma * msg.beta
            y[msg.receiver] = project_capped_box(row, net.capacities[msg.receiver]).y
    return StepResult(plan.cost, plan, messages, replace(state, cache=y, t=state.t + 1))


def locality_audit(messages: Iterable[MultiplierMessage], net: Network, req: Request,
                   before: np.ndarray | None = None, after: np.ndarray | None = None,
                   tol: float = 1e-12) -> bool:
    """True iff the slot's update stays local to the requester's neighborhood.

    Messages must go from ``i_t`` to members of J(i_t) about file ``n_t``
    only. When the caches are given, only rows in J(i_t) may change; within
    a changed row the other files may only lose mass, by one common shift
    clipped at 0 (the capacity projection), never gain it.
    """
    nbrs = set(int(j) for j in net.neighbors(req.user))
    for m in messages:
        if m.sender != req.user or m.receiver not in nbrs or m.file != req.file:
            return False
    if before is None or after is None:
        return True
    before, after = np.asarray(before), np.asarray(after)
    for j in np.flatnonzero((after != before).any(axis=1)):
        if int(j) not in nbrs:
            return False
        others = np.arange(before.shape[1]) != req.file
        old, new = before[j, others], after[j, others]
        if np.any(new > old + tol):
            return False
        shifted = old > new + tol
        if np.any(shifted):
            theta = np.max((old - new)[shifted])
            if not np.allclose(new, np.maximum(old - theta, 0.0), atol=1e-9):
                return False
    return True


def run_docp(trace, net: Network, state: DocpState, cost_view=None, message_log: TextIO | None = None,
             snapshots: Iterable[int] = (), audit: bool = False):
    """Run DOCP over a trace.

    ``cost_view(t)`` returns the network for slot ``t`` (dynamic costs);
    ``snapshots`` lists slots whose cache y_t (the one in force while the
    slot is served) is recorded. Returns ``(costs, final_state, snapshots)``.
    """
    snapshots = set(snapshots)
    costs = np.empty(len(trace))
    snaps = {}
    for k, req in enumerate(trace):
        slot_net = cost_view(req.slot) if cost_view is not None else net
        if req.slot in snapshots:
            snaps[req.slot] = state.cache.copy()
        res = docp_step(state, req, slot_net)
        if audit and not locality_audit(res.messages, slot_net, req, state.cache, res.state.cache):
            raise AssertionError(f"locality violated at slot {req.slot}")
        if message_log is not None:
            for m in res.messages:
                message_log.write(m.to_line() + "\n")
        costs[k] = res.cost
        state = res.state
    return costs, state, snaps


def check_state(state: DocpState, net: Network) -> None:
    ok, bad = validate_cache(state.cache, net)
    if not ok:
        raise AssertionError(f"infeasible cache: {bad}")
