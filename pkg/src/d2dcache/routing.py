"""Per-request routing: the service cost f_t(y), its dual certificate and subgradient.

For one request the routing LP is a fractional knapsack: fill the demand from
the cheapest reachable caches first (the requester's own cache at cost 0),
and let the BS absorb what is left. The optimal multiplier of the demand
constraint is the cost of the marginal source, and each cache-availability
multiplier is ``beta_j = max(alpha - c_j, 0)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import BS, Network, Request, check_request


@dataclass(frozen=True)
class RoutingPlan:
    shares: dict  # source device (or BS) -> fraction of the file fetched there
    cost: float
    alpha: float
    beta: dict  # source device -> multiplier (BS carries 0)

    @property
    def marginal_cost(self) -> float:
        return self.alpha


def sources(net: Network, user: int) -> tuple[np.ndarray, np.ndarray]:
    """Reachable caches of ``user`` in fill order, with their costs.

    Order is ascending cost; the requester wins ties at its own zero cost,
    remaining ties go to the lower device index.
    """
    nbrs = net.neighbors(user)
    costs = net.link_cost[user, nbrs]
    order = np.lexsort((nbrs, nbrs != user, costs))
    return nbrs[order], costs[order]


def greedy_fill(costs: np.ndarray, avail: np.ndarray, bs_cost: float):
    """Vectorized greedy solution of the routing LP.

    ``costs`` is (k,) sorted ascending, ``avail`` is (k, m): the cached
    fraction at each source for ``m`` independent requests. Returns
    ``(z, z_bs, alpha, cost)`` with ``z`` of shape (k, m).
    """
    avail = np.asarray(avail, dtype=float)
    m = avail.shape[1]
    if len(costs) == 0:
        return avail.copy(), np.ones(m), np.full(m, float(bs_cost)), np.full(m, float(bs_cost))
    cum = np.cumsum(avail, axis=0)
    capped = np.minimum(cum, 1.0)
    z = np.diff(capped, axis=0, prepend=0.0)
    z_bs = 1.0 - capped[-1]
    reached = cum >= 1.0
    hit = reached.any(axis=0)
    marginal = reached.argmax(axis=0)
    alpha = np.where(hit, costs[marginal], bs_cost)
    cost = costs @ z + bs_cost * z_bs
    return z, z_bs, alpha, cost


def optimal_routing(req: Request, y: np.ndarray, net: Network) -> RoutingPlan:
    check_request(req, net)
    src, costs = sources(net, req.user)
    avail = y[src, req.file][:, None]
    bs_cost = float(net.bs_cost[req.user])
    z, z_bs, alpha, cost = greedy_fill(costs, avail, bs_cost)
    a = float(alpha[0])
    shares = {int(j): float(s) for j, s in zip(src, z[:, 0])}
    shares[BS] = float(z_bs[0])
    beta = {int(j): max(a - float(c), 0.0) for j, c in zip(src, costs)}
    beta[BS] = 0.0
    return RoutingPlan(shares, float(cost[0]), a, beta)


def service_cost(req: Request, y: np.ndarray, net: Network) -> float:
    return optimal_routing(req, y, net).cost


def subgradient(req: Request, y: np.ndarray, net: Network) -> dict:
    """Sparse subgradient of f_t at ``y``: ``{(device, file): -beta_j}``.

    Only nonzero multipliers are kept, so a full self-hit yields ``{}``.
    """
    plan = optimal_routing(req, y, net)
    return {(j, req.file): -b for j, b in plan.beta.items() if j != BS and b > 0}


def batch_costs(y: np.ndarray, net: Network, user: int, files: np.ndarray):
    """Service cost and multipliers for ``user`` requesting each of ``files``.

    Returns ``(src, cost, beta)`` with ``beta`` of shape (len(src), len(files)).
    """
    src, costs = sources(net, user)
    _, _, alpha, cost = greedy_fill(costs, y[np.ix_(src, files)], float(net.bs_cost[user]))
    beta = np.maximum(alpha[None, :] - costs[:, None], 0.0)
    return src, cost, beta


# -- test oracle ---------------------------------------------------------------

MAX_ORACLE_SOURCES = 12


def lp_oracle_routing(req: Request, y: np.ndarray, net: Network) -> RoutingPlan:
    """Solve the routing LP by enumerating basic solutions.

    A vertex of ``{sum z = 1, 0 <= z_j <= y_j, 0 <= z_bs <= 1}`` has every
    variable but one at a bound. The dual ``max alpha - sum_j beta_j y_j``
    with ``beta_j >= alpha - c_j``, ``beta >= 0``, ``alpha <= c_bs`` is
    concave piecewise linear in ``alpha`` with kinks at the link costs, so it
    is maximized over those candidates (smallest maximizer kept).
    """
    check_request(req, net)
    src = net.neighbors(req.user)
    if len(src) > MAX_ORACLE_SOURCES:
        raise ValueError(f"{len(src)} sources exceed the oracle limit {MAX_ORACLE_SOURCES}")
    c = np.append(net.link_cost[req.user, src], net.bs_cost[req.user])
    ub = np.append(y[src, req.file], 1.0)
    k = len(c)

    best_val, best_z = np.inf, None
    for basic in range(k):
        others = [v for v in range(k) if v != basic]
        for bounds in itertools.product((0, 1), repeat=k - 1):
            z = np.zeros(k)
            for v, at_upper in zip(others, bounds):
                z[v] = ub[v] if at_upper else 0.0
            z[basic] = 1.0 - z.sum()
            if z[basic] < -1e-12 or z[basic] > ub[basic] + 1e-12:
                continue
            val = float(c @ z)
            if val < best_val - 1e-15:
                best_val, best_z = val, z

    bs_cost = float(net.bs_cost[req.user])
    candidates = sorted(set(float(v) for v in c[:-1] if v <= bs_cost) | {bs_cost})
    dual = [a - sum(max(a - cj, 0.0) * yj for cj, yj in zip(c[:-1], ub[:-1])) for a in candidates]
    top = max(dual)
    alpha = next(a for a, d in zip(candidates, dual) if d >= top - 1e-12)

    shares = {int(j): float(s) for j, s in zip(src, best_z[:-1])}
    shares[BS] = float(best_z[-1])
    beta = {int(j): max(alpha - float(cj), 0.0) for j, cj in zip(src, c[:-1])}
    beta[BS] = 0.0
    return RoutingPlan(shares, best_val, alpha, beta)
