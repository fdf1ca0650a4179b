"""Best static cache configuration in hindsight for a completed trace.

The aggregate cost of a trace depends on the requests only through the
per-(user, file) counts, F(y) = sum counts[i, n] * f_(i,n)(y). F is convex
and piecewise linear over the feasible set.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import optimize, sparse

from .model import Network, uniform_cache
from .projection import project_rows
from .routing import batch_costs, greedy_fill, sources


@dataclass(frozen=True)
class DemandProfile:
    counts: dict  # (user, file) -> number of requests

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def scaled(self, factor: int) -> "DemandProfile":
        return DemandProfile({k: v * factor for k, v in self.counts.items()})

    def by_user(self) -> dict:
        """user -> (files array, counts array), files ascending."""
        out = {}
        for (i, n), c in sorted(self.counts.items()):
            out.setdefault(i, ([], []))
            out[i][0].append(n)
            out[i][1].append(c)
        return {i: (np.array(f, dtype=int), np.array(c, dtype=float)) for i, (f, c) in out.items()}


@dataclass(frozen=True)
class HindsightResult:
    y: np.ndarray
    cost: float
    converged: bool
    iterations: int = 0

    @property
    def allocation(self) -> np.ndarray:
        """Total cached fraction per file, summed over devices."""
        return self.y.sum(axis=0)


def aggregate(trace) -> DemandProfile:
    return DemandProfile(dict(Counter((r.user, r.file) for r in trace)))


def aggregate_segments(trace, net: Network, cost_view) -> list:
    """Split a trace with slot-varying costs into ``(network, profile)`` segments.

    Consecutive slots sharing the same cost matrix are pooled, so the
    aggregate cost is a sum over segments of the static form.
    """
    segments = []
    cur_net, cur = None, Counter()
    for r in trace:
        view = cost_view(r.slot)
        if cur_net is None or not np.array_equal(view.link_cost, cur_net.link_cost):
            if cur:
                segments.append((cur_net, DemandProfile(dict(cur))))
            cur_net, cur = view, Counter()
        cur[(r.user, r.file)] += 1
    if cur:
        segments.append((cur_net, DemandProfile(dict(cur))))
    return segments


def _as_segments(profile, net: Network) -> list:
    if isinstance(profile, DemandProfile):
        return [(net, profile)]
    return list(profile)


def total_cost(profile, y: np.ndarray, net: Network) -> float:
    """F(y); ``profile`` is a DemandProfile or a list of ``(network, profile)`` segments."""
    segs = [(n, p.by_user()) for n, p in _as_segments(profile, net)]
    return objective(segs, y)[0]


def objective(segments: list, y: np.ndarray, with_grad: bool = False):
    """F(y) and, optionally, a subgradient built from the routing multipliers.

    ``segments`` holds ``(network, profile.by_user())`` pairs.
    """
    value = 0.0
    grad = np.zeros_like(y) if with_grad else None
    for net, groups in segments:
        for i, (files, counts) in groups.items():
            src, cost, beta = batch_costs(y, net, i, files)
            value += float(counts @ cost)
            if with_grad:
                for k, j in enumerate(src):
                    grad[j, files] -= counts * beta[k]
    return value, grad


def best_static(profile, net: Network, max_iters: int = 20000, tol: float = 1e-9,
                method: str = "lp", y0: np.ndarray | None = None,
                patience: int = 2000) -> HindsightResult:
    """Minimize F over the feasible set.

    ``profile`` is a DemandProfile or a list of ``(network, profile)``
    segments (slot-varying costs). ``method="lp"`` solves the joint
    caching/routing linear program exactly. ``method="subgradient"`` runs
    projected subgradient descent with normalized steps ``a / sqrt(k)`` (``a``
    the set diameter) and keeps the best iterate; it stops once the best value
    has not improved by a relative ``tol`` within ``patience`` iterations, or
    at ``max_iters`` with ``converged=False``.
    """
    segs = _as_segments(profile, net)
    if not any(p.counts for _, p in segs):
        raise ValueError("empty demand profile")
    if method == "lp":
        return best_static_lp(segs, net)
    if method != "subgradient":
        raise ValueError(f"unknown method {method!r}")
    groups = [(n, p.by_user()) for n, p in segs]
    y = uniform_cache(net) if y0 is None else np.array(y0, dtype=float)
    diam = np.sqrt(2.0 * net.capacities.sum()) or 1.0
    best_y, best_val = y.copy(), np.inf
    last_gain = 0
    converged = False
    k = 0
    for k in range(1, max_iters + 1):
        val, g = objective(groups, y, with_grad=True)
        if val < best_val - tol * max(abs(best_val), 1.0):
            last_gain = k
        if val < best_val:
            best_val, best_y = val, y.copy()
        gnorm = np.linalg.norm(g)
        if gnorm == 0.0:
            converged = True
            break
        if k - last_gain > patience:
            converged = True
            break
        y = project_rows(y - (diam / np.sqrt(k)) * g / gnorm, net.capacities)
    return HindsightResult(best_y, float(best_val), converged, k)


def best_static_lp(profile, net: Network) -> HindsightResult:
    """Exact minimizer via the joint caching/routing LP (HiGHS)."""
    I, N = net.device_count, net.catalog_size
    pairs = [(seg_net, key, cnt) for seg_net, p in _as_segments(profile, net)
             for key, cnt in sorted(p.counts.items())]
    n_y = I * N
    cols_cost = [np.zeros(n_y)]
    eq_rows, eq_cols = [], []
    ub_rows, ub_cols, ub_vals = [], [], []
    col = n_y
    ub_row = 0
    for p, (seg_net, (i, n), cnt) in enumerate(pairs):
        src, costs = sources(seg_net, i)
        k = len(src)
        cols_cost.append(cnt * np.append(costs, seg_net.bs_cost[i]))
        eq_rows += [p] * (k + 1)
        eq_cols += list(range(col, col + k + 1))
        for s, j in enumerate(src):
            ub_rows += [ub_row, ub_row]
            ub_cols += [col + s, j * N + n]
            ub_vals += [1.0, -1.0]
            ub_row += 1
        col += k + 1
    for i in range(I):
        ub_rows += [ub_row] * N
        ub_cols += list(range(i * N, (i + 1) * N))
        ub_vals += [1.0] * N
        ub_row += 1
    c = np.concatenate(cols_cost)
    a_eq = sparse.csr_matrix((np.ones(len(eq_rows)), (eq_rows, eq_cols)), shape=(len(pairs), col))
    a_ub = sparse.csr_matrix((ub_vals, (ub_rows, ub_cols)), shape=(ub_row, col))
    b_ub = np.concatenate((np.zeros(ub_row - I), net.capacities.astype(float)))
    res = optimize.linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=np.ones(len(pairs)),
                           bounds=(0.0, 1.0), method="highs")
    if res.status != 0:
        raise RuntimeError(f"hindsight LP failed: {res.message}")
    y = project_rows(res.x[:n_y].reshape(I, N), net.capacities)
    value = total_cost(_as_segments(profile, net), y, net)
    return HindsightResult(y, value, True, int(getattr(res, "nit", 0)))


MAX_BRUTE_DIMS = 6


def _grid_rows(n_files: int, capacity: float, step: float) -> np.ndarray:
    levels = np.round(np.arange(0.0, 1.0 + step / 2, step), 12)
    rows = np.array(list(itertools.product(levels, repeat=n_files)))
    return rows[rows.sum(axis=1) <= capacity + 1e-9]


def brute_force_static(profile: DemandProfile, net: Network, grid_step: float = 0.05,
                       chunk: int = 200_000) -> tuple[np.ndarray, float]:
    """Global minimum of F over the feasible points of a regular grid."""
    I, N = net.device_count, net.catalog_size
    if I * N > MAX_BRUTE_DIMS:
        raise ValueError(f"{I * N} dimensions exceed the brute-force limit {MAX_BRUTE_DIMS}")
    rows = [_grid_rows(N, net.capacities[i], grid_step) for i in range(I)]
    sizes = [len(r) for r in rows]
    total = int(np.prod(sizes))
    pairs = [(i, n, float(c), *sources(net, i)) for (i, n), c in sorted(profile.counts.items())]
    best_val, best_idx = np.inf, 0
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.unravel_index(flat, sizes)
        Y = np.stack([rows[i][idx[i]] for i in range(I)], axis=1)  # (m, I, N)
        F = np.zeros(len(flat))
        for i, n, cnt, src, costs in pairs:
            _, _, _, cost = greedy_fill(costs, Y[:, src, n].T, float(net.bs_cost[i]))
            F += cnt * cost
        k = int(np.argmin(F))
        if F[k] < best_val:
            best_val, best_idx = float(F[k]), int(flat[k])
    idx = np.unravel_index(best_idx, sizes)
    y = np.stack([rows[i][idx[i]] for i in range(I)])
    return y, best_val


def static_slot_costs(trace, y: np.ndarray, net: Network, cost_view=None) -> np.ndarray:
    """f_t(y) for every slot of ``trace`` at a fixed configuration ``y``."""
    from .routing import optimal_routing

    out = np.empty(len(trace))
    for k, req in enumerate(trace):
        slot_net = cost_view(req.slot) if cost_view is not None else net
        out[k] = optimal_routing(req, y, slot_net).cost
    return out
