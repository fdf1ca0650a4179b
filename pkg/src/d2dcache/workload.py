"""Request traces and slot-varying link costs.

Trace files hold one request per line, ``t,user,file`` (0-based user and
file ids, slots from 1). Cost schedule files hold ``t,i,j,cost`` lines; the
override applies from slot ``t`` on, symmetrically, and the literal ``cmax``
severs the link.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import Network, Request, Trace, band_cost, uniform_cache

KINDS = ("zipf_iid", "shifting_zipf", "adversarial_cyclic", "replay")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str = "zipf_iid"
    horizon: int = 1000
    zipf_exponent: float = 0.9
    user_weights: Sequence[float] | None = None  # uniform when None
    shift_period: int = 1000
    seed: int = 0
    cycle_length: int | None = None  # adversarial_cyclic
    path: str | None = None  # replay

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if self.zipf_exponent < 0:
            raise ValueError("zipf exponent must be non-negative")
        if self.shift_period < 1:
            raise ValueError("shift period must be >= 1")
        if self.horizon < 1 and self.kind != "replay":
            raise ValueError("horizon must be >= 1")
        if self.user_weights is not None:
            w = np.asarray(self.user_weights, dtype=float)
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise ValueError("user weights must be non-negative and sum to 1")
        if self.kind == "replay" and not self.path:
            raise ValueError("replay needs a trace path")


def zipf_pmf(n: int, exponent: float) -> np.ndarray:
    """P(rank k) proportional to 1 / k**exponent, k = 1..n."""
    w = 1.0 / np.arange(1, n + 1) ** exponent
    return w / w.sum()


def generate_trace(spec: GeneratorSpec, net: Network, probe: np.ndarray | None = None) -> Trace:
    """Draw a trace. Users and files use separate streams, so traces for a
    longer horizon extend shorter ones with the same seed.

    ``probe`` is the policy's initial cache, consulted only by
    ``adversarial_cyclic`` (defaults to the uniform allocation).
    """
    if spec.kind == "replay":
        return read_trace(spec.path)
    I, N, T = net.device_count, net.catalog_size, spec.horizon
    user_rng, file_rng, perm_rng = [np.random.default_rng(s)
                                    for s in np.random.SeedSequence(spec.seed).spawn(3)]
    weights = None if spec.user_weights is None else np.asarray(spec.user_weights, dtype=float)
    if weights is not None and len(weights) != I:
        raise ValueError(f"{len(weights)} user weights for {I} devices")

    if spec.kind == "adversarial_cyclic":
        y0 = uniform_cache(net) if probe is None else np.asarray(probe)
        order = np.lexsort((np.arange(N), y0.sum(axis=0)))  # least cached first
        m = spec.cycle_length or min(N, net.max_capacity * net.max_neighborhood + 1)
        m = min(m, N)
        t = np.arange(T)
        users = t % I
        files = order[(t // I) % m]
        return Trace.from_pairs(users, files)

    users = user_rng.choice(I, size=T, p=weights)
    ranks = file_rng.choice(N, size=T, p=zipf_pmf(N, spec.zipf_exponent))
    if spec.kind == "zipf_iid":
        files = ranks
    else:
        files = np.empty(T, dtype=int)
        for start in range(0, T, spec.shift_period):
            perm = perm_rng.permutation(N)
            stop = min(start + spec.shift_period, T)
            files[start:stop] = perm[ranks[start:stop]]
    return Trace.from_pairs(users, files)


def write_trace(trace: Trace, path) -> None:
    lines = [f"{r.slot},{r.user},{r.file}\n" for r in trace]
    Path(path).write_text("".join(lines))


def read_trace(path) -> Trace:
    users, files = [], []
    for k, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}:{k}: expected t,user,file")
        t, u, f = (int(p) for p in parts)
        if t != len(users) + 1:
            raise ValueError(f"{path}:{k}: slot {t} out of sequence")
        users.append(u)
        files.append(f)
    return Trace.from_pairs(users, files)


@dataclass(frozen=True)
class CostSchedule:
    """Link-cost changes over time.

    ``overrides`` are ``(slot, i, j, cost)`` tuples effective from ``slot``
    on (``cost`` may be ``None`` for the ``c_max`` sentinel). ``moves`` are
    ``(slot, positions)`` pairs re-banded with ``range_m`` / ``cost_bands``.
    """

    overrides: tuple = ()
    moves: tuple = ()
    range_m: float | None = None
    cost_bands: tuple = ()
    symmetric: bool = True

    def change_slots(self) -> list:
        return sorted({o[0] for o in self.overrides} | {m[0] for m in self.moves})

    def view_fn(self, net: Network):
        """Callable slot -> Network, with views cached per change point."""
        slots = self.change_slots()
        if not slots:
            return lambda t: net
        views = [net] + [apply_cost_schedule(net, self, s) for s in slots]
        return lambda t: views[bisect.bisect_right(slots, t)]


def apply_cost_schedule(net: Network, schedule: CostSchedule | None, t: int) -> Network:
    """Network whose link costs are those in force at slot ``t``."""
    if schedule is None or (not schedule.overrides and not schedule.moves):
        return net
    link = net.link_cost.copy()
    moves = [m for m in schedule.moves if m[0] <= t]
    if moves:
        if schedule.range_m is None or not schedule.cost_bands:
            raise ValueError("mobility schedule needs range_m and cost_bands")
        pos = np.asarray(max(moves, key=lambda m: m[0])[1], dtype=float)
        if pos.shape != (net.device_count, 2):
            raise ValueError("mobility positions must give one 2-D point per device")
        dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
        link = band_cost(dist, schedule.range_m, schedule.cost_bands, net.c_max)
        np.fill_diagonal(link, 0.0)
    for slot, i, j, cost in sorted(schedule.overrides, key=lambda o: o[0]):
        if slot > t:
            break
        if i == j:
            raise ValueError("cannot override the self cost c_ii")
        c = net.c_max if cost is None or cost >= net.c_max else float(cost)
        if c < net.c_max and (c < 0 or c >= net.bs_cost[i] or c >= net.bs_cost[j]):
            raise ValueError(f"override ({slot},{i},{j},{cost}) is neither a live link cost "
                             f"below the BS cost nor the c_max sentinel")
        link[i, j] = c
        if schedule.symmetric:
            link[j, i] = c
    return net.with_link_cost(link)


def read_cost_schedule(path, **kwargs) -> CostSchedule:
    overrides = []
    for k, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise ValueError(f"{path}:{k}: expected t,i,j,cost")
        cost = None if parts[3].lower() == "cmax" else float(parts[3])
        overrides.append((int(parts[0]), int(parts[1]), int(parts[2]), cost))
    return CostSchedule(tuple(overrides), **kwargs)


def write_cost_schedule(schedule: CostSchedule, path) -> None:
    lines = [f"{t},{i},{j},{'cmax' if c is None else repr(float(c))}\n"
             for t, i, j, c in schedule.overrides]
    Path(path).write_text("".join(lines))


def schedule_params(net: Network, schedule: CostSchedule | None, horizon: int):
    """(C, J*, c*) taken over every cost view in force within the horizon."""
    views = [net]
    if schedule is not None:
        fn = schedule.view_fn(net)
        views += [fn(s) for s in schedule.change_slots() if s <= horizon]
    return (max(v.max_capacity for v in views), max(v.max_neighborhood for v in views),
            max(v.max_bs_cost for v in views))
