"""Domain types for a BS-assisted D2D caching network.

Devices are indexed ``0..I-1`` and files ``0..N-1``. The base station is kept
apart from the device-to-device cost matrix: ``link_cost[i, j]`` is the D2D
cost between devices and ``bs_cost[i]`` the cost of fetching from the BS.
Absent links carry the sentinel ``c_max``, which exceeds every BS cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

BS = -1  # source id used for the base station in routing plans


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class Network:
    link_cost: np.ndarray  # (I, I), diagonal 0, c_max where no link
    bs_cost: np.ndarray  # (I,)
    capacities: np.ndarray  # (I,) integer, files per device
    catalog_size: int
    c_max: float
    positions: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        link = np.array(self.link_cost, dtype=float)
        bs = np.array(self.bs_cost, dtype=float).reshape(-1)
        cap = np.array(self.capacities).reshape(-1)
        link.setflags(write=False)
        bs.setflags(write=False)
        object.__setattr__(self, "link_cost", link)
        object.__setattr__(self, "bs_cost", bs)
        object.__setattr__(self, "capacities", cap)
        _check_network(self)
        cap.setflags(write=False)

    @property
    def device_count(self) -> int:
        return len(self.bs_cost)

    @property
    def adjacency(self) -> np.ndarray:
        """Boolean D2D link matrix (diagonal True: a device reaches its own cache)."""
        return self.link_cost < self.c_max

    @property
    def cost_matrix(self) -> np.ndarray:
        """(I+1)x(I+1) cost matrix with the BS at index 0, devices at 1..I."""
        n = self.device_count
        out = np.zeros((n + 1, n + 1))
        out[1:, 1:] = self.link_cost
        out[1:, 0] = self.bs_cost
        out[0, 1:] = self.bs_cost
        return out

    def neighbors(self, i: int) -> np.ndarray:
        """Devices in the neighborhood of ``i``, including ``i`` itself (BS excluded)."""
        return np.flatnonzero(self.adjacency[i])

    def neighborhood_size(self, i: int) -> int:
        """|J(i)|: reachable caches plus the BS."""
        return len(self.neighbors(i)) + 1

    @property
    def max_neighborhood(self) -> int:
        return int(self.adjacency.sum(axis=1).max()) + 1

    @property
    def max_bs_cost(self) -> float:
        return float(self.bs_cost.max())

    @property
    def max_capacity(self) -> int:
        return int(self.capacities.max())

    def with_link_cost(self, link_cost: np.ndarray) -> "Network":
        return Network(link_cost, self.bs_cost, self.capacities, self.catalog_size,
                       self.c_max, self.positions)


def _check_network(net: Network) -> None:
    n = len(net.bs_cost)
    if n == 0:
        raise NetworkError("network needs at least one device")
    if net.catalog_size < 1:
        raise NetworkError("catalog_size must be positive")
    if net.link_cost.shape != (n, n):
        raise NetworkError(f"link_cost shape {net.link_cost.shape} != ({n}, {n})")
    if net.capacities.shape != (n,):
        raise NetworkError("one capacity per device required")
    if np.any(net.capacities < 0) or np.any(net.capacities != np.round(net.capacities)):
        raise NetworkError("capacities must be non-negative integers")
    if np.any(net.capacities >= net.catalog_size):
        raise NetworkError("every capacity must be smaller than the catalog size")
    if np.any(net.link_cost < 0) or np.any(net.bs_cost < 0):
        raise NetworkError("costs must be non-negative")
    if np.any(np.diag(net.link_cost) != 0):
        raise NetworkError("self cost c_ii must be 0")
    if net.c_max <= net.bs_cost.max():
        raise NetworkError("c_max must exceed every BS cost")
    live = net.link_cost < net.c_max
    bad = live & (net.link_cost >= net.bs_cost[:, None])
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise NetworkError(f"link ({i}, {j}) cost {net.link_cost[i, j]} is not below BS cost "
                           f"{net.bs_cost[i]}")


def band_cost(distance: np.ndarray, range_m: float, cost_bands: Sequence[tuple[float, float]],
              c_max: float) -> np.ndarray:
    """Map distances to link costs; ``c_max`` beyond ``range_m``.

    A distance falls in the first band whose upper edge exceeds it; the last
    band also includes its own upper edge.
    """
    uppers = np.array([b[0] for b in cost_bands], dtype=float)
    costs = np.array([b[1] for b in cost_bands], dtype=float)
    d = np.asarray(distance, dtype=float)
    idx = np.searchsorted(uppers, d, side="right")
    idx = np.where((idx == len(uppers)) & (d <= uppers[-1]), len(uppers) - 1, idx)
    in_band = idx < len(uppers)
    out = np.full(d.shape, c_max)
    linked = in_band & (d <= range_m)
    out[linked] = costs[idx[linked]]
    return out


def build_network(positions, range_m: float, cost_bands: Sequence[tuple[float, float]],
                  bs_cost: float, capacities, catalog_size: int,
                  c_max: float | None = None) -> Network:
    """Build a network from device coordinates (meters) and distance cost bands.

    ``cost_bands`` is a list of ``(distance_upper_m, cost)`` sorted by distance.
    Links are symmetric. ``capacities`` may be a scalar applied to every device.
    """
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    if pos.size == 0 or pos.shape[1] != 2:
        raise NetworkError("positions must be a nonempty list of 2-D points")
    if not cost_bands:
        raise NetworkError("at least one cost band required")
    uppers = [b[0] for b in cost_bands]
    if any(b >= a for a, b in zip(uppers[1:], uppers[:-1])):
        raise NetworkError("cost bands must be sorted by strictly increasing distance")
    for upper, cost in cost_bands:
        if cost < 0:
            raise NetworkError(f"negative band cost {cost}")
        if cost >= bs_cost:
            raise NetworkError(f"band cost {cost} must be below the BS cost {bs_cost}")
    if bs_cost < 0:
        raise NetworkError("negative BS cost")
    if c_max is None:
        c_max = 10.0 * bs_cost if bs_cost > 0 else 1.0
    n = len(pos)
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    link = band_cost(dist, range_m, cost_bands, c_max)
    np.fill_diagonal(link, 0.0)
    cap = np.broadcast_to(np.asarray(capacities, dtype=int), (n,)).copy()
    return Network(link, np.full(n, float(bs_cost)), cap, int(catalog_size), float(c_max), pos)


def random_positions(device_count: int, cell_size_m: float, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, cell_size_m, size=(device_count, 2))


@dataclass(frozen=True)
class Request:
    slot: int
    user: int
    file: int


@dataclass(frozen=True)
class Trace:
    """Requests for slots ``1..T`` plus optional per-slot link-cost overrides."""

    requests: tuple[Request, ...]
    cost_schedule: object = None  # workload.CostSchedule, kept untyped to avoid a cycle

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(self.requests))
        for k, r in enumerate(self.requests, start=1):
            if r.slot != k:
                raise ValueError(f"request {k} has slot {r.slot}; slots must run 1..T")

    def __len__(self):
        return len(self.requests)

    def __iter__(self):
        return iter(self.requests)

    def __getitem__(self, k):
        return self.requests[k]

    @classmethod
    def from_pairs(cls, users, files, cost_schedule=None) -> "Trace":
        reqs = tuple(Request(t, int(u), int(f)) for t, (u, f) in enumerate(zip(users, files), 1))
        return cls(reqs, cost_schedule)

    def prefix(self, horizon: int) -> "Trace":
        return Trace(self.requests[:horizon], self.cost_schedule)

    @property
    def users(self) -> np.ndarray:
        return np.array([r.user for r in self.requests], dtype=int)

    @property
    def files(self) -> np.ndarray:
        return np.array([r.file for r in self.requests], dtype=int)


def check_request(req: Request, net: Network) -> None:
    if not 0 <= req.user < net.device_count:
        raise ValueError(f"user {req.user} outside 0..{net.device_count - 1}")
    if not 0 <= req.file < net.catalog_size:
        raise ValueError(f"file {req.file} outside 0..{net.catalog_size - 1}")


def validate_cache(y, net: Network, tol: float = 1e-9) -> tuple[bool, list[tuple[int, str]]]:
    """Check a fractional placement against the box and per-device capacity.

    Returns ``(ok, violations)`` where each violation is ``(device, constraint)``.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (net.device_count, net.catalog_size):
        raise ValueError(f"cache shape {y.shape} != ({net.device_count}, {net.catalog_size})")
    violations = []
    for i in range(net.device_count):
        row = y[i]
        if np.any(row < -tol) or np.any(row > 1 + tol):
            violations.append((i, "box"))
        if row.sum() > net.capacities[i] + tol:
            violations.append((i, "capacity"))
    return not violations, violations


def uniform_cache(net: Network) -> np.ndarray:
    """y^{i,n} = C_i / N for every device and file."""
    return np.repeat((net.capacities / net.catalog_size)[:, None], net.catalog_size, axis=1)


def empty_cache(net: Network) -> np.ndarray:
    return np.zeros((net.device_count, net.catalog_size))
