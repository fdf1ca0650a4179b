"""Euclidean projection onto the capped box {y in [0,1]^N : sum(y) <= C}."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ProjectionResult:
    y: np.ndarray
    theta: float
    saturated_capacity: bool


def clipped_sum(v_sorted: np.ndarray, prefix: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """sum_n clip(v_n - theta, 0, 1) for each theta, given sorted v and its prefix sums."""
    n = len(v_sorted)
    lo = np.searchsorted(v_sorted, theta, side="right")  # v_n > theta from here
    hi = np.searchsorted(v_sorted, theta + 1.0, side="left")  # v_n >= theta + 1 from here
    middle = prefix[hi] - prefix[lo] - (hi - lo) * theta
    return (n - hi) + middle


def project_capped_box(v, capacity: float) -> ProjectionResult:
    """Project ``v`` onto ``{y in [0,1]^N, sum(y) <= capacity}``.

    The solution is ``clip(v - theta, 0, 1)`` with ``theta = 0`` when the box
    clip already fits, otherwise the smallest ``theta > 0`` for which the
    clipped sum equals ``capacity``. ``theta`` is located by scanning the
    sorted breakpoints ``{v_n, v_n - 1}`` in O(N log N).
    """
    v = np.asarray(v, dtype=float)
    if capacity > v.size:
        raise ValueError(f"capacity {capacity} exceeds dimension {v.size}")
    if capacity < 0:
        raise ValueError("capacity must be non-negative")
    y = np.clip(v, 0.0, 1.0)
    if y.sum() <= capacity:
        return ProjectionResult(y, 0.0, False)

    vs = np.sort(v[v > 0.0])  # entries <= 0 stay at 0 for every theta >= 0
    prefix = np.concatenate(([0.0], np.cumsum(vs)))
    bps = np.concatenate((vs, vs - 1.0))
    bps = np.unique(bps[bps > 0.0])
    bps = np.concatenate(([0.0], bps))
    s = clipped_sum(vs, prefix, bps)
    # s is non-increasing in theta; s(0) > capacity and s(max v) = 0 <= capacity
    k = max(int(np.argmax(s <= capacity)), 1)
    t0, t1, s0, s1 = bps[k - 1], bps[k], s[k - 1], s[k]
    theta = t0 + (s0 - capacity) / (s0 - s1) * (t1 - t0) if s0 > s1 else t1
    y = np.clip(v - theta, 0.0, 1.0)
    return ProjectionResult(y, float(theta), True)


def project_rows(y: np.ndarray, capacities) -> np.ndarray:
    """Project each row of ``y`` onto its own capped box."""
    out = np.empty_like(y, dtype=float)
    for i, (row, c) in enumerate(zip(y, capacities)):
        out[i] = project_capped_box(row, c).y
    return out
