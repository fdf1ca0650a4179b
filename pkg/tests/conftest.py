import numpy as np
import pytest

from d2dcache.model import Network, build_network, random_positions
from d2dcache.projection import project_capped_box

CELL_BANDS = [(100, 2), (300, 5), (400, 7), (500, 9)]


def line_network(costs, bs_cost=10.0, capacity=2, catalog=3):
    """Device 0 is the requester; device k (k >= 1) sits at D2D cost ``costs[k-1]``.

    Other device pairs are unlinked.
    """
    n = len(costs) + 1
    c_max = 100.0
    link = np.full((n, n), c_max)
    np.fill_diagonal(link, 0.0)
    for k, c in enumerate(costs, start=1):
        link[0, k] = link[k, 0] = c
    return Network(link, np.full(n, bs_cost), np.full(n, capacity), catalog, c_max)


def random_network(rng, n_devices, catalog=4, max_cap=None, link_prob=0.7, bs_cost=10.0):
    c_max = 100.0
    link = np.full((n_devices, n_devices), c_max)
    np.fill_diagonal(link, 0.0)
    for i in range(n_devices):
        for j in range(i + 1, n_devices):
            if rng.random() < link_prob:
                link[i, j] = link[j, i] = float(rng.choice([0.0, 1.0, 2.0, 2.0, 5.0, 7.0, 9.0, 9.5]))
    cap_hi = catalog - 1 if max_cap is None else max_cap
    caps = rng.integers(0, cap_hi + 1, size=n_devices)
    return Network(link, np.full(n_devices, bs_cost), caps, catalog, c_max)


def random_cache(rng, net, sparse=0.3):
    y = rng.uniform(0, 1, size=(net.device_count, net.catalog_size))
    y[rng.random(y.shape) < sparse] = 0.0
    y[rng.random(y.shape) < sparse / 2] = 1.0
    return np.stack([project_capped_box(row, c).y for row, c in zip(y, net.capacities)])


def cell_network(seed):
    rng = np.random.default_rng(seed)
    return build_network(random_positions(8, 1500, rng), 500, CELL_BANDS, 10, 6, 100)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
