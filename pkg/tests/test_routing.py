import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from d2dcache.model import BS, Request
from d2dcache.routing import lp_oracle_routing, optimal_routing, service_cost, subgradient

from conftest import line_network, random_cache, random_network


def mixed_case():
    """Requester 0 holds nothing; neighbors at cost 2 and 5 hold 0.4 and 0.3 of file 0."""
    net = line_network([2.0, 5.0])
    y = np.zeros((3, 3))
    y[1, 0], y[2, 0] = 0.4, 0.3
    return net, y, Request(1, 0, 0)


def test_self_hit_is_free():
    net = line_network([2.0, 5.0])
    y = np.zeros((3, 3))
    y[0, 1] = 1.0
    plan = optimal_routing(Request(1, 0, 1), y, net)
    assert plan.cost == 0.0
    assert plan.shares[0] == 1.0
    assert plan.alpha == 0.0
    assert all(b == 0 for b in plan.beta.values())
    assert subgradient(Request(1, 0, 1), y, net) == {}


def test_empty_caches_use_the_bs():
    net = line_network([2.0, 5.0])
    y = np.zeros((3, 3))
    req = Request(1, 0, 2)
    plan = optimal_routing(req, y, net)
    assert plan.shares[BS] == 1.0
    assert plan.cost == service_cost(req, y, net) == 10.0
    # alpha = 10, beta_j = 10 - c_j: requester 10, neighbors 8 and 5
    assert subgradient(req, y, net) == {(0, 2): -10.0, (1, 2): -8.0, (2, 2): -5.0}


def test_mixed_case():
    net, y, req = mixed_case()
    plan = optimal_routing(req, y, net)
    assert plan.shares == pytest.approx({0: 0.0, 1: 0.4, 2: 0.3, BS: 0.3})
    assert plan.cost == pytest.approx(5.3, abs=1e-12)
    assert plan.alpha == 10.0
    assert plan.beta == {0: 10.0, 1: 8.0, 2: 5.0, BS: 0.0}
    g = subgradient(req, y, net)
    assert g[(1, 0)] == -8.0 and g[(2, 0)] == -5.0

    oracle = lp_oracle_routing(req, y, net)
    assert oracle.cost == pytest.approx(plan.cost, abs=1e-9)
    assert oracle.alpha == plan.alpha
    assert oracle.beta == plan.beta


def test_partial_self_then_neighbor():
    net = line_network([2.0, 5.0])
    y = np.zeros((3, 3))
    y[0, 0], y[1, 0], y[2, 0] = 0.5, 0.7, 1.0
    plan = optimal_routing(Request(1, 0, 0), y, net)
    # demand met at the cost-2 neighbor: alpha = 2
    assert plan.shares == pytest.approx({0: 0.5, 1: 0.5, 2: 0.0, BS: 0.0})
    assert plan.cost == pytest.approx(1.0)
    assert plan.alpha == 2.0
    assert plan.beta == {0: 2.0, 1: 0.0, 2: 0.0, BS: 0.0}


def test_degenerate_exact_fill_takes_last_used_source():
    net = line_network([2.0, 5.0])
    y = np.zeros((3, 3))
    y[0, 0], y[1, 0] = 0.5, 0.5
    plan = optimal_routing(Request(1, 0, 0), y, net)
    assert plan.alpha == 2.0
    assert lp_oracle_routing(Request(1, 0, 0), y, net).alpha == 2.0


def test_tie_breaking_does_not_change_cost():
    net = line_network([2.0, 2.0])
    y = np.zeros((3, 3))
    y[1, 0], y[2, 0] = 0.6, 0.6
    plan = optimal_routing(Request(1, 0, 0), y, net)
    assert plan.shares[1] == pytest.approx(0.6) and plan.shares[2] == pytest.approx(0.4)
    assert plan.cost == pytest.approx(2.0)
    flipped = y.copy()
    flipped[[1, 2]] = flipped[[2, 1]]
    assert service_cost(Request(1, 0, 0), flipped, net) == pytest.approx(plan.cost)


def test_oracle_guard():
    net = line_network([2.0] * 12)
    with pytest.raises(ValueError):
        lp_oracle_routing(Request(1, 0, 0), np.zeros((13, 3)), net)


def check_plan(plan, req, y, net, tol=1e-9):
    assert sum(plan.shares.values()) == pytest.approx(1.0, abs=tol)
    cost = sum(s * (net.bs_cost[req.user] if j == BS else net.link_cost[req.user, j])
               for j, s in plan.shares.items())
    assert plan.cost == pytest.approx(cost, abs=tol)
    for j, s in plan.shares.items():
        assert s >= -tol
        if j != BS:
            assert s <= y[j, req.file] + tol
            if plan.beta[j] > 0:
                assert s == pytest.approx(y[j, req.file], abs=tol)
    assert plan.beta[BS] == 0.0


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_greedy_matches_lp_oracle(seed, n_dev):
    rng = np.random.default_rng(seed)
    net = random_network(rng, n_dev)
    y = random_cache(rng, net)
    req = Request(1, int(rng.integers(n_dev)), int(rng.integers(net.catalog_size)))
    plan = optimal_routing(req, y, net)
    oracle = lp_oracle_routing(req, y, net)
    assert abs(plan.cost - oracle.cost) <= 1e-9
    assert plan.alpha == oracle.alpha
    check_plan(plan, req, y, net)
    # strong duality certificate
    dual = plan.alpha - sum(b * y[j, req.file] for j, b in plan.beta.items() if j != BS)
    assert dual == pytest.approx(plan.cost, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_subgradient_inequality_and_convexity(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, int(rng.integers(1, 6)))
    req = Request(1, int(rng.integers(net.device_count)), int(rng.integers(net.catalog_size)))
    y, y2 = random_cache(rng, net), random_cache(rng, net)
    f = service_cost(req, y, net)
    g = subgradient(req, y, net)
    lin = f + sum(v * (y2[k] - y[k]) for k, v in g.items())
    assert service_cost(req, y2, net) >= lin - 1e-9
    lam = rng.uniform()
    mid = service_cost(req, lam * y + (1 - lam) * y2, net)
    assert mid <= lam * f + (1 - lam) * service_cost(req, y2, net) + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_monotone_and_bounded(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, int(rng.integers(1, 6)))
    req = Request(1, int(rng.integers(net.device_count)), int(rng.integers(net.catalog_size)))
    y = random_cache(rng, net)
    plan = optimal_routing(req, y, net)
    c_star = net.max_bs_cost
    assert 0.0 <= plan.cost <= c_star
    assert all(0.0 <= b <= c_star for b in plan.beta.values())
    j = int(rng.choice(net.neighbors(req.user)))
    more = y.copy()
    more[j, req.file] = min(1.0, more[j, req.file] + rng.uniform(0, 1))
    assert service_cost(req, more, net) <= plan.cost + 1e-12
