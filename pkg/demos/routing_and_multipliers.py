"""
Routing one request and reading off its multipliers
===================================================

A request is served by filling the cheapest reachable caches first and
letting the base station absorb whatever is left. The price of the last
unit served is alpha; every cache that is cheaper than alpha earns a
multiplier beta = alpha - cost, which is exactly how much one more unit
of that file in that cache would save.
"""

# %%
# A tiny line network: device 0 asks, devices 1 and 2 sit at D2D cost 2 and 5.
import numpy as np

from d2dcache import Network, Request, optimal_routing, service_cost, subgradient

c_max = 100.0
link = np.array([[0.0, 2.0, 5.0],
                 [2.0, 0.0, c_max],
                 [5.0, c_max, 0.0]])
net = Network(link, np.full(3, 10.0), np.full(3, 2), 3, c_max)

y = np.zeros((3, 3))
y[1, 0], y[2, 0] = 0.4, 0.3
req = Request(1, 0, 0)

plan = optimal_routing(req, y, net)
print("shares:", {k: round(v, 3) for k, v in plan.shares.items()})  # -1 is the BS
print("cost  :", plan.cost)      # 0.4*2 + 0.3*5 + 0.3*10 = 5.3
print("alpha :", plan.alpha)
print("beta  :", plan.beta)

# %%
# The multipliers give a subgradient: moving along it can only help, and
# the linear prediction never overshoots the true cost (convexity).
g = subgradient(req, y, net)
rng = np.random.default_rng(0)
for _ in range(5):
    y2 = y.copy()
    y2[:, 0] = rng.uniform(0, 1, 3)
    pred = service_cost(req, y, net) + sum(v * (y2[k] - y[k]) for k, v in g.items())
    print(f"f(y')={service_cost(req, y2, net):6.3f}  linear bound={pred:6.3f}")
