"""Online caching and routing for BS-assisted D2D networks."""

from .model import BS, Network, Request, Trace, build_network, validate_cache
from .routing import RoutingPlan, optimal_routing, service_cost, subgradient
from .projection import ProjectionResult, project_capped_box
from .docp import DocpState, MultiplierMessage, docp_step, init_state, locality_audit, step_size
from .baselines import ReactiveState, baseline_update, reactive_route
from .hindsight import DemandProfile, aggregate, best_static, brute_force_static
from .workload import CostSchedule, GeneratorSpec, apply_cost_schedule, generate_trace
from .harness import compute_regret, load_config, run_experiment

__version__ = "0.1.0"
