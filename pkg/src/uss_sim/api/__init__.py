"""
Operations on instances, environments, policies and simulations.
"""
from .diagnostics import compute_diagnostics, load_instance
from .environments import EnvironmentStream, bsc_enumerate, bsc_sample, load_trace_csv, trace_sample
from .policies import (
    lc_variant_select, make_policy, supervised_select, uss_ucb_select, uss_ucb_update
)
from .bounds import bound_mean_pulls, bound_regret_instance, bound_regret_uniform, bound_report
from .simulator import (
    SimulatorAPI, aggregate, arun_repetitions, run_episode, run_repetitions, verify_wd_empirical,
    xi_sweep,
)

__all__ = [
    "compute_diagnostics", "load_instance",
    "EnvironmentStream", "bsc_enumerate", "bsc_sample", "load_trace_csv", "trace_sample",
    "lc_variant_select", "make_policy", "supervised_select", "uss_ucb_select", "uss_ucb_update",
    "bound_mean_pulls", "bound_regret_instance", "bound_regret_uniform", "bound_report",
    "SimulatorAPI", "aggregate", "arun_repetitions", "run_episode", "run_repetitions", "verify_wd_empirical",
    "xi_sweep",
]
