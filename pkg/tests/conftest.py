"""
Shared test fixtures for uss-sim tests.
"""
import json
import random
from itertools import product

import pytest

from uss_sim.api.diagnostics import compute_diagnostics
from uss_sim.api.environments import bsc_enumerate
from uss_sim.models.environments import BscConfig
from uss_sim.models.instance import CostProfile, JointDistribution
from uss_sim.presets import BSC_CASES


@pytest.fixture
def bsc_config():
    """Default BSC generator: gamma=[0.4, 0.1, 0.05], bias 0.7, perturbation 0.1."""
    return BscConfig()


@pytest.fixture
def bsc_pmf(bsc_config):
    return bsc_enumerate(bsc_config)


@pytest.fixture
def case_costs():
    """Factory for the cumulative-cost profile of a BSC cost case."""
    def _costs(case: int) -> CostProfile:
        return CostProfile(cumulative=BSC_CASES[case])
    return _costs


@pytest.fixture
def case_diag(bsc_pmf, case_costs):
    """Factory for exact diagnostics of a BSC cost case."""
    def _diag(case: int):
        return compute_diagnostics(bsc_pmf, case_costs(case))
    return _diag


@pytest.fixture
def sd_pmf():
    """Three-sensor SD instance without perturbation: p_ij = gamma_i - gamma_j."""
    return bsc_enumerate(BscConfig(perturb_prob=0.0))


@pytest.fixture
def point_mass():
    """All sensors always agree with Y = 1."""
    return JointDistribution(K=3, pmf={(1, 1, 1, 1): 1.0})


@pytest.fixture
def random_pmf():
    """Factory for a random K-sensor pmf supported on a random subset of outcomes."""
    def _random(K: int, rng: random.Random) -> JointDistribution:
        outcomes = list(product((0, 1), repeat=K + 1))
        support = rng.sample(outcomes, rng.randint(1, len(outcomes)))
        weights = [rng.random() + 1e-3 for _ in support]
        total = sum(weights)
        pmf = {o: w / total for o, w in zip(support, weights)}
        # push the rounding residue onto one entry so the masses sum to 1
        first = support[0]
        pmf[first] += 1.0 - sum(pmf.values())
        return JointDistribution(K=K, pmf=pmf)
    return _random


@pytest.fixture
def instance_file(tmp_path):
    """Factory writing an instance JSON file and returning its path."""
    def _write(payload: dict, name: str = "instance.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)
    return _write


@pytest.fixture
def bsc_instance(instance_file):
    """Factory for an instance file that references the default BSC generator."""
    def _write(case: int) -> str:
        return instance_file({
            "K": 3,
            "costs": {"cumulative": BSC_CASES[case]},
            "generator": {"type": "bsc"},
        }, name=f"case{case}.json")
    return _write


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep USS_* variables from the developer's shell out of the tests."""
    for name in ("USS_SEED", "USS_WORKERS", "USS_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
