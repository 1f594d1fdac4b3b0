"""
Pydantic domain types for instances, environments, policies and simulation output.
"""

from .instance import (
    JointDistribution, PmfEntry, CostInput, CostProfile, InstanceDiagnostics, InstanceFile
)
from .environments import BscConfig, TraceSource, TraceDataset, EnvironmentSpec
from .policies import GrowthFunction, PolicyType, PolicySpec
from .simulation import (
    RunConfig, RegretTrace, AggregateResult, PullBound, BoundReport,
    WdVerdict, SweepRow, RunSummary, ExperimentPreset
)

__all__ = [
    "JointDistribution", "PmfEntry", "CostInput", "CostProfile", "InstanceDiagnostics",
    "InstanceFile", "BscConfig", "TraceSource", "TraceDataset", "EnvironmentSpec",
    "GrowthFunction", "PolicyType", "PolicySpec", "RunConfig", "RegretTrace",
    "AggregateResult", "PullBound", "BoundReport", "WdVerdict", "SweepRow",
    "RunSummary", "ExperimentPreset",
]
