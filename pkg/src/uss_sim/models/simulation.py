from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .environments import BscConfig, EnvironmentSpec
from .instance import CostInput, CostProfile, InstanceDiagnostics
from .policies import PolicySpec


# Run configuration
class RunConfig(BaseModel):
    """One simulation run: environment x policy x horizon x repetitions."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    environment: EnvironmentSpec = Field(default_factory=BscConfig)
    policy: PolicySpec = Field(default_factory=PolicySpec)
    costs: CostInput = Field(..., description="Sensor costs (per_stage or cumulative)")
    lambda_: float = Field(1.0, gt=0.0, alias="lambda", description="Trade-off scalar")
    T: int = Field(10_000, ge=1, description="Horizon in rounds")
    repetitions: int = Field(100, ge=1, description="Seeded repetitions")
    base_seed: int = Field(0, ge=0, lt=2**64, description="Root of the per-repetition seeds")
    record_every: Optional[int] = Field(
        None, ge=1, description="Round stride of the results CSV (default: 1 up to 1e4 rounds, else 10)"
    )

    @model_validator(mode="after")
    def costs_match_environment(self) -> "RunConfig":
        n_costs = len(self.costs.per_stage or self.costs.cumulative or [])
        if isinstance(self.environment, BscConfig) and n_costs != self.environment.K:
            raise ValueError(
                f"{n_costs} costs given for a {self.environment.K}-sensor environment"
            )
        if self.policy.arm is not None and self.policy.arm > n_costs:
            raise ValueError(f"policy arm {self.policy.arm} outside [1, {n_costs}]")
        return self

    def cost_profile(self) -> CostProfile:
        return CostProfile.from_input(self.costs, self.lambda_)

    def stride(self) -> int:
        if self.record_every is not None:
            return self.record_every
        return 1 if self.T <= 10_000 else 10


# Per-repetition output
class RegretTrace(BaseModel):
    """Arm sequence and pseudo-regret of a single repetition."""
    model_config = ConfigDict(frozen=True)

    rep: int = Field(..., ge=0)
    arms: List[int] = Field(..., description="I_t for t = 1..T (1-based)")
    inst_regret: List[float] = Field(..., description="c(I_t) - c(i*) per round")
    cum_regret: List[float] = Field(..., description="R_t per round")
    pulls: List[int] = Field(..., description="N_j(T) per arm")
    comparisons: List[List[int]] = Field(..., description="N_ij(T) for i < j (upper triangle)")
    disagreements: List[List[int]] = Field(..., description="D_ij(T) for i < j (upper triangle)")

    @property
    def T(self) -> int:
        return len(self.arms)

    @property
    def final_regret(self) -> float:
        return self.cum_regret[-1]


class AggregateResult(BaseModel):
    """Pointwise mean regret curve with a 95% band across repetitions."""
    model_config = ConfigDict(frozen=True)

    repetitions: int
    mean_regret_curve: List[float]
    ci_low: Optional[List[float]] = None
    ci_high: Optional[List[float]] = None
    band_method: Optional[Literal["normal", "bootstrap"]] = None
    stderr_final: Optional[float] = None
    mean_final_regret: float
    mean_pulls: List[float]


# Bounds
class PullBound(BaseModel):
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="strings")

    arm: int = Field(..., ge=1)
    branch: Literal["below", "above", "optimal"] = Field(
        ..., description="j < i*, j > i*, or j = i* (bound reported as T)"
    )
    xi_j: float
    bound: float
    wd_violation: bool = False


class BoundReport(BaseModel):
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="strings")

    T: int
    alpha: float
    f: str
    C_constant: float = Field(..., description="sum over t >= 1 of f(t)^(-2 alpha)")
    i_star: int
    mean_pulls: List[PullBound]
    instance_bound: float
    uniform_wd: float
    uniform_sd: float
    wd_holds: bool
    sd_holds: bool
    degenerate: bool = Field(False, description="log f(T) = 0 makes the uniform bounds vacuous")


class WdVerdict(BaseModel):
    """Empirical vs ground-truth WD test for one sensor j > i*."""
    model_config = ConfigDict(frozen=True)

    arm: int
    margin: float = Field(..., description="C_j - C_i*")
    comparisons: int
    estimate: Optional[float] = Field(None, description="p-hat_i*j(T); None when never compared")
    empirical: Optional[bool] = Field(None, description="margin > estimate; None = inconclusive")
    truth: bool = Field(..., description="margin > p_i*j")
    coarse: bool = Field(False, description="fewer comparisons than the coarse-estimate threshold")


class SweepRow(BaseModel):
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="strings")

    xi_target: float
    xi: float
    rho: float
    wd_holds: bool
    i_star: int
    cumulative: List[float]
    mean_final_regret: float
    mean_regret_per_round: float
    repetitions: int


class RunSummary(BaseModel):
    """JSON summary written next to the results CSV."""
    model_config = ConfigDict(ser_json_inf_nan="strings")

    label: str
    config: Dict[str, Any]
    diagnostics: InstanceDiagnostics
    bounds: Optional[BoundReport] = None
    mean_regret_curve: List[float]
    ci_low: Optional[List[float]] = None
    ci_high: Optional[List[float]] = None
    mean_pulls: List[float]
    wd_verification: List[List[WdVerdict]] = Field(default_factory=list)


# Presets
class ExperimentPreset(BaseModel):
    """Named run template plus a grid of overrides."""
    model_config = ConfigDict(frozen=True)

    name: str
    description: str
    kind: Literal["run", "sweep"] = "run"
    template: RunConfig
    grid: List[Dict[str, Any]] = Field(
        default_factory=lambda: [{}],
        description="Each entry is a dotted-key override set, e.g. {'policy.alpha': 1.0}",
    )
    xi_grid: Optional[List[float]] = None
