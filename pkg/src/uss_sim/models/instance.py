import math
from itertools import accumulate
from typing import Dict, List, Optional, Tuple, Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Outcome vectors are (y, y1, ..., yK); sensor indices are 1-based everywhere
# in the public API and 0-based inside lists.
Outcome = Tuple[int, ...]

PMF_TOLERANCE = 1e-12
MAX_ENUMERABLE_K = 20


# Joint distribution over {0,1}^(K+1)
class PmfEntry(BaseModel):
    outcome: List[int] = Field(..., description="Outcome vector [y, y1, ..., yK]")
    p: float = Field(..., ge=0.0, le=1.0, description="Probability mass of the outcome")


class JointDistribution(BaseModel):
    """Exact probability mass over label and sensor outputs."""
    model_config = ConfigDict(frozen=True)

    K: int = Field(..., ge=1, description="Number of sensors")
    pmf: Dict[Outcome, float] = Field(..., description="Outcome vector -> probability")

    @model_validator(mode="after")
    def check_pmf(self) -> "JointDistribution":
        if not self.pmf:
            raise ValueError("pmf must contain at least one outcome")
        for outcome, p in self.pmf.items():
            if len(outcome) != self.K + 1:
                raise ValueError(
                    f"outcome {outcome} has {len(outcome)} coordinates, expected {self.K + 1}"
                )
            if any(v not in (0, 1) for v in outcome):
                raise ValueError(f"outcome {outcome} is not binary")
            if p < 0.0 or p > 1.0 + PMF_TOLERANCE:
                raise ValueError(f"probability {p} of {outcome} outside [0, 1]")
        total = math.fsum(self.pmf.values())
        if abs(total - 1.0) > PMF_TOLERANCE:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        return self

    @classmethod
    def from_entries(cls, K: int, entries: List[PmfEntry]) -> "JointDistribution":
        pmf: Dict[Outcome, float] = {}
        for entry in entries:
            key = tuple(int(v) for v in entry.outcome)
            pmf[key] = pmf.get(key, 0.0) + entry.p
        return cls(K=K, pmf=pmf)

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Outcomes as an (n, K+1) int8 matrix and the matching probability vector."""
        outcomes = np.array(list(self.pmf.keys()), dtype=np.int8).reshape(-1, self.K + 1)
        probs = np.fromiter(self.pmf.values(), dtype=float, count=len(self.pmf))
        return outcomes, probs


# Costs
class CostInput(BaseModel):
    """Cost vector as written in instance and run-config files."""
    per_stage: Optional[List[float]] = Field(None, description="Per-stage costs c_j")
    cumulative: Optional[List[float]] = Field(None, description="Cumulative costs C_j")

    @model_validator(mode="after")
    def exactly_one(self) -> "CostInput":
        if (self.per_stage is None) == (self.cumulative is None):
            raise ValueError("costs must give exactly one of 'per_stage' or 'cumulative'")
        return self


class CostProfile(BaseModel):
    """Per-stage costs, trade-off scalar and the scaled cumulative costs C_j."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    per_stage: List[float] = Field(..., description="Per-stage costs c_j (unscaled)")
    lambda_: float = Field(1.0, gt=0.0, alias="lambda", description="Trade-off scalar")
    cumulative: List[float] = Field(..., description="C_j = lambda * (c_1 + ... + c_j)")

    @model_validator(mode="before")
    @classmethod
    def fill_missing(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        lam = data.get("lambda", data.get("lambda_", 1.0))
        per_stage = data.get("per_stage")
        cumulative = data.get("cumulative")
        if per_stage is None and cumulative is None:
            raise ValueError("either per_stage or cumulative costs are required")
        if per_stage is None:
            raw = [float(c) for c in cumulative]
            for a, b in zip(raw, raw[1:]):
                if b < a:
                    raise ValueError(f"cumulative costs must be nondecreasing, got {raw}")
            data["per_stage"] = [raw[0]] + [b - a for a, b in zip(raw, raw[1:])]
            data["cumulative"] = [lam * c for c in raw]
        elif cumulative is None:
            data["cumulative"] = [lam * c for c in accumulate(float(c) for c in per_stage)]
        return data

    @field_validator("per_stage")
    @classmethod
    def nonnegative(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("at least one sensor cost is required")
        if any(c < 0 for c in v):
            raise ValueError(f"per-stage costs must be nonnegative, got {v}")
        return v

    @model_validator(mode="after")
    def consistent(self) -> "CostProfile":
        if len(self.per_stage) != len(self.cumulative):
            raise ValueError("per_stage and cumulative lengths differ")
        for j, (expected, given) in enumerate(
            zip(accumulate(self.per_stage), self.cumulative), start=1
        ):
            if abs(self.lambda_ * expected - given) > 1e-9:
                raise ValueError(f"C_{j}={given} does not match lambda * sum of c_1..c_{j}")
        for a, b in zip(self.cumulative, self.cumulative[1:]):
            if b < a:
                raise ValueError("cumulative costs must be nondecreasing")
        return self

    @property
    def K(self) -> int:
        return len(self.per_stage)

    @classmethod
    def from_input(cls, costs: CostInput, lambda_: float = 1.0) -> "CostProfile":
        if costs.cumulative is not None:
            return cls(cumulative=costs.cumulative, **{"lambda": lambda_})
        return cls(per_stage=costs.per_stage, **{"lambda": lambda_})


# Diagnostics
class InstanceDiagnostics(BaseModel):
    """Ground-truth quantities derived from a joint distribution and its costs."""
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="strings")

    K: int = Field(..., ge=1)
    cumulative: List[float] = Field(..., description="Scaled cumulative costs C_j")
    gamma: List[float] = Field(..., description="Error rates P{Y != Y^j}")
    disagreement: List[List[float]] = Field(..., description="p_ij = P{Y^i != Y^j}")
    total_cost: List[float] = Field(..., description="c(j, theta) = C_j + gamma_j")
    i_star: int = Field(..., ge=1, description="Optimal sensor (1-based, max-index tie-break)")
    delta: List[float] = Field(..., description="Sub-optimality gaps Delta_j")
    kappa: List[float] = Field(..., description="kappa_j")
    xi_per_arm: List[float] = Field(..., description="xi_j")
    xi: float = Field(..., description="min over j > i* of C_j - C_i* - p_i*j")
    rho: float = Field(..., description="min over j > i* of (C_j - C_i*) / p_i*j")
    sd_holds: bool
    wd_holds: bool

    def p(self, i: int, j: int) -> float:
        """Disagreement probability for 1-based sensor indices."""
        return self.disagreement[i - 1][j - 1]


# Instance files
class InstanceFile(BaseModel):
    """JSON instance description: costs plus an explicit pmf or a generator."""
    model_config = ConfigDict(populate_by_name=True)

    K: int = Field(..., ge=1)
    costs: CostInput
    lambda_: float = Field(1.0, gt=0.0, alias="lambda")
    pmf: Optional[List[PmfEntry]] = None
    generator: Optional[Dict[str, Any]] = Field(
        None, description="Generator reference, e.g. {'type': 'bsc', ...}"
    )

    @model_validator(mode="after")
    def pmf_or_generator(self) -> "InstanceFile":
        if (self.pmf is None) == (self.generator is None):
            raise ValueError("instance must give exactly one of 'pmf' or 'generator'")
        n_costs = len(self.costs.per_stage or self.costs.cumulative or [])
        if n_costs != self.K:
            raise ValueError(f"expected {self.K} costs, got {n_costs}")
        return self

    def cost_profile(self) -> CostProfile:
        return CostProfile.from_input(self.costs, self.lambda_)
