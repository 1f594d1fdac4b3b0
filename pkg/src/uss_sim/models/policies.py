import math
import re
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

_POWER = re.compile(r"^t\^(\d+(?:\.\d+)?)$")


class GrowthFunction(BaseModel):
    """Confidence growth f(t) used in Psi = sqrt(alpha log f(t) / N).

    Supported names: ``t``, ``t^a`` (a > 0) and ``t_log_t`` = (t+1) ln(t+1).
    """
    model_config = ConfigDict(frozen=True)

    name: str = Field("t", description="Growth function identifier")

    @field_validator("name")
    @classmethod
    def known(cls, v: str) -> str:
        v = v.strip()
        if v in ("t", "t_log_t"):
            return v
        match = _POWER.match(v)
        if match and float(match.group(1)) > 0:
            return v
        raise ValueError(f"unknown growth function '{v}' (use 't', 't^a' or 't_log_t')")

    @property
    def power(self) -> Optional[float]:
        """Exponent a when f(t) = t^a, else None."""
        if self.name == "t":
            return 1.0
        match = _POWER.match(self.name)
        return float(match.group(1)) if match else None

    def __call__(self, t: float) -> float:
        if self.name == "t_log_t":
            return (t + 1.0) * math.log(t + 1.0)
        return t ** self.power

    def log(self, t: float) -> float:
        if self.name == "t_log_t":
            return math.log(t + 1.0) + math.log(math.log(t + 1.0))
        return self.power * math.log(t)

    def summable(self, alpha: float) -> bool:
        """Whether sum over t of f(t)^(-2 alpha) is finite."""
        if self.name == "t_log_t":
            return 2.0 * alpha >= 1.0
        return 2.0 * alpha * self.power > 1.0


class PolicyType(str, Enum):
    USS_UCB = "uss_ucb"
    USS_LC = "uss_lc"
    SUPERVISED = "supervised"
    FIXED = "fixed"
    ORACLE = "oracle"


class PolicySpec(BaseModel):
    """Policy section of a run configuration."""
    model_config = ConfigDict(frozen=True, use_enum_values=False)

    type: PolicyType = Field(PolicyType.USS_UCB, description="Selection policy")
    alpha: float = Field(0.51, description="Exploration factor, must exceed 0.5")
    f: str = Field("t", description="Growth function identifier")
    arm: Optional[int] = Field(None, ge=1, description="Arm for the fixed policy")

    @field_validator("alpha")
    @classmethod
    def alpha_above_half(cls, v: float) -> float:
        if not v > 0.5:
            raise ValueError(f"alpha must be > 0.5, got {v}")
        return v

    @model_validator(mode="after")
    def check_policy(self) -> "PolicySpec":
        growth = GrowthFunction(name=self.f)
        if not growth.summable(self.alpha):
            raise ValueError(
                f"sum of f(t)^(-2 alpha) diverges for f={self.f}, alpha={self.alpha}"
            )
        if self.type is PolicyType.FIXED and self.arm is None:
            raise ValueError("fixed policy requires 'arm'")
        return self

    def growth(self) -> GrowthFunction:
        return GrowthFunction(name=self.f)

    def label(self) -> str:
        if self.type is PolicyType.FIXED:
            return f"fixed-{self.arm}"
        if self.type is PolicyType.ORACLE:
            return "oracle"
        return f"{self.type.value}-a{self.alpha:g}"

