from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DEFAULT_GAMMA = [0.4, 0.1, 0.05]


# Synthetic binary-symmetric-channel cascade
class BscConfig(BaseModel):
    """Nested-uniform BSC generator with optional post-hoc perturbation."""
    model_config = ConfigDict(frozen=True)

    type: Literal["bsc"] = "bsc"
    label_bias: float = Field(0.7, gt=0.0, lt=1.0, description="P{Y = 1}")
    gamma_targets: List[float] = Field(
        default_factory=lambda: list(DEFAULT_GAMMA),
        description="Pre-perturbation error rates, nonincreasing in sensor index",
    )
    perturb_prob: float = Field(
        0.1, ge=0.0, le=1.0,
        description="Flip probability for sensors 2..K when sensor 1 is correct",
    )
    seed: int = Field(0, ge=0, lt=2**64, description="Generator seed")
    sensor_order: Optional[List[int]] = Field(
        None,
        description="Permutation of 1..K: position k of the cascade emits generated sensor sensor_order[k]",
    )

    @field_validator("gamma_targets")
    @classmethod
    def nonincreasing(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("gamma_targets must name at least one sensor")
        if any(g < 0.0 or g >= 1.0 for g in v):
            raise ValueError(f"gamma_targets must lie in [0, 1), got {v}")
        if any(b > a for a, b in zip(v, v[1:])):
            raise ValueError(f"gamma_targets must be nonincreasing, got {v}")
        return v

    @model_validator(mode="after")
    def check_order(self) -> "BscConfig":
        if self.sensor_order is not None:
            if sorted(self.sensor_order) != list(range(1, self.K + 1)):
                raise ValueError(
                    f"sensor_order must be a permutation of 1..{self.K}, got {self.sensor_order}"
                )
        return self

    @property
    def K(self) -> int:
        return len(self.gamma_targets)

    def column_order(self) -> Optional[List[int]]:
        """Column indices (into y, y1..yK) implementing `sensor_order`, or None."""
        if self.sensor_order is None:
            return None
        return [0] + list(self.sensor_order)


# Replayed traces
class TraceSource(BaseModel):
    """Run-config reference to a trace CSV file."""
    model_config = ConfigDict(frozen=True)

    type: Literal["trace"] = "trace"
    path: str = Field(..., description="CSV file with header y,y1,...,yK")
    name: Optional[str] = None


class TraceDataset(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field("trace", description="Dataset label")
    K: int = Field(..., ge=1, description="Number of sensors")
    rows: Tuple[Tuple[int, ...], ...] = Field(..., description="Rows (y, y1, ..., yK)")

    @model_validator(mode="after")
    def check_rows(self) -> "TraceDataset":
        if not self.rows:
            raise ValueError("trace dataset is empty")
        for n, row in enumerate(self.rows):
            if len(row) != self.K + 1:
                raise ValueError(f"row {n} has width {len(row)}, expected {self.K + 1}")
            if any(v not in (0, 1) for v in row):
                raise ValueError(f"row {n} has non-binary entries: {row}")
        return self

    def as_array(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=np.int8)


EnvironmentSpec = Annotated[Union[BscConfig, TraceSource], Field(discriminator="type")]
