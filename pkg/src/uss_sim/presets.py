"""
Shipped experiment presets and dotted-key override expansion.
"""
import copy
from typing import Any, Dict, List, Mapping, Optional, Tuple

from pydantic import ValidationError

from .models.environments import BscConfig
from .models.instance import CostInput
from .models.policies import PolicySpec, PolicyType
from .models.simulation import ExperimentPreset, RunConfig
from .utils.exceptions import UssError, ErrorType

# Cumulative costs of the five BSC cost cases over gamma = [0.4, 0.1, 0.05]
BSC_CASES: Dict[int, List[float]] = {
    1: [0.0, 0.6, 0.8],
    2: [0.0, 0.15, 0.35],
    3: [0.0, 0.65, 0.9],
    4: [0.2, 0.36, 0.4],
    5: [0.0, 0.11, 0.22],
}

XI_GRID = [-0.05, -0.03, -0.01, 0.0, 0.01, 0.03, 0.05]


def bsc_case(case: int, policy: Optional[PolicySpec] = None, **kwargs: Any) -> RunConfig:
    if case not in BSC_CASES:
        raise UssError(f"unknown BSC case {case} (use 1-5)", error_type=ErrorType.INVALID_ARGUMENT)
    environment = kwargs.pop("environment", BscConfig())
    return RunConfig(
        environment=environment,
        policy=policy or PolicySpec(),
        costs=CostInput(cumulative=BSC_CASES[case]),
        **kwargs,
    )


def _catalogue() -> Dict[str, ExperimentPreset]:
    presets = {}
    for case in BSC_CASES:
        presets[f"bsc-case{case}"] = ExperimentPreset(
            name=f"bsc-case{case}",
            description=f"USS-UCB (alpha=0.51) on BSC cost case {case}",
            template=bsc_case(case),
        )

    presets["lc-ablation"] = ExperimentPreset(
        name="lc-ablation",
        description="Lower-confidence variant vs USS-UCB on case 4 (optimal sensor is the last)",
        template=bsc_case(4, PolicySpec(alpha=1.0), repetitions=50),
        grid=[{"policy.type": PolicyType.USS_LC.value}, {"policy.type": PolicyType.USS_UCB.value}],
    )
    presets["supervised-paired"] = ExperimentPreset(
        name="supervised-paired",
        description="Supervised baseline vs USS-UCB on case 1 with paired seeds",
        template=bsc_case(1, repetitions=50),
        grid=[{"policy.type": PolicyType.USS_UCB.value}, {"policy.type": PolicyType.SUPERVISED.value}],
    )
    presets["alpha-compare"] = ExperimentPreset(
        name="alpha-compare",
        description="USS-UCB on case 1 with alpha in {1.5, 1, 0.51}",
        template=bsc_case(1),
        grid=[{"policy.alpha": a} for a in (1.5, 1.0, 0.51)],
    )
    presets["bsc-case4-swapped"] = ExperimentPreset(
        name="bsc-case4-swapped",
        description="Case 4 with sensors 2 and 3 swapped (error rates not ordered along the cascade)",
        template=bsc_case(4, environment=BscConfig(sensor_order=[1, 3, 2])),
    )
    presets["xi-sweep"] = ExperimentPreset(
        name="xi-sweep",
        description="Mean regret per round as xi crosses 0 (case 2 base, last sensor swept)",
        kind="sweep",
        template=bsc_case(2, repetitions=30),
        xi_grid=list(XI_GRID),
    )
    return presets


PRESETS: Dict[str, ExperimentPreset] = _catalogue()


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise UssError(f"unknown preset '{name}' (available: {', '.join(sorted(PRESETS))})",
                       error_type=ErrorType.CONFIGURATION)


def _set_dotted(data: Dict[str, Any], key: str, value: Any) -> None:
    node = data
    *parents, leaf = key.split(".")
    for part in parents:
        child = node.get(part)
        if not isinstance(child, dict):
            child = {}
            node[part] = child
        node = child
    node[leaf] = value


def apply_overrides(cfg: RunConfig, overrides: Mapping[str, Any]) -> RunConfig:
    """New RunConfig with dotted-key overrides, e.g. {'policy.alpha': 1.0, 'T': 500}."""
    if not overrides:
        return cfg
    data = copy.deepcopy(cfg.model_dump(mode="json", by_alias=True, exclude_none=True))
    for key, value in overrides.items():
        _set_dotted(data, key, value)
    if "costs.cumulative" in overrides:
        data["costs"].pop("per_stage", None)
    if "costs.per_stage" in overrides:
        data["costs"].pop("cumulative", None)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise UssError.from_validation_error(e, error_type=ErrorType.CONFIGURATION)


def expand(preset: ExperimentPreset) -> List[Tuple[str, RunConfig]]:
    """(label, RunConfig) for every grid point of a preset."""
    points = []
    for overrides in preset.grid or [{}]:
        cfg = apply_overrides(preset.template, overrides)
        label = preset.name if len(preset.grid) <= 1 else f"{preset.name}-{cfg.policy.label()}"
        points.append((label, cfg))
    return points
