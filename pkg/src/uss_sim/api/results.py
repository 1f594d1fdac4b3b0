"""
Result files: per-round regret CSV and the JSON run summary.
"""
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import structlog

from ..models.instance import InstanceDiagnostics
from ..models.simulation import (
    AggregateResult, BoundReport, RegretTrace, RunConfig, RunSummary, WdVerdict
)
from ..utils.exceptions import UssError, ErrorType

logger = structlog.get_logger("uss_sim.results")

CSV_COLUMNS = ["rep", "t", "arm", "inst_regret", "cum_regret"]


def recorded_rounds(T: int, stride: int) -> np.ndarray:
    """1-based rounds kept at a given stride; the last round is always kept."""
    rounds = np.arange(1, T + 1, stride)
    if rounds[-1] != T:
        rounds = np.append(rounds, T)
    return rounds


def traces_frame(traces: Sequence[RegretTrace], stride: int = 1) -> pd.DataFrame:
    if stride < 1:
        raise UssError(f"record stride must be >= 1, got {stride}",
                       error_type=ErrorType.INVALID_ARGUMENT)
    frames = []
    for trace in traces:
        rounds = recorded_rounds(trace.T, stride)
        idx = rounds - 1
        frames.append(pd.DataFrame({
            "rep": trace.rep,
            "t": rounds,
            "arm": np.asarray(trace.arms)[idx],
            "inst_regret": np.asarray(trace.inst_regret)[idx],
            "cum_regret": np.asarray(trace.cum_regret)[idx],
        }))
    if not frames:
        return pd.DataFrame(columns=CSV_COLUMNS)
    return pd.concat(frames, ignore_index=True)[CSV_COLUMNS]


def build_summary(
    label: str,
    cfg: RunConfig,
    diag: InstanceDiagnostics,
    agg: AggregateResult,
    bounds: Optional[BoundReport] = None,
    wd_verification: Optional[List[List[WdVerdict]]] = None,
) -> RunSummary:
    config: Dict[str, Any] = cfg.model_dump(mode="json", by_alias=True)
    return RunSummary(
        label=label,
        config=config,
        diagnostics=diag,
        bounds=bounds,
        mean_regret_curve=agg.mean_regret_curve,
        ci_low=agg.ci_low,
        ci_high=agg.ci_high,
        mean_pulls=agg.mean_pulls,
        wd_verification=wd_verification or [],
    )


def write_results(
    out_dir: str,
    traces: Sequence[RegretTrace],
    summary: RunSummary,
    stride: int = 1,
) -> Dict[str, Path]:
    """Write `<label>.csv` and `<label>.json` into out_dir."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{summary.label}.csv"
        json_path = out / f"{summary.label}.json"
        traces_frame(traces, stride).to_csv(csv_path, index=False)
        json_path.write_text(summary.model_dump_json(indent=2))
    except OSError as e:
        raise UssError(f"cannot write results to {out}: {e}", error_type=ErrorType.IO, raw_error=e)
    logger.info("results_written", csv=str(csv_path), json=str(json_path), rows=len(traces))
    return {"csv": csv_path, "json": json_path}
