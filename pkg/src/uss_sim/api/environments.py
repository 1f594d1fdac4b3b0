"""
Outcome generators: the nested-uniform BSC cascade and replayed trace files.
"""
from collections import Counter
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import structlog
from pydantic import ValidationError

from ..models.environments import BscConfig, EnvironmentSpec, TraceDataset, TraceSource
from ..models.instance import MAX_ENUMERABLE_K, JointDistribution, Outcome
from ..utils.exceptions import UssError, ErrorType

logger = structlog.get_logger("uss_sim.environments")

Source = Union[BscConfig, TraceDataset]


class EnvironmentStream:
    """Private, reproducible outcome stream of one repetition.

    The generator state is derived from (seed, repetition) through a
    SeedSequence spawn key, so repetitions are independent of each other and
    of the order in which they run.
    """

    def __init__(self, source: Source, seed: int, repetition: int = 0):
        self.source = source
        self.seed = seed
        self.repetition = repetition
        self.rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(repetition,)))

    @property
    def K(self) -> int:
        return self.source.K

    def draw(self) -> Outcome:
        if isinstance(self.source, BscConfig):
            return bsc_sample(self.source, self)
        return trace_sample(self.source, self)

    def take(self, n: int) -> np.ndarray:
        """n consecutive outcomes as an (n, K+1) int8 matrix."""
        if isinstance(self.source, BscConfig):
            return _bsc_batch(self.source, self.rng, n)
        return _trace_batch(self.source, self.rng, n)


# BSC
def _bsc_batch(cfg: BscConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    K = cfg.K
    gamma = np.asarray(cfg.gamma_targets)
    y = (rng.random(n) < cfg.label_bias).astype(np.int8)
    u = rng.random(n)
    # one uniform per round: sensor j errs iff u < gamma_j, so error sets are nested
    errors = u[:, None] < gamma[None, :]
    if K > 1:
        flips = rng.random((n, K - 1)) < cfg.perturb_prob
        first_correct = ~errors[:, 0]
        errors[:, 1:] |= flips & first_correct[:, None]
    sensors = y[:, None] ^ errors.astype(np.int8)
    outcomes = np.column_stack([y, sensors]).astype(np.int8)
    order = cfg.column_order()
    if order is not None:
        outcomes = outcomes[:, order]
    return outcomes


def bsc_sample(cfg: BscConfig, stream: EnvironmentStream) -> Outcome:
    row = _bsc_batch(cfg, stream.rng, 1)[0]
    return tuple(int(v) for v in row)


def bsc_enumerate(cfg: BscConfig) -> JointDistribution:
    """Closed-form pmf of the BSC sampling process."""
    K = cfg.K
    if K > MAX_ENUMERABLE_K:
        raise UssError(f"cannot enumerate K={K} sensors (limit {MAX_ENUMERABLE_K})",
                       error_type=ErrorType.CAPACITY)

    # band m: sensors 1..m wrong, m+1..K correct
    edges = [1.0] + list(cfg.gamma_targets) + [0.0]
    q = cfg.perturb_prob
    order = cfg.column_order()
    pmf: Dict[Outcome, float] = {}

    def add(errors: Tuple[int, ...], weight: float) -> None:
        if weight <= 0.0:
            return
        for y, p_y in ((1, cfg.label_bias), (0, 1.0 - cfg.label_bias)):
            outcome = (y,) + tuple(y ^ e for e in errors)
            if order is not None:
                outcome = tuple(outcome[c] for c in order)
            pmf[outcome] = pmf.get(outcome, 0.0) + weight * p_y

    for m in range(K + 1):
        width = edges[m] - edges[m + 1]
        if width <= 0.0:
            continue
        if m == 0 and K > 1:
            # sensor 1 correct: sensors 2..K flip independently
            for pattern in product((0, 1), repeat=K - 1):
                k = sum(pattern)
                add((0,) + pattern, width * q ** k * (1.0 - q) ** (K - 1 - k))
        else:
            add((1,) * m + (0,) * (K - m), width)

    return JointDistribution(K=K, pmf=pmf)


# Traces
def _trace_batch(ds: TraceDataset, rng: np.random.Generator, n: int) -> np.ndarray:
    rows = ds.as_array()
    return rows[rng.integers(0, len(rows), size=n)]


def trace_sample(ds: TraceDataset, stream: EnvironmentStream) -> Outcome:
    if not ds.rows:
        raise UssError("cannot sample from an empty trace", error_type=ErrorType.INVALID_INPUT)
    return ds.rows[int(stream.rng.integers(0, len(ds.rows)))]


def trace_empirical_pmf(ds: TraceDataset) -> JointDistribution:
    """Pmf with mass proportional to row multiplicity."""
    counts = Counter(ds.rows)
    n = len(ds.rows)
    pmf = {row: float(Fraction(c, n)) for row, c in counts.items()}
    return JointDistribution(K=ds.K, pmf=pmf)


def trace_header(K: int) -> List[str]:
    return ["y"] + [f"y{j}" for j in range(1, K + 1)]


def load_trace_csv(path: str, name: Optional[str] = None) -> TraceDataset:
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise UssError(f"cannot read trace file {path}: {e}",
                       error_type=ErrorType.INVALID_INPUT, raw_error=e)

    K = len(df.columns) - 1
    if K < 1 or list(df.columns) != trace_header(K):
        raise UssError(f"trace header must be {','.join(trace_header(max(K, 1)))}, "
                       f"got {','.join(map(str, df.columns))}",
                       error_type=ErrorType.INVALID_INPUT)
    if df.empty:
        raise UssError(f"trace file {path} has no rows", error_type=ErrorType.INVALID_INPUT)
    values = df.to_numpy()
    if not np.isin(values, (0, 1)).all():
        raise UssError(f"trace file {path} has non-binary cells",
                       error_type=ErrorType.INVALID_INPUT)

    try:
        return TraceDataset(
            name=name or Path(path).stem,
            K=K,
            rows=tuple(tuple(int(v) for v in row) for row in values.tolist()),
        )
    except ValidationError as e:
        raise UssError.from_validation_error(e, error_type=ErrorType.INVALID_INPUT)


def write_trace_csv(outcomes: np.ndarray, path: str) -> None:
    K = outcomes.shape[1] - 1
    pd.DataFrame(outcomes, columns=trace_header(K)).to_csv(path, index=False)


def generate_trace(cfg: BscConfig, n: int) -> np.ndarray:
    """n BSC samples drawn from the config's own seed."""
    return EnvironmentStream(cfg, cfg.seed).take(n)


def build_source(spec: EnvironmentSpec) -> Source:
    if isinstance(spec, TraceSource):
        return load_trace_csv(spec.path, spec.name)
    return spec


def environment_pmf(source: Source) -> JointDistribution:
    """Exact instance behind a source: enumerated BSC or the trace's empirical pmf."""
    if isinstance(source, BscConfig):
        return bsc_enumerate(source)
    return trace_empirical_pmf(source)
