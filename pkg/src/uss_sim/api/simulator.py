"""
Learner/environment interaction loop, seeded repetitions and experiment drivers.
"""
import asyncio
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy import stats

from .diagnostics import TOLERANCE, compute_diagnostics
from .environments import EnvironmentStream, Source, build_source, environment_pmf
from .policies import PairStats, make_policy
from ..models.instance import CostInput, CostProfile, InstanceDiagnostics, JointDistribution
from ..models.simulation import AggregateResult, RegretTrace, RunConfig, SweepRow, WdVerdict
from ..utils.exceptions import UssError, ErrorType

logger = structlog.get_logger("uss_sim.simulator")

NORMAL_BAND_MIN_REPS = 30
BOOTSTRAP_RESAMPLES = 1000
COARSE_SAMPLES = 30
# rounds per bootstrap slice; bounds the resample matrix at BOOTSTRAP_RESAMPLES x BOOTSTRAP_CHUNK
BOOTSTRAP_CHUNK = 1024


def resolve_instance(cfg: RunConfig) -> Tuple[Source, JointDistribution, InstanceDiagnostics]:
    """Materialize the environment and compute the ground truth that scores it."""
    source = build_source(cfg.environment)
    try:
        P = environment_pmf(source)
    except UssError as e:
        if e.error_type is ErrorType.CAPACITY:
            raise UssError(f"environment is not enumerable and no diagnostics were given: {e.message}",
                           error_type=ErrorType.CONFIGURATION, raw_error=e)
        raise
    return source, P, compute_diagnostics(P, cfg.cost_profile())


def run_episode(
    cfg: RunConfig,
    repetition: int,
    source: Optional[Source] = None,
    diag: Optional[InstanceDiagnostics] = None,
) -> RegretTrace:
    """One seeded repetition of T rounds.

    The policy only ever sees Y^1..Y^{I_t}; the label is handed over only to
    policies that ask for it. Pair counters are kept here as well so every
    policy's run can be checked against the ground truth afterwards.
    """
    if source is None or diag is None:
        source, _, diag = resolve_instance(cfg)
    K = diag.K
    if source.K != K:
        raise UssError(f"environment has {source.K} sensors but diagnostics describe {K}",
                       error_type=ErrorType.CONFIGURATION)

    outcomes = EnvironmentStream(source, cfg.base_seed, repetition).take(cfg.T)
    policy = make_policy(cfg.policy, diag)
    tracker = PairStats(K)
    gaps = list(diag.delta)
    pulls = [0] * K
    arms: List[int] = []
    inst_regret: List[float] = []
    cum_regret: List[float] = []

    for row in outcomes.tolist():
        arm = policy.select()
        if not 1 <= arm <= K:
            raise UssError(f"policy {policy.name} selected arm {arm} outside [1, {K}]",
                           error_type=ErrorType.INVARIANT)
        prefix = row[1:arm + 1]
        policy.update(prefix, row[0] if policy.needs_label else None)
        tracker.observe(prefix)

        pulls[arm - 1] += 1
        arms.append(arm)
        inst_regret.append(gaps[arm - 1])
        # R_t regrouped as sum_j N_j(t) Delta_j
        cum_regret.append(math.fsum(n * g for n, g in zip(pulls, gaps)))

    comparisons, disagreements = tracker.snapshot()
    return RegretTrace(
        rep=repetition,
        arms=arms,
        inst_regret=inst_regret,
        cum_regret=cum_regret,
        pulls=pulls,
        comparisons=comparisons,
        disagreements=disagreements,
    )


def run_repetitions(
    cfg: RunConfig,
    workers: int = 1,
    source: Optional[Source] = None,
    diag: Optional[InstanceDiagnostics] = None,
) -> List[RegretTrace]:
    """All repetitions of a config, in repetition order regardless of `workers`."""
    if source is None or diag is None:
        source, _, diag = resolve_instance(cfg)
    episode = partial(run_episode, cfg, source=source, diag=diag)
    reps = range(cfg.repetitions)
    logger.info("run_start", policy=cfg.policy.label(), T=cfg.T, reps=cfg.repetitions, workers=workers)

    if workers <= 1:
        traces = [episode(rep) for rep in reps]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(episode, reps))

    logger.info("run_complete", policy=cfg.policy.label(),
                mean_final_regret=float(np.mean([t.final_regret for t in traces])))
    return traces


async def arun_repetitions(
    cfg: RunConfig,
    workers: int = 2,
    source: Optional[Source] = None,
    diag: Optional[InstanceDiagnostics] = None,
) -> List[RegretTrace]:
    """Async variant of `run_repetitions` backed by a process pool."""
    if source is None or diag is None:
        source, _, diag = resolve_instance(cfg)
    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [
            loop.run_in_executor(pool, partial(run_episode, cfg, rep, source, diag))
            for rep in range(cfg.repetitions)
        ]
        return list(await asyncio.gather(*futures))


def aggregate(traces: Sequence[RegretTrace], seed: int = 0) -> AggregateResult:
    """Pointwise mean cumulative regret with a 95% band.

    Normal approximation from NORMAL_BAND_MIN_REPS repetitions on, seeded
    percentile bootstrap below that; a single trace yields the mean only.
    """
    if not traces:
        raise UssError("cannot aggregate zero traces", error_type=ErrorType.INVALID_ARGUMENT)
    lengths = {t.T for t in traces}
    if len(lengths) != 1:
        raise UssError(f"traces have different horizons {sorted(lengths)}",
                       error_type=ErrorType.INVALID_ARGUMENT)

    curves = np.asarray([t.cum_regret for t in traces], dtype=np.float64)
    R = curves.shape[0]
    mean = curves.mean(axis=0)
    mean_pulls = np.asarray([t.pulls for t in traces], dtype=np.float64).mean(axis=0)

    result = dict(
        repetitions=R,
        mean_regret_curve=mean.tolist(),
        mean_final_regret=float(mean[-1]),
        mean_pulls=mean_pulls.tolist(),
    )
    if R < 2:
        logger.warning("band_undefined", repetitions=R)
        return AggregateResult(**result)

    stderr = curves.std(axis=0, ddof=1) / math.sqrt(R)
    if R >= NORMAL_BAND_MIN_REPS:
        z = stats.norm.ppf(0.975)
        low, high, method = mean - z * stderr, mean + z * stderr, "normal"
    else:
        low, high = _bootstrap_band(curves, seed)
        method = "bootstrap"

    return AggregateResult(
        **result,
        ci_low=low.tolist(),
        ci_high=high.tolist(),
        band_method=method,
        stderr_final=float(stderr[-1]),
    )


def _bootstrap_band(curves: np.ndarray, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Percentile band from one set of resampling weights applied slice by slice."""
    R, T = curves.shape
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(R, np.full(R, 1.0 / R), size=BOOTSTRAP_RESAMPLES)
    lows, highs = [], []
    for start in range(0, T, BOOTSTRAP_CHUNK):
        resampled = counts @ curves[:, start:start + BOOTSTRAP_CHUNK] / R
        low, high = np.percentile(resampled, [2.5, 97.5], axis=0)
        lows.append(low)
        highs.append(high)
    return np.concatenate(lows), np.concatenate(highs)


def verify_wd_empirical(
    trace: RegretTrace,
    diag: InstanceDiagnostics,
    at_T: Optional[int] = None,
    min_samples: int = COARSE_SAMPLES,
) -> List[WdVerdict]:
    """End-of-run check of C_j - C_i* > p-hat_i*j(T) for every j > i*."""
    if at_T is not None and at_T != trace.T:
        raise UssError(f"pair counters are only kept at the end of the run (T={trace.T}), got {at_T}",
                       error_type=ErrorType.INVALID_ARGUMENT)
    s = diag.i_star - 1
    verdicts = []
    for j in range(s + 1, diag.K):
        margin = diag.cumulative[j] - diag.cumulative[s]
        n = trace.comparisons[s][j]
        truth = margin - diag.disagreement[s][j] > TOLERANCE
        if n == 0:
            verdicts.append(WdVerdict(arm=j + 1, margin=margin, comparisons=0, truth=truth))
            continue
        estimate = trace.disagreements[s][j] / n
        verdicts.append(WdVerdict(
            arm=j + 1,
            margin=margin,
            comparisons=n,
            estimate=estimate,
            empirical=margin > estimate,
            truth=truth,
            coarse=n < min_samples,
        ))
    return verdicts


def sweep_arm(diag: InstanceDiagnostics) -> int:
    """Sensor after i* whose margin over p_i*j attains xi."""
    s = diag.i_star - 1
    if diag.i_star == diag.K:
        raise UssError("no sensor after i* to sweep: WD holds vacuously",
                       error_type=ErrorType.CONFIGURATION)
    return min(range(s + 1, diag.K),
               key=lambda j: diag.cumulative[j] - diag.cumulative[s] - diag.disagreement[s][j]) + 1


def xi_schedule(diag: InstanceDiagnostics, xi: float, arm: int) -> Optional[List[float]]:
    """Cumulative costs with C_arm = C_i* + p_i*,arm + xi; later costs shift along.

    Returns None when the shifted profile would no longer be nondecreasing.
    """
    s = diag.i_star - 1
    if not diag.i_star < arm <= diag.K:
        raise UssError(f"sweep arm {arm} must lie in ({diag.i_star}, {diag.K}]",
                       error_type=ErrorType.INVALID_ARGUMENT)
    costs = list(diag.cumulative)
    target = costs[s] + diag.disagreement[s][arm - 1] + xi
    shift = target - costs[arm - 1]
    for k in range(arm - 1, diag.K):
        costs[k] += shift
    if any(b < a for a, b in zip(costs, costs[1:])) or costs[0] < 0.0:
        return None
    return costs


def xi_sweep(
    cfg: RunConfig,
    xi_grid: Sequence[float],
    repetitions: Optional[int] = None,
    arm: Optional[int] = None,
    workers: int = 1,
) -> List[SweepRow]:
    """Final mean regret along a cost schedule that moves xi across zero."""
    source, P, base = resolve_instance(cfg)
    arm = arm or sweep_arm(base)
    reps = repetitions or cfg.repetitions
    rows = []

    for xi_target in sorted(xi_grid):
        costs = xi_schedule(base, xi_target, arm)
        if costs is None:
            logger.warning("sweep_point_skipped", xi=xi_target, reason="costs not nondecreasing")
            continue
        point = cfg.model_copy(update={
            "costs": CostInput(cumulative=costs), "lambda_": 1.0, "repetitions": reps,
        })
        diag = compute_diagnostics(P, CostProfile(cumulative=costs, **{"lambda": 1.0}))
        if diag.i_star != base.i_star:
            if xi_target > 0.0:
                raise UssError(
                    f"xi={xi_target} moves the optimal sensor from {base.i_star} to {diag.i_star}",
                    error_type=ErrorType.CONFIGURATION,
                )
            logger.warning("sweep_point_skipped", xi=xi_target, reason="optimal sensor changed")
            continue

        traces = run_repetitions(point, workers=workers, source=source, diag=diag)
        mean_final = float(np.mean([t.final_regret for t in traces]))
        rows.append(SweepRow(
            xi_target=xi_target,
            xi=diag.xi,
            rho=diag.rho,
            wd_holds=diag.wd_holds,
            i_star=diag.i_star,
            cumulative=costs,
            mean_final_regret=mean_final,
            mean_regret_per_round=mean_final / cfg.T,
            repetitions=reps,
        ))
        logger.info("sweep_point", xi=diag.xi, wd=diag.wd_holds, regret_per_round=mean_final / cfg.T)
    return rows


class SimulatorAPI:
    """Experiment runs bound to one worker count."""

    def __init__(self, workers: int = 1):
        if workers < 1:
            raise UssError(f"workers must be at least 1, got {workers}",
                           error_type=ErrorType.INVALID_ARGUMENT)
        self.workers = workers

    def run(self, cfg: RunConfig) -> Tuple[InstanceDiagnostics, List[RegretTrace]]:
        source, _, diag = resolve_instance(cfg)
        return diag, run_repetitions(cfg, workers=self.workers, source=source, diag=diag)

    async def arun(self, cfg: RunConfig) -> Tuple[InstanceDiagnostics, List[RegretTrace]]:
        source, _, diag = resolve_instance(cfg)
        traces = await arun_repetitions(cfg, workers=self.workers, source=source, diag=diag)
        return diag, traces

    def summarize(self, cfg: RunConfig, traces: Sequence[RegretTrace]) -> AggregateResult:
        return aggregate(traces, seed=cfg.base_seed)

    def sweep(
        self,
        cfg: RunConfig,
        xi_grid: Sequence[float],
        arm: Optional[int] = None,
        repetitions: Optional[int] = None,
    ) -> List[SweepRow]:
        return xi_sweep(cfg, xi_grid, repetitions=repetitions, arm=arm, workers=self.workers)
