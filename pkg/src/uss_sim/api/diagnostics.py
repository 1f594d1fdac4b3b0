"""
Ground-truth diagnostics of unsupervised sensor selection instances.

Everything here is computed by exact enumeration of the joint pmf. Sensor
indices in the public API are 1-based; list positions are 0-based.
"""
import json
import math
from pathlib import Path
from typing import List, Sequence, Set, Tuple

import numpy as np
import structlog
from pydantic import ValidationError

from ..models.instance import (
    CostProfile, InstanceDiagnostics, InstanceFile, JointDistribution
)
from ..utils.exceptions import UssError, ErrorType

logger = structlog.get_logger("uss_sim.diagnostics")

TOLERANCE = 1e-12
INF = math.inf


def optimal_sensor(totals: Sequence[float]) -> int:
    """Largest 1-based index attaining the minimum total cost."""
    if len(totals) == 0:
        raise UssError("cannot pick an optimal sensor from an empty cost list",
                       error_type=ErrorType.INVALID_INSTANCE)
    best = min(totals)
    # totals within TOLERANCE of the minimum count as tied
    return max(j for j, c in enumerate(totals, start=1) if c <= best + TOLERANCE)


def error_rates(P: JointDistribution) -> List[float]:
    outcomes, probs = P.arrays()
    wrong = outcomes[:, 1:] != outcomes[:, [0]]
    return [float(v) for v in probs @ wrong]


def disagreement_matrix(P: JointDistribution) -> List[List[float]]:
    outcomes, probs = P.arrays()
    sensors = outcomes[:, 1:]
    p = np.zeros((P.K, P.K))
    for i in range(P.K):
        for j in range(i + 1, P.K):
            p[i, j] = p[j, i] = probs @ (sensors[:, i] != sensors[:, j])
    return p.tolist()


def error_gap_identity(P: JointDistribution, i: int, j: int) -> Tuple[float, float]:
    """Both sides of gamma_i - gamma_j = p_ij - 2 P{Y^i = Y, Y^j != Y}."""
    if i == j:
        raise UssError(f"identity needs two distinct sensors, got i = j = {i}",
                       error_type=ErrorType.INVALID_ARGUMENT)
    for idx in (i, j):
        if not 1 <= idx <= P.K:
            raise UssError(f"sensor {idx} outside [1, {P.K}]",
                           error_type=ErrorType.INVALID_ARGUMENT)

    gamma_i = math.fsum(p for o, p in P.pmf.items() if o[i] != o[0])
    gamma_j = math.fsum(p for o, p in P.pmf.items() if o[j] != o[0])
    p_ij = math.fsum(p for o, p in P.pmf.items() if o[i] != o[j])
    only_i = math.fsum(p for o, p in P.pmf.items() if o[i] == o[0] and o[j] != o[0])
    return gamma_i - gamma_j, p_ij - 2.0 * only_i


def check_sd(P: JointDistribution) -> bool:
    """Once a sensor is correct, every later sensor is correct (on the support)."""
    outcomes, probs = P.arrays()
    support = outcomes[probs > 0]
    correct = support[:, 1:] == support[:, [0]]
    return bool(np.all(correct[:, :-1] <= correct[:, 1:]))


def _wd_terms(
    cumulative: Sequence[float], p: Sequence[Sequence[float]], i_star: int
) -> Tuple[bool, float, float]:
    K = len(cumulative)
    if i_star == K:
        return True, INF, INF
    base = cumulative[i_star - 1]
    rho, xi = INF, INF
    for j in range(i_star + 1, K + 1):
        margin = cumulative[j - 1] - base
        p_ij = p[i_star - 1][j - 1]
        ratio = INF if p_ij == 0.0 else margin / p_ij
        rho = min(rho, ratio)
        xi = min(xi, margin - p_ij)
    return xi > TOLERANCE, rho, xi


def _gap_terms(
    gamma: Sequence[float],
    p: Sequence[Sequence[float]],
    totals: Sequence[float],
    i_star: int,
) -> Tuple[List[float], List[float], List[float]]:
    K = len(gamma)
    s = i_star - 1
    delta, kappa, xi = [0.0] * K, [0.0] * K, [0.0] * K
    for j in range(K):
        if j == s:
            continue
        delta[j] = max(0.0, totals[j] - totals[s])
        if j < s:
            kappa[j] = p[s][j] - (gamma[j] - gamma[s])
            xi[j] = delta[j] + kappa[j]
        else:
            kappa[j] = p[s][j] - (gamma[s] - gamma[j])
            xi[j] = delta[j] - kappa[j]
    return delta, kappa, xi


def compute_diagnostics(P: JointDistribution, costs: CostProfile) -> InstanceDiagnostics:
    if costs.K != P.K:
        raise UssError(f"{costs.K} costs given for a {P.K}-sensor distribution",
                       error_type=ErrorType.INVALID_INSTANCE)
    gamma = error_rates(P)
    p = disagreement_matrix(P)
    totals = [c + g for c, g in zip(costs.cumulative, gamma)]
    i_star = optimal_sensor(totals)
    delta, kappa, xi_per_arm = _gap_terms(gamma, p, totals, i_star)
    wd_holds, rho, xi = _wd_terms(costs.cumulative, p, i_star)

    diag = InstanceDiagnostics(
        K=P.K,
        cumulative=list(costs.cumulative),
        gamma=gamma,
        disagreement=p,
        total_cost=totals,
        i_star=i_star,
        delta=delta,
        kappa=kappa,
        xi_per_arm=xi_per_arm,
        xi=xi,
        rho=rho,
        sd_holds=check_sd(P),
        wd_holds=wd_holds,
    )
    logger.debug("diagnostics", K=P.K, i_star=i_star, xi=xi, sd=diag.sd_holds, wd=wd_holds)
    return diag


def check_wd(diag: InstanceDiagnostics) -> Tuple[bool, float, float]:
    """(wd_holds, rho, xi); an optimal last sensor satisfies WD vacuously."""
    return _wd_terms(diag.cumulative, diag.disagreement, diag.i_star)


def arm_gaps(diag: InstanceDiagnostics) -> Tuple[List[float], List[float], List[float]]:
    """(Delta_j, kappa_j, xi_j) per arm, zero at i*."""
    return _gap_terms(diag.gamma, diag.disagreement, diag.total_cost, diag.i_star)


def check_unknown_order_learnable(diag: InstanceDiagnostics) -> bool:
    """C_j - C_i* stays outside (max{0, gamma_i* - gamma_j}, p_i*j] for all j > i*."""
    s = diag.i_star - 1
    for j in range(s + 1, diag.K):
        margin = diag.cumulative[j] - diag.cumulative[s]
        low = max(0.0, diag.gamma[s] - diag.gamma[j])
        if low < margin <= diag.disagreement[s][j] + TOLERANCE:
            return False
    return True


def earlier_sensors_err_more(diag: InstanceDiagnostics) -> bool:
    """Every sensor before i* has an error rate at least that of i*."""
    s = diag.i_star - 1
    return all(diag.gamma[j] >= diag.gamma[s] - TOLERANCE for j in range(s))


def decision_sets(
    cumulative: Sequence[float],
    lower_bound: Sequence[Sequence[float]],
    upper_bound: Sequence[Sequence[float]],
) -> Tuple[Set[int], Set[int]]:
    """Selection sets (B^l, B^h) for a disagreement proxy.

    B^l uses lower_bound[j][i] for pairs j < i, B^h uses upper_bound[i][j]
    for pairs i < j. With the true p for both this is the exact-oracle pair
    of sets; the policies pass estimates widened by their confidence terms.
    """
    K = len(cumulative)
    b_low = {1}
    b_high = {K}
    for i in range(K):
        if all(cumulative[i] - cumulative[j] <= lower_bound[j][i] for j in range(i)):
            b_low.add(i + 1)
        if all(cumulative[j] - cumulative[i] > upper_bound[i][j] for j in range(i + 1, K)):
            b_high.add(i + 1)
    return b_low, b_high


def select_from_sets(b_low: Set[int], b_high: Set[int], K: int) -> int:
    return min((b_low & b_high) | {K})


def true_decision_set(diag: InstanceDiagnostics) -> Set[int]:
    """B^l intersected with B^h computed from the true disagreement probabilities."""
    b_low, b_high = decision_sets(diag.cumulative, diag.disagreement, diag.disagreement)
    return b_low & b_high


def load_instance(path: str) -> Tuple[JointDistribution, CostProfile]:
    """Read an instance JSON file; generator references are enumerated exactly."""
    from .environments import bsc_enumerate
    from ..models.environments import BscConfig

    try:
        raw = json.loads(Path(path).read_text())
    except OSError as e:
        raise UssError(f"cannot read instance file {path}: {e}",
                       error_type=ErrorType.IO, raw_error=e)
    except json.JSONDecodeError as e:
        raise UssError(f"instance file {path} is not valid JSON: {e}",
                       error_type=ErrorType.INVALID_INSTANCE, raw_error=e)

    try:
        spec = InstanceFile.model_validate(raw)
        costs = spec.cost_profile()
        if spec.pmf is not None:
            P = JointDistribution.from_entries(spec.K, spec.pmf)
        else:
            generator = dict(spec.generator)
            if generator.get("type", "bsc") != "bsc":
                raise UssError(f"unknown generator type '{generator.get('type')}'",
                               error_type=ErrorType.INVALID_INSTANCE)
            P = bsc_enumerate(BscConfig.model_validate(generator))
    except ValidationError as e:
        raise UssError.from_validation_error(e, error_type=ErrorType.INVALID_INSTANCE)

    if P.K != spec.K:
        raise UssError(f"instance declares K={spec.K} but its distribution has K={P.K}",
                       error_type=ErrorType.INVALID_INSTANCE)
    return P, costs
