"""
Closed-form regret and pull-count bounds for USS-UCB.
"""
import math
from typing import List, Literal, Union

import numpy as np
import structlog
from scipy import integrate, special

from ..models.instance import InstanceDiagnostics
from ..models.policies import GrowthFunction
from ..models.simulation import BoundReport, PullBound
from ..utils.exceptions import UssError, ErrorType

logger = structlog.get_logger("uss_sim.bounds")

TAIL_TOLERANCE = 1e-9
_CHUNK = 1_000_000

Growth = Union[str, GrowthFunction]


def _growth(f: Growth) -> GrowthFunction:
    return f if isinstance(f, GrowthFunction) else GrowthFunction(name=f)


def _check_alpha(alpha: float) -> None:
    if not alpha > 0.5:
        raise UssError(f"alpha must be > 0.5, got {alpha}", error_type=ErrorType.INVALID_ARGUMENT)


def _t_log_t_constant(alpha: float) -> float:
    """Sum of ((t+1) ln(t+1))^(-2 alpha): partial sum plus an integral tail estimate.

    The tail over t > N lies between the integrals from N+1 and from N, which
    differ by at most g(N); N is grown until g(N) < TAIL_TOLERANCE.
    """
    s = 2.0 * alpha

    def g(t):
        return ((t + 1.0) * np.log(t + 1.0)) ** (-s)

    N = 1024
    while g(float(N)) >= TAIL_TOLERANCE:
        N *= 2

    partial = 0.0
    for start in range(1, N + 1, _CHUNK):
        t = np.arange(start, min(start + _CHUNK, N + 1), dtype=np.float64)
        partial += float(np.sum(g(t)))

    # u = ln(x+1) turns the tail integrand into u^-s e^{(1-s)u}
    def tail(x0: float) -> float:
        value, _ = integrate.quad(lambda u: u ** (-s) * math.exp((1.0 - s) * u),
                                  math.log(x0 + 1.0), math.inf, limit=200)
        return value

    upper, lower = tail(float(N)), tail(float(N + 1))
    logger.debug("c_constant", f="t_log_t", alpha=alpha, N=N, tail_width=upper - lower)
    return partial + 0.5 * (upper + lower)


def c_constant(alpha: float, f: Growth = "t") -> float:
    """C = sum over t >= 1 of f(t)^(-2 alpha)."""
    _check_alpha(alpha)
    growth = _growth(f)
    if not growth.summable(alpha):
        raise UssError(f"sum of f(t)^(-2 alpha) diverges for f={growth.name}, alpha={alpha}",
                       error_type=ErrorType.INVALID_ARGUMENT)
    if growth.power is not None:
        return float(special.zeta(2.0 * alpha * growth.power, 1))
    return _t_log_t_constant(alpha)


def _above_bound(alpha: float, log_f: float, xi_j: float) -> float:
    return 1.0 + (alpha * log_f + math.sqrt(math.pi * alpha * log_f / 2.0) + 0.5) / xi_j ** 2


def bound_mean_pulls(
    diag: InstanceDiagnostics, alpha: float, f: Growth, T: int
) -> List[PullBound]:
    """Expected pull count bound of every arm after T rounds.

    Arms before i* get C / (2 xi_j^2), arms after i* the log f(T) branch.
    i* itself is reported with the trivial bound T.
    """
    _check_alpha(alpha)
    growth = _growth(f)
    C = c_constant(alpha, growth)
    log_f = max(0.0, growth.log(T))

    bounds = []
    for j in range(1, diag.K + 1):
        xi_j = diag.xi_per_arm[j - 1]
        if j == diag.i_star:
            bounds.append(PullBound(arm=j, branch="optimal", xi_j=0.0, bound=float(T)))
            continue
        branch = "below" if j < diag.i_star else "above"
        if xi_j <= 0.0:
            bounds.append(PullBound(arm=j, branch=branch, xi_j=xi_j, bound=math.inf,
                                    wd_violation=True))
            continue
        value = C / (2.0 * xi_j ** 2) if branch == "below" else _above_bound(alpha, log_f, xi_j)
        bounds.append(PullBound(arm=j, branch=branch, xi_j=xi_j, bound=value))
    return bounds


def bound_regret_instance(
    diag: InstanceDiagnostics, alpha: float, f: Growth, T: int
) -> float:
    """Gap-weighted sum of the per-arm pull bounds."""
    total = []
    for pb in bound_mean_pulls(diag, alpha, f, T):
        if pb.branch == "optimal":
            continue
        gap = diag.delta[pb.arm - 1]
        if gap == 0.0:
            continue
        if math.isinf(pb.bound):
            return math.inf
        total.append(gap * pb.bound)
    return math.fsum(total)


def bound_regret_uniform(
    K: int, alpha: float, f: Growth, T: int, instance_class: Literal["WD", "SD"] = "WD"
) -> float:
    """Problem-independent bound: 3(3 alpha K log f(T))^(1/3) T^(2/3) for WD,
    4(alpha K T log f(T))^(1/2) for SD."""
    _check_alpha(alpha)
    log_f = max(0.0, _growth(f).log(T))
    if instance_class == "WD":
        return 3.0 * (3.0 * alpha * K * log_f) ** (1.0 / 3.0) * T ** (2.0 / 3.0)
    if instance_class == "SD":
        return 4.0 * math.sqrt(alpha * K * T * log_f)
    raise UssError(f"unknown instance class '{instance_class}' (use WD or SD)",
                   error_type=ErrorType.INVALID_ARGUMENT)


def bound_report(diag: InstanceDiagnostics, alpha: float, f: Growth, T: int) -> BoundReport:
    growth = _growth(f)
    pulls = bound_mean_pulls(diag, alpha, growth, T)
    degenerate = growth.log(T) <= 0.0
    if degenerate:
        logger.warning("degenerate_bounds", T=T, f=growth.name)
    return BoundReport(
        T=T,
        alpha=alpha,
        f=growth.name,
        C_constant=c_constant(alpha, growth),
        i_star=diag.i_star,
        mean_pulls=pulls,
        instance_bound=bound_regret_instance(diag, alpha, growth, T),
        uniform_wd=bound_regret_uniform(diag.K, alpha, growth, T, "WD"),
        uniform_sd=bound_regret_uniform(diag.K, alpha, growth, T, "SD"),
        wd_holds=diag.wd_holds,
        sd_holds=diag.sd_holds,
        degenerate=degenerate,
    )
