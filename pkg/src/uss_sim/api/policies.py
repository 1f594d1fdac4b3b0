"""
Online sensor-selection policies over the cascade.

`UssUcbState` carries the pair counters of USS-UCB; `uss_ucb_select`,
`lc_variant_select` and `uss_ucb_update` operate on it. The supervised
baseline keeps per-sensor error counters in `SupervisedState` instead.
The `Policy` classes wrap these states behind one select/update interface
for the simulator.
"""
import math
from abc import ABC, abstractmethod
from typing import List, Optional, Sequence

import structlog

from .diagnostics import decision_sets, select_from_sets
from ..models.instance import InstanceDiagnostics
from ..models.policies import GrowthFunction, PolicySpec, PolicyType
from ..utils.exceptions import UssError, ErrorType

logger = structlog.get_logger("uss_sim.policies")


class PairStats:
    """Comparison counts N_ij and disagreement counts D_ij for pairs i < j.

    Only the upper triangle is stored; queries with i > j are swapped.
    """

    def __init__(self, K: int):
        self.K = K
        self.N: List[List[int]] = [[0] * K for _ in range(K)]
        self.D: List[List[int]] = [[0] * K for _ in range(K)]

    @staticmethod
    def _ordered(i: int, j: int) -> tuple:
        if i == j:
            raise UssError(f"pair statistics need two distinct sensors, got {i}",
                           error_type=ErrorType.INVALID_ARGUMENT)
        return (i - 1, j - 1) if i < j else (j - 1, i - 1)

    def comparisons(self, i: int, j: int) -> int:
        a, b = self._ordered(i, j)
        return self.N[a][b]

    def disagreements(self, i: int, j: int) -> int:
        a, b = self._ordered(i, j)
        return self.D[a][b]

    def p_hat(self, i: int, j: int) -> float:
        a, b = self._ordered(i, j)
        if self.N[a][b] == 0:
            raise UssError(f"pair ({a + 1}, {b + 1}) has never been compared",
                           error_type=ErrorType.INVARIANT)
        return self.D[a][b] / self.N[a][b]

    def observe(self, prefix: Sequence[int]) -> None:
        """Count every pair inside the observed prefix Y^1..Y^m."""
        m = len(prefix)
        for a in range(m):
            for b in range(a + 1, m):
                self.N[a][b] += 1
                if prefix[a] != prefix[b]:
                    self.D[a][b] += 1

    def snapshot(self) -> tuple:
        return [row[:] for row in self.N], [row[:] for row in self.D]


class UssUcbState:
    """Mutable USS-UCB state of a single repetition."""

    def __init__(
        self,
        cumulative_costs: Sequence[float],
        alpha: float = 0.51,
        f: Optional[GrowthFunction] = None,
    ):
        if not alpha > 0.5:
            raise UssError(f"alpha must be > 0.5, got {alpha}",
                           error_type=ErrorType.INVALID_ARGUMENT)
        self.cumulative_costs = list(cumulative_costs)
        self.K = len(self.cumulative_costs)
        self.alpha = alpha
        self.f = f or GrowthFunction()
        self.pair_stats = PairStats(self.K)
        self.t = 1
        self.last_selected: Optional[int] = None

    def p_hat(self, i: int, j: int) -> float:
        return self.pair_stats.p_hat(i, j)

    def psi(self, i: int, j: int, t: Optional[int] = None) -> float:
        """sqrt(alpha log f(t) / N_ij(t-1)); `t` defaults to the current round."""
        n = self.pair_stats.comparisons(i, j)
        if n == 0:
            raise UssError(f"confidence term for ({i}, {j}) needs at least one comparison",
                           error_type=ErrorType.INVARIANT)
        log_f = self.f.log(self.t if t is None else t)
        return math.sqrt(max(0.0, self.alpha * log_f) / n)


def _confidence_bounds(state: UssUcbState, sign_high: float) -> tuple:
    K = state.K
    stats = state.pair_stats
    log_f = max(0.0, state.f.log(state.t))
    lower = [[0.0] * K for _ in range(K)]
    upper = [[0.0] * K for _ in range(K)]
    for a in range(K):
        for b in range(a + 1, K):
            n = stats.N[a][b]
            if n == 0:
                raise UssError(f"pair ({a + 1}, {b + 1}) was never compared before round {state.t}",
                               error_type=ErrorType.INVARIANT)
            p_hat = stats.D[a][b] / n
            psi = math.sqrt(state.alpha * log_f / n)
            lower[a][b] = p_hat + psi
            upper[a][b] = p_hat + sign_high * psi
    return lower, upper


def _select(state: UssUcbState, sign_high: float) -> int:
    if state.t == 1 or state.K == 1:
        chosen = state.K
    else:
        lower, upper = _confidence_bounds(state, sign_high)
        b_low, b_high = decision_sets(state.cumulative_costs, lower, upper)
        chosen = select_from_sets(b_low, b_high, state.K)
    state.last_selected = chosen
    return chosen


def uss_ucb_select(state: UssUcbState) -> int:
    """I_t = min of (B^l ∩ B^h) ∪ {K} with upper confidence in both sets; K in round 1."""
    return _select(state, +1.0)


def lc_variant_select(state: UssUcbState) -> int:
    """Same as USS-UCB but B^h uses p-hat minus Psi (lower confidence)."""
    return _select(state, -1.0)


def uss_ucb_update(state: UssUcbState, observed_prefix: Sequence[int]) -> UssUcbState:
    if state.last_selected is None:
        raise UssError("update called before select", error_type=ErrorType.CONTRACT)
    if len(observed_prefix) != state.last_selected:
        raise UssError(
            f"observed {len(observed_prefix)} outputs but sensor {state.last_selected} was selected",
            error_type=ErrorType.CONTRACT,
        )
    state.pair_stats.observe(observed_prefix)
    state.t += 1
    state.last_selected = None
    return state


# Supervised baseline
class SupervisedState:
    """Per-sensor label feedback: n_j observations and e_j errors."""

    def __init__(
        self,
        cumulative_costs: Sequence[float],
        alpha: float = 0.51,
        f: Optional[GrowthFunction] = None,
    ):
        if not alpha > 0.5:
            raise UssError(f"alpha must be > 0.5, got {alpha}",
                           error_type=ErrorType.INVALID_ARGUMENT)
        self.cumulative_costs = list(cumulative_costs)
        self.K = len(self.cumulative_costs)
        self.alpha = alpha
        self.f = f or GrowthFunction()
        self.n = [0] * self.K
        self.e = [0] * self.K
        self.t = 1
        self.last_selected: Optional[int] = None

    def gamma_hat(self, j: int) -> float:
        if self.n[j - 1] == 0:
            raise UssError(f"sensor {j} has no labelled observations",
                           error_type=ErrorType.INVARIANT)
        return self.e[j - 1] / self.n[j - 1]


def supervised_select(state: SupervisedState) -> int:
    """Decision sets with max(0, gamma-hat_i - gamma-hat_j) in place of p-hat_ij."""
    K = state.K
    if state.t == 1 or K == 1:
        chosen = K
    else:
        log_f = max(0.0, state.f.log(state.t))
        bounds = [[0.0] * K for _ in range(K)]
        for a in range(K):
            for b in range(a + 1, K):
                n = min(state.n[a], state.n[b])
                if n == 0:
                    raise UssError(f"sensors ({a + 1}, {b + 1}) lack labelled observations",
                                   error_type=ErrorType.INVARIANT)
                gap = max(0.0, state.e[a] / state.n[a] - state.e[b] / state.n[b])
                bounds[a][b] = gap + math.sqrt(state.alpha * log_f / n)
        b_low, b_high = decision_sets(state.cumulative_costs, bounds, bounds)
        chosen = select_from_sets(b_low, b_high, K)
    state.last_selected = chosen
    return chosen


def supervised_update(
    state: SupervisedState, observed_prefix: Sequence[int], label: int
) -> SupervisedState:
    if state.last_selected is None or len(observed_prefix) != state.last_selected:
        raise UssError("prefix length does not match the selected sensor",
                       error_type=ErrorType.CONTRACT)
    for j, y_j in enumerate(observed_prefix):
        state.n[j] += 1
        if y_j != label:
            state.e[j] += 1
    state.t += 1
    state.last_selected = None
    return state


# Policy wrappers used by the simulator
class Policy(ABC):
    """select() -> I_t, then update() with the observed prefix Y^1..Y^{I_t}."""
    name: str = "policy"
    needs_label: bool = False

    @abstractmethod
    def select(self) -> int:
        ...

    def update(self, observed_prefix: Sequence[int], label: Optional[int] = None) -> None:
        return None


class UssUcbPolicy(Policy):
    name = "uss_ucb"

    def __init__(self, cumulative_costs: Sequence[float], alpha: float = 0.51,
                 f: Optional[GrowthFunction] = None):
        self.state = UssUcbState(cumulative_costs, alpha, f)

    def select(self) -> int:
        return uss_ucb_select(self.state)

    def update(self, observed_prefix: Sequence[int], label: Optional[int] = None) -> None:
        uss_ucb_update(self.state, observed_prefix)


class LowerConfidencePolicy(UssUcbPolicy):
    name = "uss_lc"

    def select(self) -> int:
        return lc_variant_select(self.state)


class SupervisedPolicy(Policy):
    name = "supervised"
    needs_label = True

    def __init__(self, cumulative_costs: Sequence[float], alpha: float = 0.51,
                 f: Optional[GrowthFunction] = None):
        self.state = SupervisedState(cumulative_costs, alpha, f)

    def select(self) -> int:
        return supervised_select(self.state)

    def update(self, observed_prefix: Sequence[int], label: Optional[int] = None) -> None:
        if label is None:
            raise UssError("supervised policy needs the revealed label",
                           error_type=ErrorType.CONTRACT)
        supervised_update(self.state, observed_prefix, label)


class FixedArmPolicy(Policy):
    name = "fixed"

    def __init__(self, arm: int, K: int):
        if not 1 <= arm <= K:
            raise UssError(f"arm {arm} outside [1, {K}]", error_type=ErrorType.INVALID_ARGUMENT)
        self.arm = arm

    def select(self) -> int:
        return self.arm


class OraclePolicy(FixedArmPolicy):
    """Always plays the ground-truth optimal sensor."""
    name = "oracle"

    def __init__(self, diag: InstanceDiagnostics):
        super().__init__(diag.i_star, diag.K)


def make_policy(spec: PolicySpec, diag: InstanceDiagnostics) -> Policy:
    costs = diag.cumulative
    growth = spec.growth()
    if spec.type is PolicyType.USS_UCB:
        return UssUcbPolicy(costs, spec.alpha, growth)
    if spec.type is PolicyType.USS_LC:
        return LowerConfidencePolicy(costs, spec.alpha, growth)
    if spec.type is PolicyType.SUPERVISED:
        return SupervisedPolicy(costs, spec.alpha, growth)
    if spec.type is PolicyType.FIXED:
        return FixedArmPolicy(spec.arm, diag.K)
    return OraclePolicy(diag)
