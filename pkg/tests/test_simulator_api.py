"""
Tests for the simulation loop, repetitions, aggregation and experiment drivers.
"""
import math

import numpy as np
import pytest

from uss_sim.api.bounds import bound_mean_pulls, bound_regret_instance, bound_regret_uniform
from uss_sim.api.simulator import (
    SimulatorAPI, aggregate, arun_repetitions, resolve_instance, run_episode, run_repetitions,
    sweep_arm, verify_wd_empirical, xi_schedule, xi_sweep,
)
from uss_sim.models.environments import BscConfig, TraceDataset
from uss_sim.models.instance import CostInput
from uss_sim.models.policies import PolicySpec
from uss_sim.models.simulation import RegretTrace, RunConfig
from uss_sim.presets import bsc_case
from uss_sim.utils.exceptions import UssError, ErrorType


def flat_trace(rep, final):
    """One-round trace whose cumulative regret is `final`."""
    return RegretTrace(rep=rep, arms=[1], inst_regret=[final], cum_regret=[final],
                       pulls=[1], comparisons=[[0]], disagreements=[[0]])


def mean_final(traces):
    return float(np.mean([t.final_regret for t in traces]))


class TestRunEpisode:
    def test_oracle_has_zero_regret(self):
        """Test the oracle accumulates no regret."""
        cfg = bsc_case(1, PolicySpec(type="oracle"), T=300, repetitions=2)
        for trace in run_repetitions(cfg):
            assert set(trace.arms) == {1}
            assert trace.cum_regret[-1] == 0.0

    def test_fixed_arm_regret_is_linear(self):
        """Test a fixed suboptimal arm pays its gap every round."""
        cfg = bsc_case(1, PolicySpec(type="fixed", arm=3), T=250, repetitions=1)
        _, _, diag = resolve_instance(cfg)
        trace = run_episode(cfg, 0)
        assert trace.final_regret == pytest.approx(250 * diag.delta[2], rel=1e-12)
        assert trace.pulls == [0, 0, 250]

    def test_regret_regrouped_by_pulls(self):
        """Test R_T equals sum over arms of N_j(T) Delta_j."""
        cfg = bsc_case(2, T=500, repetitions=1)
        _, _, diag = resolve_instance(cfg)
        trace = run_episode(cfg, 0)
        assert trace.final_regret == pytest.approx(
            sum(n * d for n, d in zip(trace.pulls, diag.delta)), abs=1e-9
        )
        assert sum(trace.pulls) == 500
        assert trace.cum_regret == sorted(trace.cum_regret)

    def test_first_round_plays_last_sensor(self):
        """Test USS-UCB opens every repetition with sensor K."""
        trace = run_episode(bsc_case(1, T=5, repetitions=1), 3)
        assert trace.arms[0] == 3

    def test_pair_counters_follow_arms(self):
        """Test N_12 counts rounds with I_t >= 2 and N_23 rounds with I_t = 3."""
        trace = run_episode(bsc_case(2, T=400, repetitions=1), 0)
        assert trace.comparisons[0][1] == sum(a >= 2 for a in trace.arms)
        assert trace.comparisons[1][2] == sum(a == 3 for a in trace.arms)
        assert trace.disagreements[0][1] <= trace.comparisons[0][1]

    def test_sensor_count_mismatch(self, case_diag):
        """Test a source with the wrong number of sensors is rejected."""
        cfg = bsc_case(1, T=5, repetitions=1)
        two_sensor = TraceDataset(K=2, rows=((1, 1, 1),))
        with pytest.raises(UssError) as exc:
            run_episode(cfg, 0, source=two_sensor, diag=case_diag(1))
        assert exc.value.error_type is ErrorType.CONFIGURATION

    def test_trace_environment(self, tmp_path):
        """Test a replayed trace drives the loop and scores against its empirical pmf."""
        path = tmp_path / "t.csv"
        path.write_text("y,y1,y2\n1,1,1\n1,0,1\n0,0,0\n")
        cfg = RunConfig.model_validate({
            "environment": {"type": "trace", "path": str(path)},
            "costs": {"cumulative": [0.0, 0.5]},
            "T": 50,
            "repetitions": 2,
        })
        traces = run_repetitions(cfg)
        assert [t.T for t in traces] == [50, 50]

    def test_unenumerable_environment(self):
        """Test a generator too wide to enumerate is a configuration error."""
        cfg = RunConfig(environment=BscConfig(gamma_targets=[0.1] * 21),
                        costs=CostInput(cumulative=[0.0] * 21), T=5, repetitions=1)
        with pytest.raises(UssError) as exc:
            resolve_instance(cfg)
        assert exc.value.error_type is ErrorType.CONFIGURATION


class TestRepetitions:
    def test_deterministic(self):
        """Test the same config reproduces identical traces."""
        cfg = bsc_case(2, T=300, repetitions=3, base_seed=17)
        assert run_repetitions(cfg) == run_repetitions(cfg)

    def test_seeds_differ(self):
        """Test repetitions draw different streams."""
        traces = run_repetitions(bsc_case(1, PolicySpec(type="fixed", arm=3), T=300, repetitions=3))
        assert len({str(t.disagreements) for t in traces}) > 1

    def test_workers_do_not_change_results(self):
        """Test process-pool execution returns the sequential traces in order."""
        cfg = bsc_case(1, T=200, repetitions=4, base_seed=5)
        parallel = run_repetitions(cfg, workers=2)
        assert parallel == run_repetitions(cfg, workers=1)
        assert [t.rep for t in parallel] == [0, 1, 2, 3]

    async def test_async_matches_sequential(self):
        """Test the async runner gathers the same traces."""
        cfg = bsc_case(2, T=150, repetitions=3, base_seed=9)
        assert await arun_repetitions(cfg, workers=2) == run_repetitions(cfg)


class TestAggregate:
    def test_two_traces(self):
        """Test final regrets 0 and 2 give mean 1 and standard error 1."""
        agg = aggregate([flat_trace(0, 0.0), flat_trace(1, 2.0)])
        assert agg.mean_final_regret == 1.0
        assert agg.stderr_final == pytest.approx(1.0)
        assert agg.band_method == "bootstrap"
        assert 0.0 <= agg.ci_low[0] <= 1.0 <= agg.ci_high[0] <= 2.0

    def test_single_trace(self):
        """Test a single trace has a mean but no band."""
        agg = aggregate([flat_trace(0, 3.0)])
        assert agg.mean_regret_curve == [3.0]
        assert agg.ci_low is None
        assert agg.stderr_final is None

    def test_normal_band(self):
        """Test 30 traces use mean +/- 1.96 standard errors."""
        traces = [flat_trace(r, float(r % 3)) for r in range(30)]
        agg = aggregate(traces)
        finals = np.array([t.final_regret for t in traces])
        half = 1.959963984540054 * finals.std(ddof=1) / math.sqrt(30)
        assert agg.band_method == "normal"
        assert agg.ci_low[0] == pytest.approx(finals.mean() - half)
        assert agg.ci_high[0] == pytest.approx(finals.mean() + half)

    def test_bootstrap_seeded(self):
        """Test the bootstrap band is reproducible for a fixed seed."""
        traces = [flat_trace(r, float(r)) for r in range(5)]
        assert aggregate(traces, seed=3) == aggregate(traces, seed=3)

    @pytest.mark.parametrize("chunk", [1, 7])
    def test_bootstrap_slices_match_single_pass(self, monkeypatch, chunk):
        """Test slicing the rounds does not change the bootstrap band."""
        traces = run_repetitions(bsc_case(1, T=40, repetitions=5, base_seed=4))
        whole = aggregate(traces, seed=2)
        monkeypatch.setattr("uss_sim.api.simulator.BOOTSTRAP_CHUNK", chunk)
        sliced = aggregate(traces, seed=2)
        assert whole.band_method == sliced.band_method == "bootstrap"
        assert len(sliced.ci_low) == 40
        assert sliced.ci_low == pytest.approx(whole.ci_low, rel=1e-12, abs=1e-12)
        assert sliced.ci_high == pytest.approx(whole.ci_high, rel=1e-12, abs=1e-12)
        assert sliced.mean_regret_curve == whole.mean_regret_curve

    def test_mean_pulls(self):
        """Test pull counts are averaged per arm."""
        traces = run_repetitions(bsc_case(1, PolicySpec(type="fixed", arm=2), T=40, repetitions=2))
        assert aggregate(traces).mean_pulls == [0.0, 40.0, 0.0]

    def test_empty(self):
        """Test zero traces are rejected."""
        with pytest.raises(UssError) as exc:
            aggregate([])
        assert exc.value.error_type is ErrorType.INVALID_ARGUMENT

    def test_mismatched_horizons(self):
        """Test traces of different lengths are rejected."""
        longer = RegretTrace(rep=1, arms=[1, 1], inst_regret=[0.0, 0.0], cum_regret=[0.0, 0.0],
                             pulls=[2], comparisons=[[0]], disagreements=[[0]])
        with pytest.raises(UssError):
            aggregate([flat_trace(0, 0.0), longer])


class TestSimulatorAPI:
    def test_run(self, case_diag):
        """Test a run returns the ground truth and the plain repetition traces."""
        cfg = bsc_case(2, T=120, repetitions=3, base_seed=6)
        diag, traces = SimulatorAPI(workers=2).run(cfg)
        assert diag.i_star == case_diag(2).i_star == 2
        assert diag.delta == pytest.approx(case_diag(2).delta, abs=1e-12)
        assert traces == run_repetitions(cfg)

    async def test_arun(self):
        """Test the async run gathers the same traces."""
        cfg = bsc_case(1, T=80, repetitions=2, base_seed=8)
        diag, traces = await SimulatorAPI(workers=2).arun(cfg)
        assert diag.i_star == 1
        assert traces == run_repetitions(cfg)

    def test_summarize_uses_base_seed(self):
        """Test the summary band is seeded by the config."""
        cfg = bsc_case(1, T=30, repetitions=4, base_seed=11)
        api = SimulatorAPI()
        _, traces = api.run(cfg)
        assert api.summarize(cfg, traces) == aggregate(traces, seed=11)

    def test_sweep(self):
        """Test the sweep matches the module-level driver."""
        cfg = bsc_case(2, T=40, repetitions=2)
        assert SimulatorAPI().sweep(cfg, [0.05, -0.05]) == xi_sweep(cfg, [0.05, -0.05])

    def test_zero_workers(self):
        """Test fewer than one worker is rejected."""
        with pytest.raises(UssError) as exc:
            SimulatorAPI(workers=0)
        assert exc.value.error_type is ErrorType.INVALID_ARGUMENT


class TestVerifyWd:
    def test_case1_holds(self, case_diag):
        """Test the end-of-run estimates agree with the true WD verdicts."""
        diag = case_diag(1)
        trace = run_episode(bsc_case(1, T=2000, repetitions=1), 0)
        verdicts = verify_wd_empirical(trace, diag)
        assert [v.arm for v in verdicts] == [2, 3]
        assert all(v.truth for v in verdicts)
        assert verdicts[0].comparisons == trace.comparisons[0][1]
        assert verdicts[0].margin == pytest.approx(0.6)

    def test_single_round_is_coarse(self, case_diag):
        """Test one comparison is flagged as a coarse estimate."""
        trace = run_episode(bsc_case(1, T=1, repetitions=1), 0)
        verdicts = verify_wd_empirical(trace, case_diag(1))
        assert all(v.comparisons == 1 and v.coarse for v in verdicts)

    def test_vacuous_for_last_sensor(self, case_diag):
        """Test an optimal last sensor has nothing to verify."""
        trace = run_episode(bsc_case(4, T=10, repetitions=1), 0)
        assert verify_wd_empirical(trace, case_diag(4)) == []

    def test_other_horizon(self, case_diag):
        """Test only the final round can be checked."""
        trace = run_episode(bsc_case(1, T=10, repetitions=1), 0)
        with pytest.raises(UssError) as exc:
            verify_wd_empirical(trace, case_diag(1), at_T=5)
        assert exc.value.error_type is ErrorType.INVALID_ARGUMENT


class TestXiSchedule:
    def test_sweep_arm(self, case_diag):
        """Test the swept sensor attains xi."""
        assert sweep_arm(case_diag(2)) == 3

    def test_sweep_arm_vacuous(self, case_diag):
        """Test an optimal last sensor cannot be swept."""
        with pytest.raises(UssError) as exc:
            sweep_arm(case_diag(4))
        assert exc.value.error_type is ErrorType.CONFIGURATION

    def test_schedule_sets_margin(self, case_diag):
        """Test C_arm is placed xi above C_i* + p_i*,arm."""
        diag = case_diag(2)
        costs = xi_schedule(diag, 0.1, 3)
        assert costs[:2] == diag.cumulative[:2]
        assert costs[2] == pytest.approx(0.15 + diag.p(2, 3) + 0.1)

    def test_schedule_not_monotone(self, case_diag):
        """Test a schedule that would decrease the costs is dropped."""
        assert xi_schedule(case_diag(2), -1.0, 3) is None

    def test_arm_not_after_optimum(self, case_diag):
        """Test the swept arm must come after i*."""
        with pytest.raises(UssError) as exc:
            xi_schedule(case_diag(2), 0.0, 2)
        assert exc.value.error_type is ErrorType.INVALID_ARGUMENT

    def test_small_sweep(self):
        """Test sweep rows are sorted and report the realized xi."""
        rows = xi_sweep(bsc_case(2, T=60, repetitions=2), [0.05, -0.05])
        assert [r.xi_target for r in rows] == [-0.05, 0.05]
        for row in rows:
            assert row.xi == pytest.approx(row.xi_target, abs=1e-9)
            assert row.i_star == 2
            assert row.repetitions == 2
        assert [r.wd_holds for r in rows] == [False, True]

    def test_optimum_change_skipped(self):
        """Test a negative xi that moves i* is skipped."""
        rows = xi_sweep(bsc_case(1, T=20, repetitions=1), [-0.3, 0.1], arm=2)
        assert [r.xi_target for r in rows] == [0.1]


WORKERS = 4
HORIZON = 10_000
ACCEPTANCE_REPS = 50


def late_window(trace, start=9000):
    """Arms played in rounds start+1..T."""
    return trace.arms[start:]


def modal_arm(trace, K=3):
    return int(np.bincount(late_window(trace), minlength=K + 1).argmax())


def sublinear(traces):
    """Mean R_T/T at the horizon is under half the mean R_t/t at t = 1000."""
    early = np.mean([t.cum_regret[999] / 1000 for t in traces])
    late = np.mean([t.final_regret / t.T for t in traces])
    return late < 0.5 * early


@pytest.fixture(scope="module")
def case1_uss_ucb():
    """Fifty USS-UCB repetitions on case 1 with alpha = 0.51."""
    return run_repetitions(bsc_case(1, T=HORIZON, repetitions=ACCEPTANCE_REPS), workers=WORKERS)


@pytest.mark.slow
class TestRegretBehaviour:
    def test_suboptimal_pulls_vanish(self, case1_uss_ucb):
        """Test suboptimal sensors take at most 5% of the last thousand rounds on average."""
        fractions = [np.mean([a != 1 for a in late_window(t)]) for t in case1_uss_ucb]
        assert np.mean(fractions) <= 0.05

    def test_regret_is_sublinear(self, case1_uss_ucb):
        """Test R_T/T at T = 10^4 is under half of R_t/t at t = 10^3."""
        assert sublinear(case1_uss_ucb)

    def test_pulls_and_regret_within_bounds(self, case_diag):
        """Test case 1 with alpha = 1 stays under the pull and regret bounds."""
        diag = case_diag(1)
        cfg = bsc_case(1, PolicySpec(alpha=1.0), T=HORIZON, repetitions=ACCEPTANCE_REPS)
        agg = aggregate(run_repetitions(cfg, workers=WORKERS))
        bounds = bound_mean_pulls(diag, 1.0, "t", HORIZON)
        # sensor 3 is also the fallback when the decision sets are empty, so its pulls
        # exceed its own bound (about 90); the summed suboptimal pulls stay covered
        assert agg.mean_pulls[1] + agg.mean_pulls[2] <= bounds[1].bound + bounds[2].bound
        assert agg.mean_final_regret <= bound_regret_instance(diag, 1.0, "t", HORIZON)
        assert agg.mean_final_regret <= bound_regret_uniform(3, 1.0, "t", HORIZON, "WD")

    def test_lower_confidence_gets_stuck(self):
        """Test the LC variant freezes on a cheap sensor when the last one is optimal."""
        lc = run_repetitions(bsc_case(4, PolicySpec(type="uss_lc", alpha=1.0), T=2000, repetitions=10))
        ucb = run_repetitions(bsc_case(4, PolicySpec(alpha=1.0), T=2000, repetitions=10))
        assert mean_final(ucb) < 1.0
        assert mean_final(lc) > 10.0
        assert all(t.comparisons[1][2] < 100 for t in lc)

    def test_modal_arm_on_last_sensor_instance(self, case_diag):
        """Test LC settles away from i* = 3 while USS-UCB settles on it."""
        i_star = case_diag(4).i_star
        lc = run_repetitions(bsc_case(4, PolicySpec(type="uss_lc", alpha=1.0), T=HORIZON,
                                      repetitions=ACCEPTANCE_REPS), workers=WORKERS)
        ucb = run_repetitions(bsc_case(4, PolicySpec(alpha=1.0), T=HORIZON,
                                       repetitions=ACCEPTANCE_REPS), workers=WORKERS)
        assert sum(modal_arm(t) != i_star for t in lc) >= 0.8 * ACCEPTANCE_REPS
        assert sum(modal_arm(t) == i_star for t in ucb) >= 0.95 * ACCEPTANCE_REPS

    def test_supervised_wins_paired_runs(self, case1_uss_ucb):
        """Test label feedback does no worse in at least 90% of same-stream pairs."""
        sup = run_repetitions(bsc_case(1, PolicySpec(type="supervised"), T=HORIZON,
                                       repetitions=ACCEPTANCE_REPS), workers=WORKERS)
        assert [t.rep for t in sup] == [t.rep for t in case1_uss_ucb]
        wins = sum(s.final_regret <= u.final_regret for s, u in zip(sup, case1_uss_ucb))
        assert wins >= 0.9 * ACCEPTANCE_REPS
        assert sublinear(sup)
        assert sublinear(case1_uss_ucb)

    def test_pulls_before_optimum_do_not_grow(self):
        """Test mean N_1 on case 2 (i* = 2) is the same at T = 5000 and T = 10^4."""
        def mean_first_pulls(T):
            traces = run_repetitions(bsc_case(2, T=T, repetitions=ACCEPTANCE_REPS), workers=WORKERS)
            return float(np.mean([t.pulls[0] for t in traces]))

        assert abs(mean_first_pulls(HORIZON) - mean_first_pulls(5000)) <= 5.0

    def test_regret_jumps_when_xi_crosses_zero(self):
        """Test regret per round is far larger without WD than with a clear margin."""
        # at T = 10^4 a +0.02 margin is still inside the confidence radius
        # (R_T/T about 0.115 there against 0.108 at 0), so the clear side starts at +0.1
        rows = xi_sweep(bsc_case(2, T=HORIZON, repetitions=10),
                        [-0.05, -0.03, -0.01, 0.0, 0.1, 0.15, 0.2], workers=WORKERS)
        failing = [r.mean_regret_per_round for r in rows if r.xi_target <= 0.0]
        holding = [r.mean_regret_per_round for r in rows if r.xi_target >= 0.1]
        assert len(failing) == 4 and len(holding) == 3
        assert min(failing) > 3 * max(holding)
