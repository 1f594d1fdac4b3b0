"""
Command-line front end: `uss-sim diagnose | run | sweep-xi | bounds | gen-trace | presets`.
"""
import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import pandas as pd
import structlog
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from . import __version__
from .api.bounds import bound_report
from .api.diagnostics import (
    check_unknown_order_learnable, compute_diagnostics, earlier_sensors_err_more, load_instance,
    true_decision_set,
)
from .api.environments import generate_trace, write_trace_csv
from .api.results import build_summary, write_results
from .api.simulator import SimulatorAPI, verify_wd_empirical
from .config import SimulatorConfig
from .models.environments import BscConfig, DEFAULT_GAMMA
from .models.instance import InstanceDiagnostics
from .models.policies import PolicyType
from .models.simulation import BoundReport, RunConfig
from .presets import PRESETS, apply_overrides, expand, get_preset
from .utils.exceptions import UssError, ErrorType, ErrorCode
from .utils.logging import configure_logging

logger = structlog.get_logger("uss_sim.cli")

Handler = Callable[[argparse.Namespace], int]


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _fmt(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.6g}"


class UssCli:
    """
    Builds the argument parser and dispatches sub-commands.
    """
    def __init__(self, config: SimulatorConfig, console: Optional[Console] = None):
        self.config = config
        self.console = console or Console()
        self.parser = argparse.ArgumentParser(
            prog="uss-sim", description="Unsupervised sensor selection simulator"
        )
        self.parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        self.subparsers = self.parser.add_subparsers(dest="command", required=True)
        self.register_commands()

    def _command(self, name: str, help_text: str, handler: Handler) -> argparse.ArgumentParser:
        sub = self.subparsers.add_parser(name, help=help_text, description=help_text)
        sub.set_defaults(handler=handler)
        return sub

    @staticmethod
    def _run_flags(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("config", nargs="?", help="Run config JSON file")
        sub.add_argument("--preset", help="Shipped preset name (see `uss-sim presets`)")
        sub.add_argument("--T", type=int, help="Horizon in rounds")
        sub.add_argument("--reps", type=int, help="Number of repetitions")
        sub.add_argument("--seed", type=int, help="Base seed")
        sub.add_argument("--alpha", type=float, help="Exploration factor (> 0.5)")
        sub.add_argument("--f", dest="growth", help="Growth function: t, t^a or t_log_t")
        sub.add_argument("--workers", type=int, help="Parallel repetitions (default USS_WORKERS)")

    def register_commands(self) -> None:
        #----------------------------------
        # Instance inspection
        #----------------------------------
        sub = self._command("diagnose", "Exact diagnostics of an instance file", self.cmd_diagnose)
        sub.add_argument("instance", help="Instance JSON file")
        sub.add_argument("--json", action="store_true", help="Print JSON instead of a table")

        sub = self._command("bounds", "Regret and pull-count bounds for an instance", self.cmd_bounds)
        sub.add_argument("instance", help="Instance JSON file")
        sub.add_argument("--T", type=int, default=10_000)
        sub.add_argument("--alpha", type=float, default=0.51)
        sub.add_argument("--f", dest="growth", default="t")
        sub.add_argument("--json", action="store_true", help="Print JSON instead of a table")

        #----------------------------------
        # Simulation
        #----------------------------------
        sub = self._command("run", "Simulate a policy over seeded repetitions", self.cmd_run)
        self._run_flags(sub)
        sub.add_argument("--policy", choices=[p.value for p in PolicyType])
        sub.add_argument("--arm", type=int, help="Arm of the fixed policy")
        sub.add_argument("--every", type=int, help="Write every k-th round to the CSV")
        sub.add_argument("--out", default="results", help="Output directory")

        sub = self._command("sweep-xi", "Mean regret along a cost schedule crossing xi = 0", self.cmd_sweep_xi)
        self._run_flags(sub)
        sub.add_argument("--grid", type=_floats, help="Comma-separated xi values")
        sub.add_argument("--arm", type=int, help="Sensor after i* whose cost is moved")
        sub.add_argument("--out", default="results/xi_sweep.csv", help="Output CSV file")

        #----------------------------------
        # Utilities
        #----------------------------------
        sub = self._command("gen-trace", "Write BSC samples to a trace CSV", self.cmd_gen_trace)
        sub.add_argument("--out", required=True, help="Output CSV file")
        sub.add_argument("--n", type=int, default=10_000, help="Number of rows")
        sub.add_argument("--seed", type=int, default=0)
        sub.add_argument("--gamma", type=_floats, default=list(DEFAULT_GAMMA))
        sub.add_argument("--bias", type=float, default=0.7, help="P{Y = 1}")
        sub.add_argument("--perturb", type=float, default=0.1)
        sub.add_argument("--order", type=_ints, help="Sensor permutation, e.g. 1,3,2")

        self._command("presets", "List shipped experiment presets", self.cmd_presets)

    # Helpers
    def _load_run_config(self, args: argparse.Namespace) -> List[tuple]:
        if args.config and args.preset:
            raise UssError("give either a config file or --preset, not both",
                           error_type=ErrorType.CONFIGURATION)
        if args.preset:
            preset = get_preset(args.preset)
            points = expand(preset)
        elif args.config:
            try:
                raw = json.loads(Path(args.config).read_text())
            except OSError as e:
                raise UssError(f"cannot read config {args.config}: {e}", error_type=ErrorType.IO, raw_error=e)
            except json.JSONDecodeError as e:
                raise UssError(f"config {args.config} is not valid JSON: {e}",
                               error_type=ErrorType.CONFIGURATION, raw_error=e)
            try:
                cfg = RunConfig.model_validate(raw)
            except ValidationError as e:
                raise UssError.from_validation_error(e, error_type=ErrorType.CONFIGURATION)
            points = [(Path(args.config).stem, cfg)]
        else:
            raise UssError("a config file or --preset is required", error_type=ErrorType.CONFIGURATION)

        overrides: Dict[str, Any] = {}
        for flag, key in (("T", "T"), ("reps", "repetitions"), ("seed", "base_seed"),
                          ("alpha", "policy.alpha"), ("growth", "policy.f")):
            value = getattr(args, flag, None)
            if value is not None:
                overrides[key] = value
        if getattr(args, "policy", None):
            overrides["policy.type"] = args.policy
        if getattr(args, "arm", None) is not None and hasattr(args, "policy"):
            overrides["policy.arm"] = args.arm
        if getattr(args, "every", None) is not None:
            overrides["record_every"] = args.every
        if self.config.seed is not None:
            overrides["base_seed"] = self.config.seed

        return [(label, apply_overrides(cfg, overrides)) for label, cfg in points]

    def _simulator(self, args: argparse.Namespace) -> SimulatorAPI:
        return SimulatorAPI(args.workers if args.workers is not None else self.config.workers)

    def _diagnostics_table(self, diag: InstanceDiagnostics, title: str) -> Table:
        table = Table(title=title)
        for col in ("sensor", "C_j", "gamma_j", "c(j)", "Delta_j", "kappa_j", "xi_j"):
            table.add_column(col, justify="right")
        for j in range(diag.K):
            marker = f"{j + 1}*" if j + 1 == diag.i_star else str(j + 1)
            table.add_row(marker, _fmt(diag.cumulative[j]), _fmt(diag.gamma[j]),
                          _fmt(diag.total_cost[j]), _fmt(diag.delta[j]),
                          _fmt(diag.kappa[j]), _fmt(diag.xi_per_arm[j]))
        return table

    # Commands
    def cmd_diagnose(self, args: argparse.Namespace) -> int:
        P, costs = load_instance(args.instance)
        diag = compute_diagnostics(P, costs)
        extra = {
            "unknown_order_learnable": check_unknown_order_learnable(diag),
            "earlier_sensors_err_more": earlier_sensors_err_more(diag),
            "decision_set": sorted(true_decision_set(diag)),
        }
        if args.json:
            payload = json.loads(diag.model_dump_json())
            payload.update(extra)
            self.console.print_json(json.dumps(payload))
            return ErrorCode.SUCCESS

        self.console.print(self._diagnostics_table(diag, f"Diagnostics: {args.instance}"))
        self.console.print(
            f"i* = {diag.i_star}   xi = {_fmt(diag.xi)}   rho = {_fmt(diag.rho)}   "
            f"SD = {diag.sd_holds}   WD = {diag.wd_holds}   "
            f"unknown-order learnable = {extra['unknown_order_learnable']}"
        )
        return ErrorCode.SUCCESS

    def _bounds_table(self, report: BoundReport) -> Table:
        table = Table(title=f"Bounds at T={report.T} (alpha={report.alpha:g}, f={report.f})")
        for col in ("sensor", "branch", "xi_j", "E[N_j(T)] <="):
            table.add_column(col, justify="right")
        for pb in report.mean_pulls:
            flag = " (WD violated)" if pb.wd_violation else ""
            table.add_row(str(pb.arm), pb.branch, _fmt(pb.xi_j), _fmt(pb.bound) + flag)
        return table

    def cmd_bounds(self, args: argparse.Namespace) -> int:
        P, costs = load_instance(args.instance)
        diag = compute_diagnostics(P, costs)
        report = bound_report(diag, args.alpha, args.growth, args.T)
        if args.json:
            self.console.print_json(report.model_dump_json())
            return ErrorCode.SUCCESS
        self.console.print(self._bounds_table(report))
        self.console.print(
            f"C = {_fmt(report.C_constant)}   instance bound = {_fmt(report.instance_bound)}   "
            f"uniform WD = {_fmt(report.uniform_wd)}   uniform SD = {_fmt(report.uniform_sd)}"
        )
        return ErrorCode.SUCCESS

    def cmd_run(self, args: argparse.Namespace) -> int:
        if args.preset and get_preset(args.preset).kind == "sweep":
            raise UssError(f"preset '{args.preset}' is a sweep; use `uss-sim sweep-xi`",
                           error_type=ErrorType.CONFIGURATION)
        table = Table(title="Runs")
        for col in ("label", "i*", "mean R_T", "R_T/T", "mean N_j(T)", "output"):
            table.add_column(col)

        simulator = self._simulator(args)
        for label, cfg in self._load_run_config(args):
            diag, traces = simulator.run(cfg)
            agg = simulator.summarize(cfg, traces)
            bounds = None
            if cfg.policy.type is PolicyType.USS_UCB:
                bounds = bound_report(diag, cfg.policy.alpha, cfg.policy.f, cfg.T)
            verdicts = [verify_wd_empirical(t, diag) for t in traces]
            summary = build_summary(label, cfg, diag, agg, bounds, verdicts)
            paths = write_results(args.out, traces, summary, stride=cfg.stride())
            table.add_row(label, str(diag.i_star), _fmt(agg.mean_final_regret),
                          _fmt(agg.mean_final_regret / cfg.T),
                          ", ".join(f"{n:.1f}" for n in agg.mean_pulls), str(paths["json"]))
        self.console.print(table)
        return ErrorCode.SUCCESS

    def cmd_sweep_xi(self, args: argparse.Namespace) -> int:
        points = self._load_run_config(args)
        preset = get_preset(args.preset) if args.preset else None
        grid = args.grid or (preset.xi_grid if preset and preset.xi_grid else None)
        if not grid:
            raise UssError("an xi grid is required (--grid or a sweep preset)",
                           error_type=ErrorType.CONFIGURATION)
        label, cfg = points[0]
        rows = self._simulator(args).sweep(cfg, grid, arm=args.arm)

        out = Path(args.out)
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            pd.DataFrame([r.model_dump() for r in rows]).to_csv(out, index=False)
        except OSError as e:
            raise UssError(f"cannot write {out}: {e}", error_type=ErrorType.IO, raw_error=e)

        table = Table(title=f"xi sweep: {label}")
        for col in ("xi", "rho", "WD", "mean R_T", "R_T/T"):
            table.add_column(col, justify="right")
        for r in rows:
            table.add_row(_fmt(r.xi), _fmt(r.rho), str(r.wd_holds),
                          _fmt(r.mean_final_regret), _fmt(r.mean_regret_per_round))
        self.console.print(table)
        return ErrorCode.SUCCESS

    def cmd_gen_trace(self, args: argparse.Namespace) -> int:
        if args.n < 1:
            raise UssError(f"--n must be >= 1, got {args.n}", error_type=ErrorType.INVALID_ARGUMENT)
        try:
            cfg = BscConfig(gamma_targets=args.gamma, label_bias=args.bias,
                            perturb_prob=args.perturb, seed=args.seed, sensor_order=args.order)
        except ValidationError as e:
            raise UssError.from_validation_error(e, error_type=ErrorType.CONFIGURATION)
        out = Path(args.out)
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            write_trace_csv(generate_trace(cfg, args.n), str(out))
        except OSError as e:
            raise UssError(f"cannot write {out}: {e}", error_type=ErrorType.IO, raw_error=e)
        self.console.print(f"wrote {args.n} rows (K={cfg.K}) to {out}")
        return ErrorCode.SUCCESS

    def cmd_presets(self, args: argparse.Namespace) -> int:
        table = Table(title="Presets")
        table.add_column("name")
        table.add_column("kind")
        table.add_column("description")
        for name in sorted(PRESETS):
            table.add_row(name, PRESETS[name].kind, PRESETS[name].description)
        self.console.print(table)
        return ErrorCode.SUCCESS

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        args = self.parser.parse_args(argv)
        try:
            try:
                return args.handler(args)
            except ValidationError as e:
                raise UssError.from_validation_error(e)
        except UssError as e:
            logger.error("command_failed", command=args.command, error_type=e.error_type.value)
            Console(stderr=True).print(f"error: {e}")
            return e.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = SimulatorConfig.from_env()
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return ErrorCode.CONFIG_ERROR
    configure_logging(config.log_level)
    cli = UssCli(config)
    try:
        return cli.run(argv)
    except SystemExit as e:
        # argparse usage errors exit with 2, matching the configuration error code
        return e.code if isinstance(e.code, int) else ErrorCode.CONFIG_ERROR
