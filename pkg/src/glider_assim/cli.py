"""Command line interface: single runs and the full comparison sweep.

`run` executes one configured experiment and writes metrics.csv,
paths.csv, and a config.resolved echo of the effective parameters.
`sweep` runs the benchmark grid (4 flows x cohorts 1,2,5,10 x 3
strategies x seeds) in parallel and aggregates summary.csv plus an
events.csv of solver retries and fallbacks.

Exit codes: 0 success, 1 configuration error, 2 numerical abort.
Every field can also be overridden via GLIDER_ASSIM_<FIELD> variables;
explicit flags win over environment, environment over config file.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

from .config import STRATEGIES, ExperimentConfig, apply_env_overrides
from .control import CohortPlan
from .errors import ConfigError, NumericalAbort
from .flow import FLOW_CASE_TAGS
from .simulate import _fmt, run_experiment

SWEEP_COHORTS = (1, 2, 5, 10)

SUMMARY_HEADER = ("flow,gliders,strategy,seed,status,final_trace,final_rms,"
                  "psd_floor,gamma_retries,line_init_retries,fallbacks")
EVENTS_HEADER = "flow,gliders,strategy,seed,window,glider,kind"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; route through the config-error path
    def error(self, message):
        raise ConfigError("<args>", message)


def build_parser():
    parser = _Parser(prog="glider-assim",
                     description="Flow estimation with optimally steered gliders")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file with flat keys")
        p.add_argument("--obs", type=int, dest="n_obs", help="observations per run")
        p.add_argument("--dt", type=float, help="time between observations")
        p.add_argument("--umax", type=float, dest="u_max", help="maximum glider speed")
        p.add_argument("--noise-var", type=float, dest="noise_var", help="observation noise variance")
        p.add_argument("--prior-var", type=float, dest="prior_var", help="prior parameter variance")
        p.add_argument("--out", help="output directory")
        p.add_argument("--debug-solver", action="store_true", dest="debug_solver", default=None,
                       help="dump per-window solver diagnostics")

    run_p = sub.add_parser("run", help="one experiment")
    add_common(run_p)
    run_p.add_argument("--flow", help="center | unstable-node | saddle | stable-node")
    run_p.add_argument("--gliders", type=int, help="cohort size")
    run_p.add_argument("--strategy", help="optimal | none | random")
    run_p.add_argument("--seed", type=int, help="master seed")

    sweep_p = sub.add_parser("sweep", help="full benchmark grid")
    add_common(sweep_p)
    sweep_p.add_argument("--seeds", type=int, default=10, help="seeds 0..S-1 per cell")
    sweep_p.add_argument("--threads", type=int, help="parallel worker cap")
    return parser


def resolve_config(args):
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError("config", str(exc)) from exc
        cfg = ExperimentConfig.from_json(text)
    else:
        cfg = ExperimentConfig()
    cfg = apply_env_overrides(cfg)
    overrides = {}
    for name in ("flow", "gliders", "strategy", "seed", "n_obs", "dt", "u_max",
                 "noise_var", "prior_var", "out", "debug_solver"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return replace(cfg, **overrides) if overrides else cfg


def cmd_run(args):
    cfg = resolve_config(args).validate()
    record = run_experiment(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    record.write_csv(out / "metrics.csv", out / "paths.csv")
    with open(out / "config.resolved", "w", newline="\n") as fh:
        fh.write(cfg.to_json() + "\n")
    if cfg.debug_solver:
        with open(out / "solver_debug.txt", "w", newline="\n") as fh:
            fh.write(_solver_debug_text(record))
    return 0


def _solver_debug_text(record):
    lines = []
    for j, plan in enumerate(record.heading_log, start=1):
        if isinstance(plan, CohortPlan):
            for k, path in enumerate(plan.paths):
                lines.append(
                    f"window {j} glider {k + 1}: converged={plan.glider_converged[k]} "
                    f"reg={_fmt(plan.reg_used[k])} residual={_fmt(plan.final_residuals[k])} "
                    f"end=({_fmt(path.points[-1, 0])},{_fmt(path.points[-1, 1])})")
                lines.append("  path " + " ".join(
                    f"({_fmt(p[0])},{_fmt(p[1])})" for p in path.points))
        else:
            lines.append(f"window {j}: plan={plan!r}")
    for ev in record.events:
        lines.append(f"event window {ev.window} glider {ev.glider + 1}: {ev.kind}")
    return "\n".join(lines) + "\n"


def run_name(cfg):
    return f"{cfg.flow}_K{cfg.gliders}_{cfg.strategy}_s{cfg.seed}"


def _sweep_worker(config_data):
    cfg = ExperimentConfig.from_dict(config_data)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    base = dict(flow=cfg.flow, gliders=cfg.gliders, strategy=cfg.strategy, seed=cfg.seed)
    try:
        record = run_experiment(cfg)
    except NumericalAbort as exc:
        return {**base, "status": f"abort_window_{exc.window}", "final_trace": float("nan"),
                "final_rms": float("nan"), "psd_floor": float("nan"),
                "gamma_retries": 0, "line_init_retries": 0, "fallbacks": 0, "events": []}
    record.write_csv(out / "metrics.csv", out / "paths.csv")
    with open(out / "config.resolved", "w", newline="\n") as fh:
        fh.write(cfg.to_json() + "\n")
    kinds = [ev.kind for ev in record.events]
    return {**base, "status": "ok", "final_trace": record.final_trace,
            "final_rms": record.final_rms, "psd_floor": record.psd_floor,
            "gamma_retries": kinds.count("gamma_retry"),
            "line_init_retries": kinds.count("line_init_retry"),
            "fallbacks": kinds.count("zero_control_fallback"),
            "events": [(ev.window, ev.glider + 1, ev.kind) for ev in record.events]}


def sweep_configs(base, seeds, out_root):
    configs = []
    for flow in FLOW_CASE_TAGS:
        for gliders in SWEEP_COHORTS:
            for strategy in STRATEGIES:
                for seed in range(seeds):
                    cfg = replace(base, flow=flow, gliders=gliders, strategy=strategy,
                                  seed=seed)
                    cfg = replace(cfg, out=str(out_root / run_name(cfg)))
                    configs.append(cfg)
    return configs


def cmd_sweep(args):
    base = resolve_config(args)
    if args.seeds < 1:
        raise ConfigError("seeds", "need at least one seed")
    out_root = Path(base.out) if (args.out or base.out != "out") else Path("sweep_out")
    out_root.mkdir(parents=True, exist_ok=True)
    configs = sweep_configs(base, args.seeds, out_root)
    for cfg in configs:
        cfg.validate()
    threads = args.threads or os.cpu_count() or 1
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_sweep_worker, [asdict(c) for c in configs], chunksize=1))
    else:
        rows = [_sweep_worker(asdict(c)) for c in configs]

    with open(out_root / "summary.csv", "w", newline="\n") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for row in rows:
            fh.write(f"{row['flow']},{row['gliders']},{row['strategy']},{row['seed']},"
                     f"{row['status']},{_fmt(row['final_trace'])},{_fmt(row['final_rms'])},"
                     f"{_fmt(row['psd_floor'])},{row['gamma_retries']},"
                     f"{row['line_init_retries']},{row['fallbacks']}\n")
    with open(out_root / "events.csv", "w", newline="\n") as fh:
        fh.write(EVENTS_HEADER + "\n")
        for row in rows:
            for window, glider, kind in row.get("events", []):
                fh.write(f"{row['flow']},{row['gliders']},{row['strategy']},"
                         f"{row['seed']},{window},{glider},{kind}\n")

    failed = [row for row in rows if row["status"] != "ok"]
    if failed:
        print(f"{len(failed)} of {len(rows)} runs aborted", file=sys.stderr)
        return 2
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return cmd_run(args)
        return cmd_sweep(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
