"""Command-line entry point: ``homprog run | plot | validate | list``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from .config import ConfigError, load_config, parse_config, serialize, to_scenario
from .experiment import OUTPUT_ENV, emit_plot, resolve_output_dir, run_experiment

BUILTIN = ("consensus", "stationary_formation", "flocking", "moving_formation", "multidomain")


def builtin_config_text(name: str) -> str:
    return resources.files("homprog.scenarios").joinpath(f"{name}.json").read_text()


def _load(spec: str):
    """A config path, or the name of a bundled scenario."""
    if spec in BUILTIN and not Path(spec).exists():
        return parse_config(builtin_config_text(spec))
    return load_config(spec)


def _cmd_run(args) -> int:
    cfg = _load(args.config)
    out = resolve_output_dir(args.out, cfg)
    summary = run_experiment(cfg, out, seed=args.seed, steps=args.steps)
    met = ", ".join(f"{k}={'ok' if v else 'MISSED'}" for k, v in summary.thresholds_met.items())
    print(f"{summary.scenario} seed={summary.seed} steps={summary.steps_executed} status={summary.status} "
          f"time={summary.wall_clock_s:.1f}s -> {out}")
    for k, v in summary.final_metrics.items():
        print(f"  {k:>16s} {v:.6g}")
    if met:
        print(f"  thresholds: {met}")
    if summary.defaults_applied:
        print(f"  defaults: {', '.join(summary.defaults_applied)}")
    if not summary.ok:
        print(f"error: {summary.error}", file=sys.stderr)
        return 1
    return 0


def _cmd_plot(args) -> int:
    path = emit_plot(args.input, args.out)
    print(path)
    return 0


def _cmd_validate(args) -> int:
    cfg = _load(args.config)
    sc = to_scenario(cfg)
    print(f"ok: {cfg.kind} '{cfg.name}', {len(sc.agents)} agents, {len(sc.edges)} edges, "
          f"T={cfg.horizon}, dt={cfg.dt}, K={cfg.admm.K}, rho={cfg.admm.rho}")
    if cfg.defaults:
        print(f"defaults: {', '.join(cfg.defaults)}")
    if args.echo:
        sys.stdout.write(serialize(cfg))
    return 0


def _cmd_list(args) -> int:
    for name in BUILTIN:
        cfg = parse_config(builtin_config_text(name))
        print(f"{name:22s} steps={cfg.mpc_steps:<4d} dt={cfg.dt:<5g} rho={cfg.admm.rho:<5g} "
              f"thresholds={json.dumps(dict(cfg.thresholds))}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="homprog", description="Sheaf-based multi-agent MPC experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write CSV outputs")
    r.add_argument("--config", required=True, help="config path or bundled scenario name")
    r.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV}/<name>, then config, then runs/<name>)")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.add_argument("--steps", type=int, help="override the number of MPC steps")
    r.set_defaults(func=_cmd_run)

    pl = sub.add_parser("plot", help="render agent paths from a trajectory CSV")
    pl.add_argument("--in", dest="input", required=True, help="trajectory.csv")
    pl.add_argument("--out", required=True, help="output image (.svg or .pdf)")
    pl.set_defaults(func=_cmd_plot)

    v = sub.add_parser("validate", help="parse and check a config")
    v.add_argument("--config", required=True)
    v.add_argument("--echo", action="store_true", help="print the config with all defaults filled in")
    v.set_defaults(func=_cmd_validate)

    ls = sub.add_parser("list", help="list bundled scenarios")
    ls.set_defaults(func=_cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
