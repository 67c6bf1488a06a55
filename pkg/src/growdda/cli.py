"""Command line entry point: ``growdda {design,schedule,run,theory,sweep}``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import io
from .decentralized import decentralized_top_eigvec
from .experiments import (
    ConfigError,
    build_graph,
    config_to_dict,
    design,
    load_config,
    run_sweep,
    run_trials,
    schedule,
    theory_overlay,
)
from .graph import Graph, GraphError


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--scale", choices=("desk", "paper"), default="desk")
    common.add_argument("--gamma", type=float)
    common.add_argument("--delta", type=int, help="topology switching interval")
    common.add_argument("--budget", type=int, help="number of edges to select (C2 k)")
    common.add_argument("--trials", type=int)

    ap = argparse.ArgumentParser(prog="growdda", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("design", parents=[common], help="select edges; writes selection and edge files")
    sub.add_parser("schedule", parents=[common], help="order selected edges; writes the schedule file")
    sub.add_parser("run", parents=[common], help="run DDA; writes trajectory CSVs")
    sub.add_parser("theory", parents=[common], help="mixing time and bounds; writes theory CSVs")
    sw = sub.add_parser("sweep", parents=[common], help="sweep gamma, budget or delta; writes a sweep CSV")
    sw.add_argument("--axis", choices=("gamma", "budget", "delta"))
    sw.add_argument("--values", type=float, nargs="+")
    return ap


def _config(args):
    cfg = load_config(args.config, args.scale)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.gamma is not None:
        cfg = replace(cfg, design=replace(cfg.design, gamma=args.gamma))
    if args.budget is not None:
        cfg = replace(cfg, design=replace(cfg.design, k=args.budget))
    if args.delta is not None:
        cfg = replace(cfg, schedule=replace(cfg.schedule, Delta=args.delta))
    if args.trials is not None:
        cfg = replace(cfg, dda=replace(cfg.dda, trials=args.trials))
    return cfg.validate()


def _design(cfg, out: Path):
    graph = build_graph(cfg)
    problem, res = design(cfg, graph)
    io.write_graph(out / "graph.txt", graph)
    k = cfg.design.k if cfg.design.mode == "C2" else None
    io.write_selection(out / "selection.txt", res, problem.K, problem.gamma, cfg.design.mode, k)
    io.atomic_write_text(out / "selected_edges.txt",
                         io.format_graph(Graph(graph.n, res.selected_edges), sort=True))
    if cfg.decentralized.enabled:
        P = problem.mixing(np.zeros(problem.K))
        _, stats = decentralized_top_eigvec(graph, P, cfg.decentralized.N1, cfg.decentralized.N2,
                                            seed=cfg.seed, trace=True)
        io.write_trace(out / "protocol_trace.csv", stats)
    return graph, problem, res


def _network(cfg, out: Path):
    graph, _, res = _design(cfg, out)
    net = schedule(cfg, graph, res.selected_edges)
    io.write_schedule(out / "schedule.txt", graph.n, net.additions)
    return net


def cmd_design(cfg, out):
    _design(cfg, out)


def cmd_schedule(cfg, out):
    _network(cfg, out)


def cmd_run(cfg, out):
    net = _network(cfg, out)
    trajs = run_trials(cfg, net)
    io.write_trajectory(out / "trajectory.csv", trajs[0])
    if len(trajs) > 1:
        for j, tr in enumerate(trajs):
            io.write_trajectory(out / "trajectories" / f"trial_{j:03d}.csv", tr)


def cmd_theory(cfg, out):
    net = _network(cfg, out)
    trajs = run_trials(cfg, net, trials=1)
    ov = theory_overlay(cfg, net, trajs)
    rep = ov.report
    io.write_csv(out / "theory.csv", io.THEORY_COLUMNS,
                 [[rep.delta_star, rep.beta_star, rep.net_bound, rep.thm2_bound_at_T, rep.prop3_scale]])
    rows = zip(rep.checkpoints, rep.delta_star_series, ov.bounds[0], ov.regrets[0])
    io.write_csv(out / "theory_checkpoints.csv", io.THEORY_CHECKPOINT_COLUMNS, rows)


def cmd_sweep(cfg, out, axis=None, values=None):
    axis = axis or cfg.sweep.axis
    if values is not None and axis in ("budget", "delta"):
        values = [int(v) for v in values]
    res = run_sweep(cfg, axis, values)
    io.write_csv(out / f"sweep_{axis}.csv", io.SWEEP_COLUMNS, res.table())


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _config(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "sweep":
            cmd_sweep(cfg, out, args.axis, args.values)
        else:
            {"design": cmd_design, "schedule": cmd_schedule, "run": cmd_run, "theory": cmd_theory}[args.command](
                cfg, out)
        io.atomic_write_text(out / "config.yaml", yaml.safe_dump(config_to_dict(cfg), sort_keys=False))
    except (ConfigError, GraphError, ValueError, OSError, TypeError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        print(json.dumps(err), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
