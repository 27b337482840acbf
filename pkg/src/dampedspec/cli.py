"""``dsk`` command line interface.

Subcommands:
  dsk run <scenario> [--out DIR] [--trials N] [--seed S] [--threads T]
  dsk grid <scenario> [--trial I] [--algorithm A] [--out FILE]
  dsk list-scenarios
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dualpoly import eval_dual_poly
from .harness import (
    ExperimentConfig,
    make_trial_data,
    nnm_complete,
    run_coherence_study,
    run_phase_transition,
    run_scenario,
    run_sweep,
)
from .nnm import full_data_dual, nnm_denoise
from .scenarios import BUILTIN_SCENARIOS, get_scenario
from .serialize import (
    load_solver_config,
    write_coherence_csv,
    write_grid_csv,
    write_phase_csvs,
    write_scenario_outputs,
    write_sweep_csv,
)


def _load_config(name_or_path: str) -> ExperimentConfig:
    path = Path(name_or_path)
    if path.suffix == ".json" or path.exists():
        return ExperimentConfig.from_json(path)
    return get_scenario(name_or_path)


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    d = config.to_dict()
    if args.trials is not None:
        d["trials"] = args.trials
    if args.seed is not None:
        d["seed"] = args.seed
    if getattr(args, "solver_config", None):
        sections = load_solver_config(args.solver_config)
        if "nnm" in sections:
            d["nnm_options"] = sections["nnm"]
        if "anm" in sections:
            d["anm_options"] = sections["anm"]
    return ExperimentConfig.from_dict(d)


def _cmd_run(args) -> int:
    config = _apply_overrides(_load_config(args.scenario), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if config.kind == "trials":
        result = run_scenario(config, threads=args.threads)
        write_scenario_outputs(result, out)
        for name, agg in result.aggregates.items():
            print(f"{config.scenario}/{name}: "
                  f"p_param={agg.get('p_param')} p_data={agg.get('p_data')} "
                  f"mean_rel_err={agg.get('mean_rel_err')}")
    elif config.kind == "sweep":
        results = run_sweep(config, threads=args.threads)
        write_sweep_csv(results, out / "sweep.csv", config.sweep_param)
        summary = {
            "scenario": config.scenario,
            "config": config.to_dict(),
            "points": {str(v): r.aggregates for v, r in results.items()},
        }
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {out / 'sweep.csv'}")
    elif config.kind == "phase_transition":
        phase = run_phase_transition(config, threads=args.threads)
        write_phase_csvs(phase, out)
        summary = {
            "scenario": config.scenario,
            "config": config.to_dict(),
            "k_values": phase["k_values"],
            "n_observed_values": phase["n_observed_values"],
            "p_param": phase["p_param"].tolist(),
            "p_data": phase["p_data"].tolist(),
        }
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote phase CSVs to {out}")
    elif config.kind == "coherence":
        rows = run_coherence_study(config, threads=args.threads)
        write_coherence_csv(rows, out / "coherence.csv", config.sweep_param)
        with open(out / "summary.json", "w") as fh:
            json.dump({"scenario": config.scenario, "config": config.to_dict(),
                       "rows": rows}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {out / 'coherence.csv'}")
    else:
        print(f"unknown scenario kind {config.kind!r}", file=sys.stderr)
        return 2
    return 0


def _cmd_grid(args) -> int:
    config = _apply_overrides(_load_config(args.scenario), args)
    data = make_trial_data(config, args.trial)
    algorithm = args.algorithm or config.algorithms[0]
    if algorithm in ("md_music", "nnm_music", "nnm_esprit", "nnm_complete"):
        _, cert, _ = nnm_complete(data.observed, data.mask, config.solver_options())
    elif algorithm == "nn_music":
        cert = full_data_dual(data.observed, config.k)
    elif algorithm == "nn_music_denoise":
        _, cert = nnm_denoise(data.observed, config.denoise_lambda)
    else:
        print(f"grid export is not defined for algorithm {algorithm!r}",
              file=sys.stderr)
        return 2
    grid = config.grid()
    values = eval_dual_poly(cert, grid)
    write_grid_csv(args.out, grid, values)
    print(f"wrote {args.out}")
    return 0


def _cmd_list(_args) -> int:
    width = max(len(k) for k in BUILTIN_SCENARIOS)
    for name in sorted(BUILTIN_SCENARIOS):
        cfg = BUILTIN_SCENARIOS[name]
        dims = f"{cfg.m}x{cfg.n} k={cfg.k}"
        print(f"{name:<{width}}  [{cfg.kind}] {dims} trials={cfg.trials} "
              f"algorithms={','.join(cfg.algorithms)}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dsk",
        description="Damped spectral estimation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario (builtin name or JSON file)")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default="results", help="output directory")
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--solver-config", default=None,
                       help='JSON file {"nnm": {...}, "anm": {...}}')
    p_run.set_defaults(func=_cmd_run)

    p_grid = sub.add_parser("grid", help="export a dual-polynomial surface CSV")
    p_grid.add_argument("scenario")
    p_grid.add_argument("--out", default="grid.csv")
    p_grid.add_argument("--trial", type=int, default=0)
    p_grid.add_argument("--algorithm", default=None)
    p_grid.add_argument("--trials", type=int, default=None)
    p_grid.add_argument("--seed", type=int, default=None)
    p_grid.set_defaults(func=_cmd_grid)

    p_list = sub.add_parser("list-scenarios", help="list builtin scenarios")
    p_list.set_defaults(func=_cmd_list)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
