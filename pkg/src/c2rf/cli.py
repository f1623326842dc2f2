"""Command-line interface: stage-by-stage artifacts plus a benchmark runner.

Every subcommand reads and writes the versioned JSON containers of the
library modules, so stages can be mixed with externally produced files
(vote matrices in CSV, models in MPS).  A JSON config file supplies
defaults; explicitly passed flags override it.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bnb import SolverConfig, branching_priorities, brute_force_solve, solve_milp
from .dataset import Dataset, SplitDataset, draw_sample, load_csv, scale
from .forest import Forest, TreeParams, VoteMatrix, majority_vote, train_forest, vote_matrix
from .milp import export_mps, import_mps
from .model import ModelSpec, build_milp
from .pipeline import APPROACHES, RunConfig, aggregate, benchmark, load_cells, write_reports
from .presolve import PresolveMap, lift_solution, presolve
from . import synthetic


def _load_votes(path: str) -> VoteMatrix:
    if path.endswith(".csv"):
        return VoteMatrix.load_csv(path)
    return VoteMatrix.load(path)


def _solution_json(sol) -> dict:
    return {
        "format": "c2rf-solution",
        "version": 1,
        "status": sol.status,
        "objective": sol.objective,
        "alpha": None if sol.alpha is None else np.asarray(sol.alpha).tolist(),
        "eta": sol.eta,
        "z": None if sol.z is None else np.asarray(sol.z).tolist(),
        "stats": {k: v for k, v in sol.stats.items() if k != "all_optimal_z"},
    }


def cmd_ingest(args) -> int:
    if args.synthetic:
        spec = {"kind": args.synthetic, "n_points": args.n_points,
                "n_features": args.n_features, "separation": args.separation,
                "pos_fraction": args.pos_fraction, "seed": args.seed}
        data = synthetic.from_spec(spec)
    else:
        if not args.input:
            print("ingest: either --input or --synthetic is required", file=sys.stderr)
            return 2
        data = load_csv(args.input, args.label_column, args.delimiter,
                        args.positive_label)
    if not args.no_scale:
        data = scale(data)
    data.save(args.output)
    print(f"wrote {args.output}: {data.n_features} features x {data.n_points} points")
    return 0


def cmd_sample(args) -> int:
    data = Dataset.load(args.dataset)
    split = draw_sample(data, args.labeled_fraction, args.mode, args.p_pos, args.seed)
    split.save(args.output)
    print(f"wrote {args.output}: n={split.n} labeled, m={split.m} unlabeled, "
          f"target={split.lam}")
    return 0


def cmd_forest(args) -> int:
    data = Dataset.load(args.dataset)
    split = SplitDataset.load(args.split)
    forest = train_forest(data.features[:, split.labeled_indices],
                          split.labeled_labels, args.trees, args.subset_fraction,
                          args.seed, TreeParams(args.max_depth, args.min_samples_leaf))
    R = vote_matrix(forest, data.features[:, split.unlabeled_indices])
    if args.output_forest:
        forest.save(args.output_forest)
    R.save(args.output_votes)
    if args.votes_csv:
        R.save_csv(args.votes_csv)
    print(f"wrote {args.output_votes}: {R.n_trees} trees x {R.n_points} points")
    return 0


def _solver_config(args, priorities=None) -> SolverConfig:
    return SolverConfig(priorities=priorities, gap=args.gap,
                        time_limit=args.time_limit, node_limit=args.node_limit,
                        trace_path=getattr(args, "trace", None))


def cmd_solve(args) -> int:
    R = _load_votes(args.votes)
    lam, ell, u = args.lam, args.ell, args.u
    if args.approach == "rf":
        pred = majority_vote(R)
        out = {"format": "c2rf-solution", "version": 1, "status": "done",
               "majority_labels": pred.tolist()}
        with open(args.output, "w") as fh:
            json.dump(out, fh)
        print(f"wrote {args.output} (majority vote)")
        return 0
    if args.approach in ("p-c2rf", "only-pp"):
        reduced, lam_red, pmap, stats = presolve(R, lam, ell, u)
        prio = branching_priorities(reduced) if args.approach == "p-c2rf" else None
        sol = solve_milp(build_milp(reduced, ModelSpec(ell, u, lam_red)),
                         _solver_config(args, prio))
        sol = lift_solution(sol, pmap)
        print(f"presolve: {stats.points_before}->{stats.points_after} points, "
              f"{stats.trees_before}->{stats.trees_after} trees, "
              f"fixed +{stats.fixed_pos}/-{stats.fixed_neg}")
    else:
        prio = branching_priorities(R) if args.approach == "only-br" else None
        sol = solve_milp(build_milp(R, ModelSpec(ell, u, lam)),
                         _solver_config(args, prio))
    with open(args.output, "w") as fh:
        json.dump(_solution_json(sol), fh)
    print(f"wrote {args.output}: status={sol.status} objective={sol.objective} "
          f"nodes={sol.stats.get('nodes')}")
    return 0 if sol.status in ("optimal", "feasible", "infeasible") else 1


def cmd_oracle(args) -> int:
    R = _load_votes(args.votes)
    sol = brute_force_solve(R, args.lam, args.ell, args.u)
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(_solution_json(sol), fh)
    print(f"oracle: status={sol.status} objective={sol.objective} "
          f"z={None if sol.z is None else sol.z.tolist()}")
    return 0 if sol.status in ("optimal", "infeasible") else 1


def cmd_export_mps(args) -> int:
    R = _load_votes(args.votes)
    lam = args.lam
    if args.presolve:
        R, lam, pmap, _ = presolve(R, lam, args.ell, args.u)
        if args.map:
            pmap.save(args.map)
    model = build_milp(R, ModelSpec(args.ell, args.u, lam))
    export_mps(model, args.output)
    print(f"wrote {args.output}: {model.n_rows} rows, {model.n_vars} columns")
    return 0


def cmd_benchmark(args) -> int:
    with open(args.config) as fh:
        obj = json.load(fh)
    entries = obj["instances"] if isinstance(obj, dict) else obj
    shared = {k: v for k, v in obj.items() if k != "instances"} if isinstance(obj, dict) else {}
    configs = []
    for entry in entries:
        merged = dict(shared)
        merged.update(entry)
        if args.output_dir:
            merged["output_dir"] = args.output_dir
        configs.append(RunConfig.from_json(merged))
    bundles, summary = benchmark(configs, output_dir=args.output_dir or
                                 configs[0].output_dir,
                                 min_finished=args.min_finished)
    failures = [c for b in bundles for c in b.cells if c["status"] == "error"]
    for c in failures:
        print(f"cell error: {c['instance']} seed {c['seed']} {c['approach']}: "
              f"{c.get('error')}", file=sys.stderr)
    print(f"ran {sum(len(b.cells) for b in bundles)} cells over "
          f"{len(configs)} instances")
    return 1 if failures else 0


def cmd_report(args) -> int:
    cells = load_cells(args.results_dir)
    summary = aggregate(cells, time_limit=args.time_limit,
                        min_finished=args.min_finished)
    write_reports(summary, args.results_dir, use_paper_scale=args.paper_scale)
    print(f"{'instance':<20} {'approach':<10} {'median time':>12} "
          f"{'median AC':>10} {'median MCC':>11}")
    for row in summary["medians"]:
        mt = row["median_time"]
        mt = f"{mt:.3f}" if isinstance(mt, float) else mt
        acc, mc = row["median_accuracy"], row["median_mcc"]
        if args.paper_scale and isinstance(acc, float):
            acc = f"{100 * acc:.2f}"
        elif isinstance(acc, float):
            acc = f"{acc:.4f}"
        if args.paper_scale and isinstance(mc, float):
            mc = f"{100 * (mc + 1) / 2:.2f}"
        elif isinstance(mc, float):
            mc = f"{mc:.4f}"
        print(f"{row['instance']:<20} {row['approach']:<10} {mt:>12} "
              f"{str(acc):>10} {str(mc):>11}")
    return 0


def _add_bounds_flags(p):
    p.add_argument("--lambda", dest="lam", type=int, required=True,
                   help="positive-class count target for the unlabeled points")
    p.add_argument("--ell", type=float, default=1.0, help="lower weight bound")
    p.add_argument("--u", type=float, default=100.0, help="upper weight bound")


def _add_solver_flags(p):
    p.add_argument("--time-limit", type=float, default=7200.0)
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--gap", type=float, default=1e-6)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="c2rf",
        description="Semi-supervised vote weighting for tree ensembles with a "
                    "known class count")
    parser.add_argument("--config", help="JSON file with flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="CSV or synthetic data -> dataset JSON")
    p.add_argument("--input", help="CSV file with a header row")
    p.add_argument("--label-column", default="class")
    p.add_argument("--positive-label", default="1")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--synthetic", choices=["two-gaussians"],
                   help="generate data instead of reading a file")
    p.add_argument("--n-points", type=int, default=2000)
    p.add_argument("--n-features", type=int, default=2)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--pos-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-scale", action="store_true",
                   help="skip the coordinate scaling step")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("sample", help="dataset JSON -> labeled/unlabeled split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--labeled-fraction", type=float, default=0.01)
    p.add_argument("--mode", choices=["simple", "biased"], default="biased")
    p.add_argument("--p-pos", type=float, default=0.85)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("forest", help="train trees and emit the vote matrix")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--trees", type=int, default=20)
    p.add_argument("--subset-fraction", type=float, default=0.2)
    p.add_argument("--max-depth", type=int, default=10)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-forest")
    p.add_argument("--output-votes", required=True)
    p.add_argument("--votes-csv", help="also write the compact +-1 CSV")
    p.set_defaults(func=cmd_forest)

    p = sub.add_parser("solve", help="build and solve the weighting MILP")
    p.add_argument("--votes", required=True, help="vote matrix JSON or CSV")
    _add_bounds_flags(p)
    p.add_argument("--approach", choices=list(APPROACHES), default="p-c2rf")
    _add_solver_flags(p)
    p.add_argument("--trace", help="per-node CSV trace file")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="brute-force solve a small instance")
    p.add_argument("--votes", required=True)
    _add_bounds_flags(p)
    p.add_argument("--output")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("export-mps", help="write the model as an MPS file")
    p.add_argument("--votes", required=True)
    _add_bounds_flags(p)
    p.add_argument("--presolve", action="store_true",
                   help="reduce the instance first")
    p.add_argument("--map", help="where to save the presolve map JSON")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_export_mps)

    p = sub.add_parser("benchmark", help="run a matrix of instances")
    p.add_argument("--config", dest="config", required=True,
                   help="JSON with shared settings and an 'instances' list")
    p.add_argument("--output-dir")
    p.add_argument("--min-finished", type=int, default=3)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("report", help="aggregate a results directory")
    p.add_argument("--results-dir", required=True)
    p.add_argument("--time-limit", type=float, default=7200.0)
    p.add_argument("--min-finished", type=int, default=3)
    p.add_argument("--paper-scale", action="store_true",
                   help="display metrics as percentages, MCC affinely mapped "
                        "so a degenerate classifier shows 50.0")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, remaining = parser.parse_known_args(argv)
    if remaining:
        parser.error(f"unrecognized arguments: {' '.join(remaining)}")
    if args.config and args.command != "benchmark":
        with open(args.config) as fh:
            defaults = json.load(fh)
        parser.set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items()})
        args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
