"""End-to-end orchestration of the five approaches over datasets and seeds.

Every (instance, seed, approach) cell runs the identical forest for its
seed, so metric deltas between approaches isolate the optimization effect.
Cells are persisted as individual JSON files the moment they finish;
aggregation only ever reads those files, so interrupted benchmarks keep
their partial results.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import synthetic
from .bnb import SolverConfig, Solution, branching_priorities, solve_milp
from .dataset import Dataset, SplitDataset, draw_sample, load_csv, scale
from .forest import Forest, TreeParams, VoteMatrix, majority_vote, train_forest, vote_matrix
from .metrics import Confusion, accuracy, confusion, ecdf, mcc, paper_scale
from .model import ModelSpec, build_milp
from .presolve import lift_solution, presolve

APPROACHES = ("rf", "c2rf", "p-c2rf", "only-pp", "only-br")


@dataclass
class RunConfig:
    """One instance: a dataset plus sampling, forest, bound, and solver
    settings, evaluated over several seeds and approaches."""

    dataset: str = None  # CSV / dataset-JSON path ...
    synthetic: dict = None  # ... or a synthetic spec; exactly one of the two
    name: str = None
    label_column: str = "class"
    positive_label: str = "1"
    delimiter: str = ","
    scaling: bool = True
    sampling_mode: str = "biased"
    p_pos: float = 0.85
    labeled_fraction: float = 0.01
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    trees: int = 20
    subset_fraction: float = 0.2
    max_depth: int = 10
    min_samples_leaf: int = 1
    ell: float = 1.0
    u: float = 100.0
    approaches: list = field(default_factory=lambda: list(APPROACHES))
    time_limit: float = 7200.0
    node_limit: int = None
    gap: float = 1e-6
    output_dir: str = "results"

    def validate(self) -> None:
        if (self.dataset is None) == (self.synthetic is None):
            raise ValueError("exactly one of dataset path or synthetic spec is required")
        for a in self.approaches:
            if a not in APPROACHES:
                raise ValueError(f"unknown approach {a!r}; choose from {APPROACHES}")
        if not self.ell < self.u:
            raise ValueError("need ell < u")
        if self.dataset is not None and not Path(self.dataset).exists():
            raise ValueError(f"dataset file {self.dataset} does not exist")
        if not self.seeds:
            raise ValueError("at least one seed is required")

    @property
    def instance_name(self) -> str:
        if self.name:
            return self.name
        if self.dataset:
            return Path(self.dataset).stem
        return self.synthetic.get("kind", "synthetic")

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    def to_json(self) -> dict:
        return asdict(self)


def load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.synthetic is not None:
        d = synthetic.from_spec(cfg.synthetic)
    elif cfg.dataset.endswith(".json"):
        d = Dataset.load(cfg.dataset)
    else:
        d = load_csv(cfg.dataset, cfg.label_column, cfg.delimiter, cfg.positive_label)
    return scale(d) if cfg.scaling else d


def run_approach(R: VoteMatrix, lam: int, cfg: RunConfig, approach: str):
    """Solve one cell; returns (predictions, solution-or-None, extras)."""
    t0 = time.monotonic()
    spec = ModelSpec(cfg.ell, cfg.u, lam)
    solver = SolverConfig(gap=cfg.gap, time_limit=cfg.time_limit,
                          node_limit=cfg.node_limit)
    extras = {}
    if approach == "rf":
        pred = majority_vote(R)
        extras["wall_time"] = time.monotonic() - t0
        return pred, None, extras
    if approach in ("p-c2rf", "only-pp"):
        reduced, lam_red, pmap, stats = presolve(R, lam, cfg.ell, cfg.u)
        extras["presolve"] = stats.as_dict()
        if approach == "p-c2rf":
            solver.priorities = branching_priorities(reduced)
        sol = solve_milp(build_milp(reduced, ModelSpec(cfg.ell, cfg.u, lam_red)), solver)
        sol = lift_solution(sol, pmap)
    elif approach == "only-br":
        solver.priorities = branching_priorities(R)
        sol = solve_milp(build_milp(R, spec), solver)
    else:  # c2rf: plain model, no reductions, no priorities
        sol = solve_milp(build_milp(R, spec), solver)
    extras["wall_time"] = time.monotonic() - t0
    pred = None
    if sol.z is not None:
        pred = np.where(sol.z == 1, 1, -1).astype(np.int8)
    return pred, sol, extras


def _cell_record(cfg: RunConfig, seed: int, approach: str, pred, sol, extras,
                 truth) -> dict:
    cell = {
        "instance": cfg.instance_name,
        "seed": seed,
        "approach": approach,
        "status": "done" if sol is None else sol.status,
        "wall_time": extras.get("wall_time"),
        "objective": None if sol is None else sol.objective,
        "nodes": 0 if sol is None else sol.stats.get("nodes", 0),
        "lp_iterations": 0 if sol is None else sol.stats.get("lp_iterations", 0),
        "lower_bound": None if sol is None else sol.stats.get("lower_bound"),
        "presolve": extras.get("presolve"),
    }
    if pred is not None and truth is not None:
        c = confusion(pred, truth)
        cell["confusion"] = {"tp": c.tp, "tn": c.tn, "fp": c.fp, "fn": c.fn}
        cell["accuracy"] = accuracy(c)
        cell["mcc"] = mcc(c)
    return cell


@dataclass
class ResultsBundle:
    config: RunConfig
    cells: list = field(default_factory=list)

    def cell(self, seed: int, approach: str) -> dict:
        for c in self.cells:
            if c["seed"] == seed and c["approach"] == approach:
                return c
        raise KeyError((seed, approach))

    def all_terminal(self) -> bool:
        return all(c["status"] in ("done", "optimal", "feasible", "infeasible")
                   for c in self.cells)


def run_pipeline(cfg: RunConfig, persist: bool = True) -> ResultsBundle:
    """Run every (seed, approach) cell of one instance.

    A cell failure is recorded in the cell and does not stop the run."""
    cfg.validate()
    data = load_dataset(cfg)
    out = Path(cfg.output_dir)
    if persist:
        (out / "cells").mkdir(parents=True, exist_ok=True)
    bundle = ResultsBundle(cfg)
    for seed in cfg.seeds:
        stage_error = None
        try:
            split = draw_sample(data, cfg.labeled_fraction, cfg.sampling_mode,
                                cfg.p_pos, seed)
            forest = train_forest(data.features[:, split.labeled_indices],
                                  split.labeled_labels, cfg.trees,
                                  cfg.subset_fraction, seed,
                                  TreeParams(cfg.max_depth, cfg.min_samples_leaf))
            R = vote_matrix(forest, data.features[:, split.unlabeled_indices])
        except Exception as exc:  # a bad draw poisons every cell of the seed
            stage_error = f"{type(exc).__name__}: {exc}"
        for approach in cfg.approaches:
            if stage_error is not None:
                cell = {"instance": cfg.instance_name, "seed": seed,
                        "approach": approach, "status": "error",
                        "error": stage_error}
            else:
                try:
                    pred, sol, extras = run_approach(R, split.lam, cfg, approach)
                    cell = _cell_record(cfg, seed, approach, pred, sol, extras,
                                        split.unlabeled_truth)
                except Exception as exc:  # recorded, run continues
                    cell = {"instance": cfg.instance_name, "seed": seed,
                            "approach": approach, "status": "error",
                            "error": f"{type(exc).__name__}: {exc}"}
            bundle.cells.append(cell)
            if persist:
                path = out / "cells" / f"{cfg.instance_name}__seed{seed}__{approach}.json"
                with open(path, "w") as fh:
                    json.dump(cell, fh, indent=1)
    if persist:
        with open(out / f"{cfg.instance_name}__config.json", "w") as fh:
            json.dump(cfg.to_json(), fh, indent=1)
    return bundle


def benchmark(configs: list, output_dir: str = None, min_finished: int = 3):
    """Run a matrix of instances and aggregate ECDF inputs and median
    tables.  Returns (bundles, summary dict)."""
    bundles = []
    for cfg in configs:
        if output_dir:
            cfg.output_dir = output_dir
        bundles.append(run_pipeline(cfg, persist=bool(output_dir)))
    summary = aggregate([c for b in bundles for c in b.cells],
                        time_limit=max(c.time_limit for c in configs),
                        min_finished=min_finished)
    if output_dir:
        write_reports(summary, output_dir)
    return bundles, summary


def _finished(cell) -> bool:
    return cell.get("status") in ("done", "optimal")


def aggregate(cells: list, time_limit: float, min_finished: int = 3) -> dict:
    """Per-approach time vectors for ECDF curves plus per-(instance,
    approach) medians; an entry shows "---" when fewer than `min_finished`
    seeds finished within the limit."""
    approaches = sorted({c["approach"] for c in cells})
    instances = sorted({c["instance"] for c in cells})
    times = {a: [] for a in approaches}
    for c in cells:
        if c.get("status") == "error":
            continue
        t = c.get("wall_time")
        if t is not None:
            times[c["approach"]].append(t if _finished(c) else time_limit * 2)
    curves = {a: ecdf(ts, time_limit) for a, ts in times.items() if ts}
    median_rows = []
    for inst in instances:
        for a in approaches:
            group = [c for c in cells if c["instance"] == inst and c["approach"] == a
                     and c.get("status") != "error"]
            done = [c for c in group if _finished(c)]
            row = {"instance": inst, "approach": a,
                   "n_seeds": len(group), "n_finished": len(done)}
            if len(done) >= min_finished:
                row["median_time"] = float(np.median([c["wall_time"] for c in done]))
                accs = [c["accuracy"] for c in done if "accuracy" in c]
                mccs = [c["mcc"] for c in done if "mcc" in c]
                row["median_accuracy"] = float(np.median(accs)) if accs else None
                row["median_mcc"] = float(np.median(mccs)) if mccs else None
            else:
                row["median_time"] = row["median_accuracy"] = row["median_mcc"] = "---"
            median_rows.append(row)
    return {"times": times, "curves": curves, "medians": median_rows,
            "time_limit": time_limit}


def write_reports(summary: dict, output_dir: str, use_paper_scale: bool = False) -> None:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for approach, points in summary["curves"].items():
        with open(out / f"ecdf__{approach}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sigma_seconds", "solved_fraction"])
            w.writerows(points)
    with open(out / "medians.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "approach", "n_seeds", "n_finished",
                    "median_time", "median_accuracy", "median_mcc"])
        for row in summary["medians"]:
            acc, mc = row["median_accuracy"], row["median_mcc"]
            if use_paper_scale and isinstance(acc, float):
                acc = paper_scale(acc, "accuracy")
            if use_paper_scale and isinstance(mc, float):
                mc = paper_scale(mc, "mcc")
            w.writerow([row["instance"], row["approach"], row["n_seeds"],
                        row["n_finished"], row["median_time"], acc, mc])


def load_cells(results_dir: str) -> list:
    cells = []
    for path in sorted(Path(results_dir, "cells").glob("*.json")):
        with open(path) as fh:
            cells.append(json.load(fh))
    if not cells:
        raise ValueError(f"no cell files under {results_dir}/cells")
    return cells
