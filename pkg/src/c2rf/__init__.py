"""Semi-supervised binary classification that weights a tree ensemble's
votes against a known positive-class count via a big-M MILP, with exact
presolve reductions, priority branching, and a majority-vote baseline."""

from .bnb import SolverConfig, Solution, branching_priorities, brute_force_solve, solve_milp
from .dataset import Dataset, SplitDataset, draw_sample, load_csv, scale
from .forest import DecisionTree, Forest, TreeParams, VoteMatrix, majority_vote, train_forest, vote_matrix
from .metrics import Confusion, accuracy, confusion, deltas, ecdf, mcc
from .milp import Basis, Constraint, LpResult, MilpModel, Variable, export_mps, import_mps, solve_lp
from .model import ModelSpec, big_m, build_milp, eta_bar
from .pipeline import RunConfig, ResultsBundle, benchmark, run_pipeline
from .presolve import FixReport, PresolveMap, fix_variables, lift_solution, merge_points, merge_trees, presolve, update_lambda

__version__ = "0.1.0"
