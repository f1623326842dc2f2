"""Problem-tailored reductions for the vote-weighting MILP.

Three exact reductions shrink an instance before branch-and-bound:

* variable fixing -- a point every feasible weighting must classify
  positive (or negative) has its binary fixed and leaves the problem;
* duplicate-point merging -- identical vote columns share one binary whose
  multiplicity enters the cardinality window;
* duplicate-tree merging -- identical vote rows share one weight variable
  whose multiplicity scales its row coefficients.

The class-count target is lowered by the number of points fixed positive.
Every reduction is invertible: `PresolveMap` carries enough to lift a
reduced solution back to the original variable space, including the
deviation offset that appears when more points are forced positive than
the target allows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .forest import VoteMatrix


@dataclass
class FixReport:
    """Outcome of the sign-forcing test on every point column.

    phi[i] is the worst-case (lowest) weighted vote sum forcing z_i = 1 when
    >= 1; psi[i] the best-case (highest) sum forcing z_i = 0 when <= -1.
    phi <= psi always holds (psi - phi == (u - ell) * t identically), so the
    two index sets cannot overlap.
    """

    pos: list
    neg: list
    phi: np.ndarray
    psi: np.ndarray


@dataclass
class PresolveStats:
    fixed_pos: int = 0
    fixed_neg: int = 0
    points_before: int = 0
    points_after: int = 0
    trees_before: int = 0
    trees_after: int = 0
    lambda_before: int = 0
    lambda_after: int = 0
    eta_offset: int = 0
    forced_deviation: int = 0  # certificate: optimum is at least this

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class PresolveMap:
    """Invertible record of one presolve run.

    `point_groups` / `tree_groups` list (representative, members) in reduced
    column/row order, indices referring to the original matrix.  Points in
    `fixed.pos` lift to z=1, `fixed.neg` to z=0.  `eta_offset` is
    max(0, fixed_pos - lambda_original): when fixing alone overshoots the
    target, every full-space solution deviates by at least that much, and
    the reduced objective is shifted down by it.
    """

    fixed: FixReport
    point_groups: list
    tree_groups: list
    lambda_original: int
    lambda_reduced: int
    eta_offset: int
    t_original: int
    m_original: int

    def to_json(self) -> dict:
        return {
            "format": "c2rf-presolve-map",
            "version": 1,
            "fixed_pos": list(map(int, self.fixed.pos)),
            "fixed_neg": list(map(int, self.fixed.neg)),
            "phi": self.fixed.phi.tolist(),
            "psi": self.fixed.psi.tolist(),
            "point_groups": [[int(rep), list(map(int, mem))] for rep, mem in self.point_groups],
            "tree_groups": [[int(rep), list(map(int, mem))] for rep, mem in self.tree_groups],
            "lambda_original": self.lambda_original,
            "lambda_reduced": self.lambda_reduced,
            "eta_offset": self.eta_offset,
            "t_original": self.t_original,
            "m_original": self.m_original,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PresolveMap":
        if obj.get("format") != "c2rf-presolve-map":
            raise ValueError("not a presolve-map JSON object")
        rep = FixReport(list(obj["fixed_pos"]), list(obj["fixed_neg"]),
                        np.array(obj["phi"], dtype=float), np.array(obj["psi"], dtype=float))
        return cls(rep,
                   [(int(r), list(m)) for r, m in obj["point_groups"]],
                   [(int(r), list(m)) for r, m in obj["tree_groups"]],
                   int(obj["lambda_original"]), int(obj["lambda_reduced"]),
                   int(obj["eta_offset"]), int(obj["t_original"]), int(obj["m_original"]))

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path: str) -> "PresolveMap":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def fix_variables(R: VoteMatrix, ell: float, u: float) -> FixReport:
    """Sign-forcing test per point column.

    With A_i the (multiplicity-weighted) count of trees voting -1 on point i
    and B_i the weighted count voting +1:

        phi_i = -u*A_i + ell*B_i  >= 1  forces z_i = 1,
        psi_i = -ell*A_i + u*B_i <= -1  forces z_i = 0,

    because any weight vector in [ell, u] keeps the vote sum within
    [phi_i, psi_i].  On an unmerged matrix the weighted counts are plain
    cardinalities; after tree merging they count group sizes, which leaves
    both formulas exact.
    """
    if not 0 < ell < u:
        raise ValueError("need 0 < ell < u")
    w = R.tree_weights.astype(float)
    pos_mask = R.votes == 1
    b = w @ pos_mask  # weighted count of +1 votes per column
    a = w.sum() - b
    phi = -u * a + ell * b
    psi = -ell * a + u * b
    pos = np.nonzero(phi >= 1.0)[0]
    neg = np.nonzero(psi <= -1.0)[0]
    return FixReport(pos.tolist(), neg.tolist(), phi, psi)


def update_lambda(lam: int, p_count: int) -> int:
    """Remaining positive-class budget after fixing: max(0, lam - p_count)."""
    if p_count < 0:
        raise ValueError("fixed-positive count cannot be negative")
    return max(0, lam - p_count)


def _group_duplicates(keys: list):
    """Group equal byte keys; groups ordered by lowest original index, which
    also becomes the representative."""
    first_seen = {}
    groups = []
    for idx, key in enumerate(keys):
        if key in first_seen:
            groups[first_seen[key]][1].append(idx)
        else:
            first_seen[key] = len(groups)
            groups.append((idx, [idx]))
    return groups


def merge_points(R: VoteMatrix):
    """Collapse identical vote columns onto their lowest-index column,
    accumulating point multiplicities.  Exact equality only; votes are
    integers so no tolerance applies."""
    votes = np.ascontiguousarray(R.votes.T)
    groups = _group_duplicates([row.tobytes() for row in votes])
    reps = [rep for rep, _ in groups]
    weights = np.array([R.point_weights[mem].sum() for _, mem in groups], dtype=np.int64)
    reduced = VoteMatrix(R.votes[:, reps], R.tree_weights.copy(), weights)
    return reduced, groups


def merge_trees(R: VoteMatrix):
    """Collapse identical vote rows onto their lowest-index row,
    accumulating tree multiplicities."""
    votes = np.ascontiguousarray(R.votes)
    groups = _group_duplicates([row.tobytes() for row in votes])
    reps = [rep for rep, _ in groups]
    weights = np.array([R.tree_weights[mem].sum() for _, mem in groups], dtype=np.int64)
    reduced = VoteMatrix(R.votes[reps, :], weights, R.point_weights.copy())
    return reduced, groups


def presolve(R: VoteMatrix, lam: int, ell: float, u: float):
    """Full reduction pipeline: fix signs, drop the fixed columns, update
    the target, merge duplicate trees, then merge duplicate points.

    Returns (reduced matrix, reduced target, PresolveMap, PresolveStats).
    When the reduced target exceeds the remaining weighted point capacity,
    `stats.forced_deviation` certifies that every solution deviates by at
    least that amount (the run is still valid; nothing is clamped).
    """
    if lam < 0:
        raise ValueError(f"target must be nonnegative, got {lam}")
    report = fix_variables(R, ell, u)
    m = R.n_points
    keep = np.ones(m, dtype=bool)
    keep[report.pos] = False
    keep[report.neg] = False
    keep_idx = np.nonzero(keep)[0]
    dropped = VoteMatrix(R.votes[:, keep_idx], R.tree_weights.copy(),
                         R.point_weights[keep_idx].copy())
    fixed_pos_weight = int(R.point_weights[report.pos].sum())
    lam_reduced = update_lambda(lam, fixed_pos_weight)
    eta_offset = max(0, fixed_pos_weight - lam)

    tree_merged, tree_groups = merge_trees(dropped)
    reduced, local_point_groups = merge_points(tree_merged)
    # re-express point groups in original column indices
    point_groups = [(int(keep_idx[rep]), [int(keep_idx[i]) for i in members])
                    for rep, members in local_point_groups]

    stats = PresolveStats(
        fixed_pos=len(report.pos),
        fixed_neg=len(report.neg),
        points_before=m,
        points_after=reduced.n_points,
        trees_before=R.n_trees,
        trees_after=reduced.n_trees,
        lambda_before=int(lam),
        lambda_after=int(lam_reduced),
        eta_offset=int(eta_offset),
        forced_deviation=int(max(0, lam_reduced - reduced.m_eff)),
    )
    pmap = PresolveMap(report, point_groups, tree_groups, int(lam),
                       int(lam_reduced), int(eta_offset), R.n_trees, m)
    return reduced, lam_reduced, pmap, stats


def lift_solution(solution, pmap: PresolveMap):
    """Expand a reduced-space solution to the original variable space.

    Tree-group members copy their representative's weight, point-group
    members copy their representative's binary, fixed points take their
    forced value, and the deviation gains `eta_offset`.  The lifted point is
    feasible for the original problem whenever the input was feasible for
    the reduced one.
    """
    from .bnb import Solution  # local import; bnb depends on this module

    if solution.status == "infeasible" or solution.alpha is None:
        return Solution(None, None, None, solution.status, None,
                        dict(solution.stats))
    if len(pmap.tree_groups) != len(solution.alpha):
        raise ValueError("tree-group count does not match the reduced weights")
    if len(pmap.point_groups) != len(solution.z):
        raise ValueError("point-group count does not match the reduced binaries")
    alpha = np.empty(pmap.t_original, dtype=float)
    for value, (rep, members) in zip(solution.alpha, pmap.tree_groups):
        alpha[members] = value
    z = np.empty(pmap.m_original, dtype=np.int8)
    z[pmap.fixed.pos] = 1
    z[pmap.fixed.neg] = 0
    for value, (rep, members) in zip(solution.z, pmap.point_groups):
        z[members] = value
    eta = float(solution.eta) + pmap.eta_offset
    stats = dict(solution.stats)
    stats["eta_offset"] = pmap.eta_offset
    # bound bookkeeping moves to the original objective scale with eta
    if isinstance(stats.get("lower_bound"), (int, float)):
        stats["lower_bound"] = stats["lower_bound"] + pmap.eta_offset
    if "incumbents" in stats:
        stats["incumbents"] = [v + pmap.eta_offset for v in stats["incumbents"]]
    return Solution(alpha, eta, z, solution.status, eta, stats)
