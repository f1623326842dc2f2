"""Branch-and-bound for the vote-weighting MILP, plus a brute-force oracle.

Node selection is best-bound with depth-first plunging: after branching,
the preferred child is solved immediately with the parent's basis while the
sibling waits on the heap.  Because the objective is integral whenever the
point multiplicities and the target are integers, node bounds are ceiled
before pruning comparisons, which closes nodes as soon as their ceiling
meets the incumbent.

Branching follows the unanimity-priority rule when priorities are given:
among fractional binaries, the one whose point column is most lopsided
(highest rank of |weighted mean vote|) is branched first.
"""

from __future__ import annotations

import csv
import heapq
import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .forest import VoteMatrix
from .milp import Basis, Constraint, MilpModel, Variable, solve_lp

FRAC_TOL = 1e-6  # integrality test on LP values
FEAS_TOL = 1e-6  # solution feasibility checks


@dataclass
class SolverConfig:
    priorities: np.ndarray = None  # higher rank -> branch earlier
    gap: float = 1e-6  # absolute optimality gap
    time_limit: float = 7200.0  # seconds
    node_limit: int = None
    strategy: str = "best-bound"  # or "depth-first"
    trace_path: str = None  # per-node CSV when set

    def validate(self, n_binaries: int) -> None:
        if self.gap < 0:
            raise ValueError("gap must be nonnegative")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time limit must be positive")
        if self.node_limit is not None and self.node_limit <= 0:
            raise ValueError("node limit must be positive")
        if self.strategy not in ("best-bound", "depth-first"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.priorities is not None and len(self.priorities) != n_binaries:
            raise ValueError("priority vector length must match the binary count")


@dataclass
class Solution:
    alpha: np.ndarray
    eta: float
    z: np.ndarray
    status: str  # "optimal" | "feasible" | "infeasible" | "unknown"
    objective: float
    stats: dict = field(default_factory=dict)


def branching_priorities(R: VoteMatrix) -> np.ndarray:
    """Rank of |weighted mean vote| per point, increasing order, dense
    0-based ranks with ties sharing the lower rank.  Higher rank means the
    trees are more unanimous on the point, which branches earlier."""
    sums = np.abs(R.tree_weights @ R.votes.astype(np.int64))
    # |mean| ranks equal |sum| ranks since t_eff is a common denominator
    unique = np.unique(sums)
    return np.searchsorted(unique, sums).astype(np.int64)


class _Node:
    __slots__ = ("bound", "seq", "overrides", "warm", "depth")

    def __init__(self, bound, seq, overrides, warm, depth):
        self.bound = bound
        self.seq = seq
        self.overrides = overrides
        self.warm = warm
        self.depth = depth

    def __lt__(self, other):
        # best bound first; among equal bounds the deepest node continues an
        # interrupted dive, which reaches integral leaves quickly
        return (self.bound, -self.depth, self.seq) < (other.bound, -other.depth, other.seq)


def solve_milp(model: MilpModel, cfg: SolverConfig = None) -> Solution:
    """Solve a model whose integral variables are all binary.

    Returns the optimum within the configured gap, or the best incumbent
    with a valid global lower bound when a limit stops the search.  The
    search is sequential and deterministic.
    """
    cfg = cfg or SolverConfig()
    binaries = model.integral_indices()
    cfg.validate(len(binaries))
    for j in binaries:
        v = model.variables[j]
        if not (v.lower >= -FEAS_TOL and v.upper <= 1 + FEAS_TOL):
            raise ValueError(f"integral variable {v.name} is not binary")
    bin_pos = {j: k for k, j in enumerate(binaries)}
    meta = model.metadata
    integral_obj = bool(meta.get("integral_objective", False))
    lam = meta.get("lambda")
    point_weights = meta.get("point_weights")
    if point_weights is not None:
        point_weights = np.asarray(point_weights, dtype=float)
    priorities = None
    if cfg.priorities is not None:
        priorities = np.asarray(cfg.priorities, dtype=np.int64)

    def strengthen(bound: float) -> float:
        return math.ceil(bound - FEAS_TOL) if integral_obj else bound

    trace = None
    trace_fh = None
    if cfg.trace_path:
        trace_fh = open(cfg.trace_path, "w", newline="")
        trace = csv.writer(trace_fh)
        trace.writerow(["node", "depth", "bound", "n_fractional", "branch_var"])

    t0 = time.monotonic()
    nodes = 0
    lp_iterations = 0
    incumbent = None  # (objective, x)
    incumbents_seen = []
    heap = []
    seq = 0
    root = _Node(-math.inf, seq, {}, None, 0)
    current = root
    limit_hit = None
    exhausted = False
    # recently pushed siblings keep the parent's basis inverse (they are
    # popped soonest under the deep-first tie rule); older ones drop it so
    # open-node memory stays bounded
    recent_warm = deque()
    WARM_WINDOW = 8

    def out_of_budget():
        nonlocal limit_hit
        if cfg.time_limit is not None and time.monotonic() - t0 > cfg.time_limit:
            limit_hit = "time"
            return True
        if cfg.node_limit is not None and nodes >= cfg.node_limit:
            limit_hit = "nodes"
            return True
        return False

    bin_arr = np.array(binaries, dtype=np.int64)

    def pick_branch_var(x) -> int:
        vals = x[bin_arr]
        dist = np.abs(vals - np.round(vals))
        frac = dist > FRAC_TOL
        if not frac.any():
            return -1
        if priorities is not None:
            # max priority; ties toward the lower point index
            key = np.where(frac, priorities, -1)
            return int(bin_arr[np.argmax(key)])
        key = np.where(frac, dist, -1.0)
        return int(bin_arr[np.argmax(key)])

    def prefer_one_first(x, branch_j) -> bool:
        if lam is None or point_weights is None:
            return bool(x[branch_j] >= 0.5)  # generic model: follow the LP value
        return float(point_weights @ x[bin_arr]) < lam - FEAS_TOL

    while True:
        if current is None:
            # backtrack: fetch the most promising open node
            while heap:
                nxt = heapq.heappop(heap) if cfg.strategy == "best-bound" else heap.pop()
                eff = strengthen(nxt.bound) if nxt.bound > -math.inf else nxt.bound
                if incumbent is not None and eff >= incumbent[0] - cfg.gap:
                    continue  # pruned by a newer incumbent
                current = nxt
                break
            else:
                exhausted = True
                break
        if out_of_budget():
            break
        res = solve_lp(model, overrides=current.overrides, warm=current.warm)
        nodes += 1
        lp_iterations += res.iterations
        if res.status == "iteration-limit":
            # one sound retry from scratch with a raised cap; a node may
            # never be pruned on an unproven bound
            res = solve_lp(model, overrides=current.overrides,
                           iteration_limit=50 * (model.n_rows + model.n_vars) + 1000)
            lp_iterations += res.iterations
            if res.status == "iteration-limit":
                raise RuntimeError("node LP hit the iteration limit twice; cannot bound soundly")
        if res.status == "infeasible":
            if trace:
                trace.writerow([nodes, current.depth, "inf", "", ""])
            current = None
            continue
        bound = res.objective
        eff_bound = strengthen(bound)
        current.bound = bound
        if incumbent is not None and eff_bound >= incumbent[0] - cfg.gap:
            if trace:
                trace.writerow([nodes, current.depth, bound, "", "pruned"])
            current = None
            continue
        branch_j = pick_branch_var(res.x)
        if trace:
            vals = res.x[bin_arr]
            nfrac = int(np.sum(np.abs(vals - np.round(vals)) > FRAC_TOL))
            trace.writerow([nodes, current.depth, bound, nfrac,
                            model.variables[branch_j].name if branch_j >= 0 else "leaf"])
        if branch_j < 0:
            # integral LP optimum: incumbent for this subtree
            if incumbent is None or eff_bound < incumbent[0] - 1e-12:
                incumbent = (eff_bound if integral_obj else bound, res.x.copy())
                incumbents_seen.append(incumbent[0])
            current = None
            continue
        one_first = prefer_one_first(res.x, branch_j)
        first_ov = dict(current.overrides)
        second_ov = dict(current.overrides)
        first_ov[branch_j] = (1.0, 1.0) if one_first else (0.0, 0.0)
        second_ov[branch_j] = (0.0, 0.0) if one_first else (1.0, 1.0)
        seq += 1
        sibling = _Node(bound, seq, second_ov, res.basis, current.depth + 1)
        recent_warm.append(sibling)
        if len(recent_warm) > WARM_WINDOW:
            old = recent_warm.popleft()
            if old.warm is not None and old.warm.binv is not None:
                old.warm = Basis(old.warm.basic, old.warm.vstat)
        if cfg.strategy == "best-bound":
            heapq.heappush(heap, sibling)
        else:
            heap.append(sibling)
        seq += 1
        current = _Node(bound, seq, first_ov, res.basis, current.depth + 1)

    wall = time.monotonic() - t0
    open_bounds = [n.bound for n in heap if n.bound > -math.inf]
    if current is not None and current.bound > -math.inf:
        open_bounds.append(current.bound)
    if exhausted:
        lower = incumbent[0] if incumbent is not None else math.inf
    else:
        candidates = [strengthen(b) for b in open_bounds]
        if incumbent is not None:
            candidates.append(incumbent[0])
        lower = min(candidates) if candidates else -math.inf
    if trace_fh:
        trace_fh.close()

    stats = {
        "nodes": nodes,
        "lp_iterations": lp_iterations,
        "wall_time": wall,
        "incumbents": incumbents_seen,
        "lower_bound": lower,
        "limit": limit_hit,
    }
    if incumbent is None:
        if exhausted:
            return Solution(None, None, None, "infeasible", None, stats)
        return Solution(None, None, None, "unknown", None, stats)
    obj, x = incumbent
    stats["gap"] = max(0.0, obj - lower)
    status = "optimal" if exhausted or stats["gap"] <= cfg.gap else "feasible"
    t = meta.get("n_tree_groups")
    if t is None:
        t = min(binaries) if binaries else model.n_vars  # continuous prefix
    alpha = np.array(x[:t], dtype=float) if t else np.zeros(0)
    eta = float(obj)
    z = np.array([int(round(x[j])) for j in binaries], dtype=np.int8)
    return Solution(alpha, eta, z, status, float(obj), stats)


def _alpha_feasible(wcols: np.ndarray, signs: np.ndarray, ell: float, u: float):
    """Does some weight vector in [ell, u]^t push every required column
    beyond its margin?  wcols is t x k with tree multiplicities folded in;
    signs[i] = +1 requires activity >= 1, -1 requires <= -1.
    Returns the weight vector or None."""
    t, k = wcols.shape
    if t == 0:
        return None if k else np.zeros(0)
    if k == 0:
        return np.full(t, ell)
    rows = []
    for i in range(k):
        coefs = wcols[:, i].tolist()
        if signs[i] > 0:
            rows.append(Constraint(f"m{i}", list(range(t)), coefs, lower=1.0))
        else:
            rows.append(Constraint(f"m{i}", list(range(t)), coefs, upper=-1.0))
    model = MilpModel([Variable(f"a{j}", ell, u) for j in range(t)], rows, {})
    res = solve_lp(model)
    return res.x if res.status == "optimal" else None


def brute_force_solve(R: VoteMatrix, lam: int, ell: float, u: float,
                      collect_all: bool = False) -> Solution:
    """Exhaustive oracle: enumerate every binary assignment, check whether
    some weight vector realizes it, score it by the weighted deviation from
    the target, and return the lexicographically smallest optimum.

    Capped at 20 effective points (2^m enumeration).  With collect_all the
    stats carry every optimal assignment, not just the first.
    """
    m = R.n_points
    if R.m_eff > 20:
        raise ValueError(f"oracle supports at most 20 effective points, got {R.m_eff}")
    if not 0 <= lam:
        raise ValueError("target must be nonnegative")
    t0 = time.monotonic()
    wcols = R.weighted_columns()
    w = R.point_weights.astype(np.int64)
    # per-column realizable signs: highest / lowest achievable activity
    b = R.tree_weights.astype(float) @ (R.votes == 1)
    a = float(R.tree_weights.sum()) - b
    can_pos = (-ell * a + u * b) >= 1.0  # best case reaches the +1 margin
    can_neg = (-u * a + ell * b) <= -1.0  # worst case reaches the -1 margin
    col_keys = [np.ascontiguousarray(R.votes[:, i]).tobytes() for i in range(m)]
    feas_cache = {}

    best_obj = None
    best = None  # (z tuple, alpha)
    all_best = []
    checks = 0
    for code in range(1 << m):
        z = tuple((code >> (m - 1 - i)) & 1 for i in range(m))
        zi = np.array(z, dtype=bool)
        if np.any(zi & ~can_pos) or np.any(~zi & ~can_neg):
            continue
        obj = abs(int(w @ zi.astype(np.int64)) - lam)
        if best_obj is not None:
            if obj > best_obj or (obj == best_obj and not collect_all):
                continue
        # conflicting requirements on identical columns are infeasible outright
        assign = {}
        conflict = False
        for i in range(m):
            prev = assign.setdefault(col_keys[i], z[i])
            if prev != z[i]:
                conflict = True
                break
        if conflict:
            continue
        key = tuple(sorted(assign.items()))
        if key in feas_cache:
            alpha = feas_cache[key]
        else:
            signs = np.array([1 if z[i] else -1 for i in range(m)])
            alpha = _alpha_feasible(wcols, signs, ell, u)
            feas_cache[key] = alpha
            checks += 1
        if alpha is None:
            continue
        if best_obj is None or obj < best_obj:
            best_obj = obj
            best = (z, alpha)
            all_best = [z]
        elif collect_all and obj == best_obj and z != best[0]:
            all_best.append(z)

    stats = {"wall_time": time.monotonic() - t0, "lp_checks": checks,
             "nodes": 0, "lp_iterations": 0}
    if best is None:
        return Solution(None, None, None, "infeasible", None, stats)
    z, alpha = best
    if collect_all:
        stats["all_optimal_z"] = all_best
    return Solution(np.asarray(alpha, dtype=float), float(best_obj),
                    np.array(z, dtype=np.int8), "optimal", float(best_obj), stats)
