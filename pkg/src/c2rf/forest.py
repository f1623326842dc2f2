"""Decision-tree ensemble over the labeled points and its vote matrix.

Trees are deterministic CART stumps/trees: Gini impurity, axis-aligned
binary splits at midpoints between consecutive distinct values, grown to
purity or `max_depth`, no pruning.  All tie-breaks (split feature,
threshold, leaf label) are fixed so a seed fully determines the forest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TreeParams:
    max_depth: int = 10
    min_samples_leaf: int = 1


@dataclass
class VoteMatrix:
    """t x m matrix of per-tree votes in {-1,+1} over the unlabeled points.

    `tree_weights` and `point_weights` are positive integer multiplicities;
    both are all ones until the presolve reductions merge duplicate rows or
    columns.
    """

    votes: np.ndarray
    tree_weights: np.ndarray = None
    point_weights: np.ndarray = None

    def __post_init__(self):
        self.votes = np.asarray(self.votes, dtype=np.int8)
        if self.votes.ndim != 2:
            raise ValueError("votes must be a 2-d array (trees x points)")
        t, m = self.votes.shape
        if self.votes.size and not np.all(np.abs(self.votes) == 1):
            raise ValueError("votes must be -1 or +1")
        if self.tree_weights is None:
            self.tree_weights = np.ones(t, dtype=np.int64)
        else:
            self.tree_weights = np.asarray(self.tree_weights, dtype=np.int64)
        if self.point_weights is None:
            self.point_weights = np.ones(m, dtype=np.int64)
        else:
            self.point_weights = np.asarray(self.point_weights, dtype=np.int64)
        if self.tree_weights.shape != (t,) or self.point_weights.shape != (m,):
            raise ValueError("weight vectors do not match the vote matrix shape")
        if np.any(self.tree_weights < 1) or np.any(self.point_weights < 1):
            raise ValueError("multiplicities must be positive")

    @property
    def n_trees(self) -> int:
        return self.votes.shape[0]

    @property
    def n_points(self) -> int:
        return self.votes.shape[1]

    @property
    def t_eff(self) -> int:
        """Total tree count represented, including merged duplicates."""
        return int(self.tree_weights.sum())

    @property
    def m_eff(self) -> int:
        """Total point count represented, including merged duplicates."""
        return int(self.point_weights.sum())

    def weighted_columns(self) -> np.ndarray:
        """Columns scaled by tree multiplicities (float), t x m."""
        return self.votes.astype(float) * self.tree_weights[:, None].astype(float)

    def to_json(self) -> dict:
        return {
            "format": "c2rf-votes",
            "version": 1,
            "votes": self.votes.tolist(),
            "tree_weights": self.tree_weights.tolist(),
            "point_weights": self.point_weights.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "VoteMatrix":
        if obj.get("format") != "c2rf-votes":
            raise ValueError("not a vote-matrix JSON object")
        return cls(np.array(obj["votes"], dtype=np.int8),
                   np.array(obj["tree_weights"], dtype=np.int64),
                   np.array(obj["point_weights"], dtype=np.int64))

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path: str) -> "VoteMatrix":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def save_csv(self, path: str) -> None:
        """Compact interchange: one row per tree, one column per point, +-1."""
        with open(path, "w") as fh:
            for row in self.votes:
                fh.write(",".join(str(int(v)) for v in row) + "\n")

    @classmethod
    def load_csv(cls, path: str) -> "VoteMatrix":
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append([int(v) for v in line.split(",")])
        return cls(np.array(rows, dtype=np.int8))


def _gini(counts_pos: np.ndarray, counts_neg: np.ndarray) -> np.ndarray:
    total = counts_pos + counts_neg
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts_pos / total
        g = 1.0 - p * p - (1.0 - p) * (1.0 - p)
    return np.where(total > 0, g, 0.0)


class DecisionTree:
    """Binary CART classifier over labels {-1,+1}."""

    def __init__(self, params: TreeParams = None):
        self.params = params or TreeParams()
        self.root = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "DecisionTree":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be (n_samples, n_features) matching y")
        self.root = self._grow(X, y, depth=0)
        return self

    def _leaf(self, y):
        pos = int(np.sum(y == 1))
        neg = y.size - pos
        # majority label; exact tie resolves to -1
        return {"leaf": 1 if pos > neg else -1}

    def _best_split(self, X, y):
        n, p = X.shape
        best = None  # (cost, feature, threshold)
        pos = (y == 1).astype(np.int64)
        for f in range(p):
            order = np.argsort(X[:, f], kind="stable")
            xs = X[order, f]
            ys = pos[order]
            distinct = np.nonzero(np.diff(xs) > 0)[0]  # split after position k
            if distinct.size == 0:
                continue
            cum_pos = np.cumsum(ys)
            left_n = distinct + 1
            left_pos = cum_pos[distinct]
            right_n = n - left_n
            right_pos = cum_pos[-1] - left_pos
            if self.params.min_samples_leaf > 1:
                ok = (left_n >= self.params.min_samples_leaf) & (right_n >= self.params.min_samples_leaf)
                if not np.any(ok):
                    continue
            else:
                ok = np.ones(distinct.size, dtype=bool)
            gl = _gini(left_pos, left_n - left_pos)
            gr = _gini(right_pos, right_n - right_pos)
            cost = (left_n * gl + right_n * gr) / n
            cost = np.where(ok, cost, np.inf)
            k = int(np.argmin(cost))  # lowest threshold wins ties within a feature
            if not np.isfinite(cost[k]):
                continue
            thr = 0.5 * (xs[distinct[k]] + xs[distinct[k] + 1])
            cand = (float(cost[k]), f, float(thr))
            if best is None or cand[0] < best[0] - 1e-15:
                best = cand  # strictly better; equal cost keeps lower feature index
        return best

    def _grow(self, X, y, depth):
        if depth >= self.params.max_depth or np.all(y == y[0]):
            return self._leaf(y)
        split = self._best_split(X, y)
        if split is None:
            return self._leaf(y)
        _, f, thr = split
        left_mask = X[:, f] <= thr
        if not left_mask.any() or left_mask.all():
            return self._leaf(y)
        return {
            "feature": f,
            "threshold": thr,
            "left": self._grow(X[left_mask], y[left_mask], depth + 1),
            "right": self._grow(X[~left_mask], y[~left_mask], depth + 1),
        }

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape[0], dtype=np.int8)
        for i in range(X.shape[0]):
            node = self.root
            while "leaf" not in node:
                node = node["left"] if X[i, node["feature"]] <= node["threshold"] else node["right"]
            out[i] = node["leaf"]
        return out

    def to_json(self) -> dict:
        return {"params": {"max_depth": self.params.max_depth,
                           "min_samples_leaf": self.params.min_samples_leaf},
                "root": self.root}

    @classmethod
    def from_json(cls, obj: dict) -> "DecisionTree":
        tree = cls(TreeParams(**obj["params"]))
        tree.root = obj["root"]
        return tree


@dataclass
class Forest:
    trees: list
    subset_indices: list
    params: TreeParams = field(default_factory=TreeParams)
    n_features: int = 0

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def to_json(self) -> dict:
        return {
            "format": "c2rf-forest",
            "version": 1,
            "params": {"max_depth": self.params.max_depth,
                       "min_samples_leaf": self.params.min_samples_leaf},
            "n_features": self.n_features,
            "subset_indices": [list(map(int, s)) for s in self.subset_indices],
            "trees": [t.to_json() for t in self.trees],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Forest":
        if obj.get("format") != "c2rf-forest":
            raise ValueError("not a forest JSON object")
        params = TreeParams(**obj["params"])
        trees = [DecisionTree.from_json(t) for t in obj["trees"]]
        return cls(trees, [list(s) for s in obj["subset_indices"]], params,
                   int(obj.get("n_features", 0)))

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path: str) -> "Forest":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def train_forest(features: np.ndarray, labels: np.ndarray, t: int,
                 subset_fraction: float, seed: int,
                 params: TreeParams = None) -> Forest:
    """Train `t` trees, each on an independent uniform subset of the labeled
    data of size round(subset_fraction * n), drawn without replacement
    within a subset.

    `features` is p x n (points are columns).  Per-tree RNG streams are
    spawned from the master seed, so training order (serial or parallel)
    cannot change the result.  A single-class subset yields a constant
    tree; that is allowed.
    """
    params = params or TreeParams()
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if features.ndim != 2:
        raise ValueError("features must be p x n")
    n = features.shape[1]
    if labels.shape != (n,):
        raise ValueError("labels length must match the number of points")
    if t < 1:
        raise ValueError("need at least one tree")
    if not (np.any(labels == 1) and np.any(labels == -1)):
        raise ValueError("labeled data must contain both classes")
    d = int(round(subset_fraction * n))
    if d < 1:
        raise ValueError(f"subset size round({subset_fraction} * {n}) < 1")
    if d > n:
        raise ValueError("subset size exceeds the labeled count")
    X = features.T  # (n, p) for the tree code
    streams = np.random.SeedSequence(seed).spawn(t)
    trees, subsets = [], []
    for j in range(t):
        rng = np.random.Generator(np.random.PCG64(streams[j]))
        idx = rng.choice(n, size=d, replace=False)
        trees.append(DecisionTree(params).fit(X[idx], labels[idx]))
        subsets.append(idx.tolist())
    return Forest(trees, subsets, params, n_features=features.shape[0])


def vote_matrix(forest: Forest, features: np.ndarray) -> VoteMatrix:
    """Per-tree classifications of the given points (p x m, columns are
    points).  All multiplicities start at one."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2:
        raise ValueError("features must be p x m")
    if forest.n_features and features.shape[0] != forest.n_features:
        raise ValueError(f"feature dimension {features.shape[0]} does not match "
                         f"the training dimension {forest.n_features}")
    X = features.T
    votes = np.empty((forest.n_trees, X.shape[0]), dtype=np.int8)
    for j, tree in enumerate(forest.trees):
        votes[j] = tree.predict(X)
    return VoteMatrix(votes)


def majority_vote(R: VoteMatrix) -> np.ndarray:
    """Baseline prediction: sign of the multiplicity-weighted vote sum,
    exact ties resolving to -1."""
    sums = R.tree_weights @ R.votes.astype(np.int64)
    return np.where(sums > 0, 1, -1).astype(np.int8)
