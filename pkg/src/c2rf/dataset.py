"""Dataset ingestion, coordinate scaling, and labeled/unlabeled sampling.

All randomness flows through numpy's PCG64 generator seeded explicitly, so
every split is reproducible across platforms.  Operations are pure given
(input, seed) and never mutate their arguments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import pandas as pd

SCALE_LIMIT = 100.0  # half-range beyond which a coordinate is compressed


@dataclass
class Dataset:
    """Numeric features (p x N, points are columns), labels in {-1,+1},
    and stable per-point identifiers (source row numbers)."""

    features: np.ndarray
    labels: np.ndarray
    ids: list

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.features.ndim != 2:
            raise ValueError("features must be a p x N matrix")
        p, N = self.features.shape
        if p < 1 or N < 2:
            raise ValueError(f"need p >= 1 and N >= 2, got p={p}, N={N}")
        if self.labels.shape != (N,):
            raise ValueError("labels length must equal the number of points")
        if not np.all(np.abs(self.labels) == 1):
            raise ValueError("labels must be -1 or +1")
        if np.isnan(self.features).any():
            raise ValueError("features contain missing values")
        if len(self.ids) != N:
            raise ValueError("ids length must equal the number of points")

    @property
    def n_features(self) -> int:
        return self.features.shape[0]

    @property
    def n_points(self) -> int:
        return self.features.shape[1]

    def to_json(self) -> dict:
        return {
            "format": "c2rf-dataset",
            "version": 1,
            "features": self.features.tolist(),
            "labels": self.labels.tolist(),
            "ids": list(self.ids),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Dataset":
        if obj.get("format") != "c2rf-dataset":
            raise ValueError("not a dataset JSON object")
        return cls(np.array(obj["features"], dtype=float),
                   np.array(obj["labels"], dtype=np.int8), list(obj["ids"]))

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path: str) -> "Dataset":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass
class SplitDataset:
    """A labeled/unlabeled partition with the positive count of the
    unlabeled part as the class-cardinality target.

    Ground truth of the unlabeled points is retained for evaluation only;
    nothing downstream of sampling may train on it.
    """

    labeled_indices: np.ndarray
    labeled_labels: np.ndarray
    unlabeled_indices: np.ndarray
    unlabeled_truth: np.ndarray
    lam: int

    def __post_init__(self):
        self.labeled_indices = np.asarray(self.labeled_indices, dtype=np.int64)
        self.labeled_labels = np.asarray(self.labeled_labels, dtype=np.int8)
        self.unlabeled_indices = np.asarray(self.unlabeled_indices, dtype=np.int64)
        self.unlabeled_truth = np.asarray(self.unlabeled_truth, dtype=np.int8)
        if set(self.labeled_indices) & set(self.unlabeled_indices):
            raise ValueError("labeled and unlabeled parts overlap")
        if self.lam != int(np.sum(self.unlabeled_truth == 1)):
            raise ValueError("target must equal the unlabeled positive count")
        if not 0 <= self.lam <= self.m:
            raise ValueError("target outside [0, m]")

    @property
    def n(self) -> int:
        return len(self.labeled_indices)

    @property
    def m(self) -> int:
        return len(self.unlabeled_indices)

    def to_json(self) -> dict:
        return {
            "format": "c2rf-split",
            "version": 1,
            "labeled_indices": self.labeled_indices.tolist(),
            "labeled_labels": self.labeled_labels.tolist(),
            "unlabeled_indices": self.unlabeled_indices.tolist(),
            "unlabeled_truth": self.unlabeled_truth.tolist(),
            "lambda": int(self.lam),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SplitDataset":
        if obj.get("format") != "c2rf-split":
            raise ValueError("not a split JSON object")
        return cls(np.array(obj["labeled_indices"]), np.array(obj["labeled_labels"]),
                   np.array(obj["unlabeled_indices"]), np.array(obj["unlabeled_truth"]),
                   int(obj["lambda"]))

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path: str) -> "SplitDataset":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def load_csv(path: str, label_column: str, delimiter: str = ",",
             positive_label: str = "1") -> Dataset:
    """Read a headered CSV into a binary dataset.

    Rows with missing fields are dropped first, then exact duplicate rows.
    Two-class data labeled {-1,+1} passes through; otherwise the class whose
    string form equals `positive_label` maps to +1 and the remaining one or
    two classes map to -1.  More than three classes is an error.
    """
    try:
        frame = pd.read_csv(path, delimiter=delimiter)
    except Exception as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc
    if label_column not in frame.columns:
        raise ValueError(f"label column {label_column!r} not in {list(frame.columns)}")
    frame = frame.dropna()
    frame = frame.drop_duplicates()
    if len(frame) < 2:
        raise ValueError("fewer than 2 rows remain after cleaning")
    raw_labels = frame[label_column]
    classes = sorted(set(str(v) for v in raw_labels))
    if len(classes) > 3:
        raise ValueError(f"{len(classes)} classes found; at most 3 supported")
    if len(classes) < 2:
        raise ValueError("label column holds a single class")
    if set(classes) <= {"-1", "1", "-1.0", "1.0"} and len(classes) == 2:
        labels = np.where(raw_labels.astype(float) > 0, 1, -1)
    else:
        if positive_label not in classes:
            raise ValueError(f"positive class {positive_label!r} not among {classes}; "
                             "pass the intended positive label explicitly")
        labels = np.where(raw_labels.astype(str).values == positive_label, 1, -1)
    feature_frame = frame.drop(columns=[label_column])
    try:
        features = feature_frame.astype(float).values.T
    except (TypeError, ValueError) as exc:
        raise ValueError(f"non-numeric feature column: {exc}") from exc
    return Dataset(features, labels.astype(np.int8), frame.index.tolist())


def scale(d: Dataset) -> Dataset:
    """Center each coordinate at the midpoint of its range; coordinates whose
    shifted range still leaves [-100, 100] are affinely compressed onto
    exactly that interval.  Idempotent, and constant coordinates map to 0."""
    feats = d.features.copy()
    for j in range(feats.shape[0]):
        lo = feats[j].min()
        hi = feats[j].max()
        mid = 0.5 * (lo + hi)
        if abs(mid) < 1e-12 * max(1.0, hi - lo):
            mid = 0.0  # already centered up to rounding; keep scale idempotent
        feats[j] -= mid
        shifted_lo = lo - mid
        shifted_hi = hi - mid
        if shifted_lo < -SCALE_LIMIT or shifted_hi > SCALE_LIMIT:
            span = shifted_hi - shifted_lo
            feats[j] = 2 * SCALE_LIMIT * (feats[j] - shifted_lo) / span - SCALE_LIMIT
    return Dataset(feats, d.labels.copy(), list(d.ids))


def draw_sample(d: Dataset, labeled_fraction: float, mode: str = "simple",
                p_pos: float = 0.85, seed: int = 0) -> SplitDataset:
    """Partition the dataset into n = round(labeled_fraction * N) labeled
    points and m = N - n unlabeled points.

    simple mode draws the labeled set uniformly without replacement.  biased
    mode fills each labeled slot by first flipping a p_pos coin for the
    class, then drawing uniformly within that class, falling back to the
    other class when one runs out; the marginal inclusion bias matches the
    coin.  The target is the exact positive count among the unlabeled part.
    """
    N = d.n_points
    if not 0 < labeled_fraction < 1:
        raise ValueError("labeled fraction must be strictly between 0 and 1")
    n = int(round(labeled_fraction * N))
    if n < 1:
        raise ValueError(f"labeled fraction {labeled_fraction} rounds to an empty labeled set")
    if n >= N:
        raise ValueError(f"labeled fraction {labeled_fraction} leaves no unlabeled points")
    rng = np.random.Generator(np.random.PCG64(seed))
    if mode == "simple":
        labeled = np.sort(rng.choice(N, size=n, replace=False))
    elif mode == "biased":
        if not 0 < p_pos < 1:
            raise ValueError("class-inclusion probability must be in (0, 1)")
        pos_pool = np.nonzero(d.labels == 1)[0].tolist()
        neg_pool = np.nonzero(d.labels == -1)[0].tolist()
        if not pos_pool or not neg_pool:
            raise ValueError("biased sampling needs both classes present")
        chosen = []
        for _ in range(n):
            want_pos = rng.random() < p_pos
            pool = pos_pool if (want_pos and pos_pool) or not neg_pool else neg_pool
            k = int(rng.integers(0, len(pool)))
            chosen.append(pool.pop(k))
        labeled = np.sort(np.array(chosen, dtype=np.int64))
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    mask = np.zeros(N, dtype=bool)
    mask[labeled] = True
    unlabeled = np.nonzero(~mask)[0]
    truth = d.labels[unlabeled]
    return SplitDataset(labeled, d.labels[labeled], unlabeled, truth,
                        int(np.sum(truth == 1)))
