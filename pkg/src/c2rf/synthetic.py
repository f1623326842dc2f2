"""Synthetic dataset generators for benchmarks and self-contained runs."""

from __future__ import annotations

import numpy as np

from .dataset import Dataset


def two_gaussians(n_points: int = 2000, n_features: int = 2,
                  separation: float = 2.0, pos_fraction: float = 0.5,
                  seed: int = 0) -> Dataset:
    """Two spherical Gaussian clusters, one per class, centered at
    +-separation/2 along the all-ones direction."""
    if n_points < 2 or n_features < 1:
        raise ValueError("need at least 2 points and 1 feature")
    if not 0 < pos_fraction < 1:
        raise ValueError("positive fraction must be in (0, 1)")
    rng = np.random.Generator(np.random.PCG64(seed))
    n_pos = int(round(pos_fraction * n_points))
    n_pos = min(max(n_pos, 1), n_points - 1)
    offset = (separation / 2.0) / np.sqrt(n_features)
    pos = rng.normal(loc=offset, scale=1.0, size=(n_features, n_pos))
    neg = rng.normal(loc=-offset, scale=1.0, size=(n_features, n_points - n_pos))
    features = np.concatenate([pos, neg], axis=1)
    labels = np.concatenate([np.ones(n_pos, dtype=np.int8),
                             -np.ones(n_points - n_pos, dtype=np.int8)])
    order = rng.permutation(n_points)
    return Dataset(features[:, order], labels[order], order.tolist())


def from_spec(spec: dict) -> Dataset:
    """Build a dataset from a config dictionary, e.g.
    {"kind": "two-gaussians", "n_points": 2000, "seed": 3}."""
    kind = spec.get("kind")
    if kind == "two-gaussians":
        args = {k: v for k, v in spec.items() if k != "kind"}
        return two_gaussians(**args)
    raise ValueError(f"unknown synthetic dataset kind {kind!r}")
