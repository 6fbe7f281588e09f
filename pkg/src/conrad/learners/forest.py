"""Random forest with deterministic, column-order-invariant training.

Each tree bootstraps rows with rng(seed + tree_index). Per-split feature
subsets are drawn from the lexicographically name-sorted column list using
an rng keyed by hash(seed | tree | node-path), so reordering the columns of
the training matrix never changes the fitted forest. Split ties go to the
lower canonical (name-sorted) feature index, then the lower threshold.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from ..volume import NormalizationParams
from .design import DesignMatrix


@dataclass(frozen=True)
class Tree:
    """Flat binary tree; feature -1 marks a leaf, prob1 is P(class 1)."""

    feature: np.ndarray    # int32, split column index or -1
    threshold: np.ndarray  # float64, x <= threshold goes left
    left: np.ndarray       # int32 child ids
    right: np.ndarray
    prob1: np.ndarray      # float64, meaningful at leaves

    def __post_init__(self) -> None:
        for name in ("feature", "threshold", "left", "right", "prob1"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        internal = self.feature >= 0
        if not np.isfinite(self.threshold[internal]).all():
            raise InvalidInputError("internal nodes need finite thresholds")

    def predict_prob1(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                return self.prob1[node]
            rows = np.nonzero(active)[0]
            x = X[rows, feat[rows]]
            goes_left = x <= self.threshold[node[rows]]
            node[rows] = np.where(goes_left, self.left[node[rows]],
                                  self.right[node[rows]])


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[Tree, ...]
    n_trees: int
    seed: int
    feature_names: tuple[str, ...]
    normalization: tuple[NormalizationParams, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.trees) != self.n_trees:
            raise InvalidInputError("tree count mismatch")
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))


def _node_rng(seed: int, tree_index: int, path: str) -> np.random.Generator:
    key = f"{seed}|{tree_index}|{path}".encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


def _best_split(X: np.ndarray, y: np.ndarray, rows: np.ndarray,
                candidates: list[int]) -> tuple[int, float] | None:
    """Lowest-Gini-cost (feature, threshold) over the candidate columns.

    Candidates arrive in canonical order; only a strictly lower cost replaces
    the incumbent, which implements both tie-break rules.
    """
    yr = y[rows]
    size = rows.size
    total1 = int(yr.sum())
    best: tuple[int, float] | None = None
    best_cost = math.inf
    for j in candidates:
        x = X[rows, j]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        boundaries = np.nonzero(xs[1:] > xs[:-1])[0]
        if boundaries.size == 0:
            continue
        cum1 = np.cumsum(yr[order])
        n_left = boundaries + 1.0
        p_left = cum1[boundaries]
        q_left = n_left - p_left
        n_right = size - n_left
        p_right = total1 - p_left
        q_right = n_right - p_right
        cost = (n_left - (p_left**2 + q_left**2) / n_left
                + n_right - (p_right**2 + q_right**2) / n_right)
        k = int(np.argmin(cost))
        if cost[k] < best_cost:
            best_cost = float(cost[k])
            b = boundaries[k]
            best = (j, float((xs[b] + xs[b + 1]) / 2.0))
    return best


def _grow_tree(X: np.ndarray, y: np.ndarray, seed: int, tree_index: int,
               canonical: list[int], n_candidates: int) -> Tree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    prob1: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        prob1.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(X.shape[0]), "")]
    while stack:
        node, rows, path = stack.pop()
        yr = y[rows]
        ones = int(yr.sum())
        if ones == 0 or ones == rows.size:
            prob1[node] = float(ones > 0)
            continue
        rng = _node_rng(seed, tree_index, path)
        picked = rng.choice(len(canonical), size=n_candidates, replace=False)
        candidates = [canonical[c] for c in sorted(picked)]
        split = _best_split(X, y, rows, candidates)
        if split is None:
            # every sampled column is constant here; widen to all columns
            split = _best_split(X, y, rows, canonical)
        if split is None:
            prob1[node] = ones / rows.size  # duplicate rows, conflicting labels
            continue
        j, thr = split
        go_left = X[rows, j] <= thr
        feature[node] = j
        threshold[node] = thr
        left[node] = new_node()
        right[node] = new_node()
        stack.append((right[node], rows[~go_left], path + "R"))
        stack.append((left[node], rows[go_left], path + "L"))

    return Tree(feature=np.asarray(feature, dtype=np.int32),
                threshold=np.asarray(threshold),
                left=np.asarray(left, dtype=np.int32),
                right=np.asarray(right, dtype=np.int32),
                prob1=np.asarray(prob1))


def forest_fit(X: DesignMatrix, y: np.ndarray, n_trees: int = 200,
               seed: int = 0) -> ForestModel:
    """Train a bagged forest of Gini trees grown to purity.

    Single-class training data is legal: every tree is one pure leaf.
    """
    y = np.asarray(y)
    if y.shape != (X.n,):
        raise InvalidInputError(f"labels must have shape ({X.n},), got {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise InvalidInputError("labels must be 0 or 1")
    if n_trees < 1:
        raise InvalidInputError("n_trees must be positive")
    y = y.astype(np.int64)

    canonical = sorted(range(X.d), key=lambda j: X.columns[j])
    n_candidates = max(1, math.isqrt(X.d))
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng(seed + t)
        boot = rng.integers(0, X.n, size=X.n)
        trees.append(_grow_tree(X.values[boot], y[boot], seed, t,
                                canonical, n_candidates))
    return ForestModel(trees=tuple(trees), n_trees=n_trees, seed=seed,
                       feature_names=X.columns)
