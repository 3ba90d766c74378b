"""Latent-to-Bloch regressors: multi-output linear least squares (the
reference method) and an extremely randomized trees ensemble baseline.

The tree ensemble follows the classic recipe: at every node a fixed
number of candidate features is drawn, one uniform threshold is drawn
per candidate inside the feature's observed range, and the candidate
with the smallest pooled child variance of the targets wins. Leaves
store target means; the forest prediction is the average over trees.
Per-tree generators are derived from (seed, tree index), so results do
not depend on build order or parallelism.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LinearModel",
    "ETRModel",
    "Tree",
    "linfit",
    "linpredict",
    "etr_fit",
    "etr_predict",
]


@dataclass
class LinearModel:
    weights: np.ndarray  # (q, n)
    intercept: np.ndarray  # (q,)
    ridge_lambda: float = 0.0
    rank_deficient: bool = False

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights.shape[0]


def linfit(
    latents: np.ndarray, targets: np.ndarray, ridge_lambda: float = 0.0
) -> LinearModel:
    """Least-squares fit of targets ~ W latents + w0.

    Minimizes sum ||W z_i + w0 - b_i||^2 + lambda ||W||_F^2 with the
    intercept left unpenalized (handled by centering). With lambda=0 a
    rank-deficient system yields the minimum-norm solution and sets the
    rank_deficient flag.
    """
    z = np.atleast_2d(np.asarray(latents, dtype=np.float64))
    b = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if z.shape[0] != b.shape[0]:
        raise ValueError("latents and targets disagree on sample count")
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be nonnegative")
    n_samples, n_latent = z.shape
    if n_samples <= n_latent:
        warnings.warn(
            f"fitting {n_latent} inputs from only {n_samples} samples",
            stacklevel=2,
        )
    z_mean = z.mean(axis=0)
    b_mean = b.mean(axis=0)
    zc = z - z_mean
    bc = b - b_mean
    rank_deficient = False
    if ridge_lambda == 0.0:
        sol, _, rank, _ = np.linalg.lstsq(zc, bc, rcond=None)
        rank_deficient = rank < n_latent
    else:
        aug = np.vstack([zc, math.sqrt(ridge_lambda) * np.eye(n_latent)])
        rhs = np.vstack([bc, np.zeros((n_latent, bc.shape[1]))])
        sol, _, _, _ = np.linalg.lstsq(aug, rhs, rcond=None)
    weights = sol.T
    intercept = b_mean - weights @ z_mean
    return LinearModel(
        weights=weights,
        intercept=intercept,
        ridge_lambda=float(ridge_lambda),
        rank_deficient=rank_deficient,
    )


def linpredict(model: LinearModel, z: np.ndarray) -> np.ndarray:
    """Raw regression output W z + w0 (no physicality guarantee)."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != model.input_dim:
        raise ValueError(f"expected last axis {model.input_dim}, got {z.shape}")
    return z @ model.weights.T + model.intercept


@dataclass
class Tree:
    """Flat array encoding of one binary tree.

    feature[i] < 0 marks node i as a leaf whose prediction is value[i];
    otherwise samples with z[feature[i]] <= threshold[i] continue at
    left[i], the rest at right[i].
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, q); meaningful on leaves only


@dataclass
class ETRModel:
    trees: list[Tree]
    n_features: int
    n_outputs: int
    n_trees: int
    min_samples_split: int
    n_candidate_features: int
    max_depth: int | None
    seed: int


def _grow_tree(
    z: np.ndarray,
    y: np.ndarray,
    row_sq: np.ndarray,
    rng: np.random.Generator,
    min_samples_split: int,
    n_candidates: int,
    max_depth: int | None,
) -> Tree:
    n_features = z.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(None)
        return len(feature) - 1

    # worklist of (node_id, sample indices, depth); deterministic order
    stack = [(new_node(), np.arange(z.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        n = idx.size
        sse_total = row_sq[idx].sum() - (ys.sum(axis=0) ** 2).sum() / n
        if (
            n < min_samples_split
            or (max_depth is not None and depth >= max_depth)
            or sse_total <= 1e-14 * n
        ):
            value[node] = ys.mean(axis=0)
            continue
        feats = rng.choice(n_features, size=min(n_candidates, n_features), replace=False)
        zi = z[idx][:, feats]
        lo = zi.min(axis=0)
        hi = zi.max(axis=0)
        u = rng.random(feats.size)
        thresholds = lo + u * (hi - lo)
        masks = zi <= thresholds
        n_left = masks.sum(axis=0)
        valid = (hi > lo) & (n_left > 0) & (n_left < n)
        if not np.any(valid):
            value[node] = ys.mean(axis=0)
            continue
        sums_left = masks.T.astype(np.float64) @ ys
        sq_left = masks.T.astype(np.float64) @ row_sq[idx]
        sums_all = ys.sum(axis=0)
        sq_all = row_sq[idx].sum()
        n_right = n - n_left
        with np.errstate(divide="ignore", invalid="ignore"):
            score = (
                sq_left
                - (sums_left**2).sum(axis=1) / n_left
                + (sq_all - sq_left)
                - ((sums_all - sums_left) ** 2).sum(axis=1) / n_right
            )
        score[~valid] = np.inf
        best = int(np.argmin(score))
        mask = masks[:, best]
        feature[node] = int(feats[best])
        threshold[node] = float(thresholds[best])
        left[node] = new_node()
        right[node] = new_node()
        stack.append((right[node], idx[~mask], depth + 1))
        stack.append((left[node], idx[mask], depth + 1))

    q = y.shape[1]
    values = np.zeros((len(feature), q))
    for i, v in enumerate(value):
        if v is not None:
            values[i] = v
    return Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=values,
    )


def etr_fit(
    latents: np.ndarray,
    targets: np.ndarray,
    n_trees: int = 100,
    min_samples_split: int = 5,
    n_candidate_features: int | None = None,
    max_depth: int | None = None,
    seed: int = 0,
) -> ETRModel:
    """Fit an extremely randomized trees ensemble; deterministic per seed."""
    z = np.ascontiguousarray(np.atleast_2d(latents), dtype=np.float64)
    y = np.ascontiguousarray(np.atleast_2d(targets), dtype=np.float64)
    if z.shape[0] != y.shape[0]:
        raise ValueError("latents and targets disagree on sample count")
    if z.shape[0] < 1:
        raise ValueError("need at least one sample")
    if min_samples_split < 2:
        raise ValueError("min_samples_split must be >= 2")
    if n_candidate_features is None:
        n_candidate_features = max(1, math.ceil(math.sqrt(z.shape[1])))
    row_sq = np.einsum("ij,ij->i", y, y)
    trees = [
        _grow_tree(
            z,
            y,
            row_sq,
            np.random.default_rng([seed, t]),
            min_samples_split,
            n_candidate_features,
            max_depth,
        )
        for t in range(n_trees)
    ]
    return ETRModel(
        trees=trees,
        n_features=z.shape[1],
        n_outputs=y.shape[1],
        n_trees=n_trees,
        min_samples_split=min_samples_split,
        n_candidate_features=n_candidate_features,
        max_depth=max_depth,
        seed=seed,
    )


def _tree_apply(tree: Tree, z: np.ndarray) -> np.ndarray:
    node = np.zeros(z.shape[0], dtype=np.int32)
    active = tree.feature[node] >= 0
    while np.any(active):
        cur = node[active]
        f = tree.feature[cur]
        goes_left = z[active, f] <= tree.threshold[cur]
        node[active] = np.where(goes_left, tree.left[cur], tree.right[cur])
        active = tree.feature[node] >= 0
    return tree.value[node]


def etr_predict(model: ETRModel, z: np.ndarray) -> np.ndarray:
    """Average of the leaf vectors reached in each tree; accepts batches."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    if z.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {z.shape[1]}")
    out = np.zeros((z.shape[0], model.n_outputs))
    for tree in model.trees:
        out += _tree_apply(tree, z)
    out /= len(model.trees)
    return out
