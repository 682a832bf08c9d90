"""Leaf-wise gradient boosting with an MAE objective.

The MAE objective is handled exactly for piecewise-constant learners:
trees are grown on the sign of the current residual (the MAE gradient),
then every leaf's value is replaced by the median residual of the rows
it contains, which is the leaf-wise MAE minimizer.  Shrinkage and seeded
row/column subsampling follow the ensemble parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import VollabError
from .tree import RegressionTree, TreeLimits, fit_regression_tree, predict_tree


@dataclass(frozen=True)
class GbdtParams:
    learning_rate: float = 0.005
    min_gain: float = 0.01
    leaves: int = 100
    min_data: int = 20
    max_depth: int = -1  # -1 = unbounded; leaves become the binding constraint
    feature_fraction: float = 0.5
    bagging_fraction: float = 0.9
    bagging_freq: int = 1
    rounds: int = 200
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1:
            raise VollabError("learning_rate must be in (0, 1]")
        if not (0 < self.feature_fraction <= 1 and 0 < self.bagging_fraction <= 1):
            raise VollabError("fractions must be in (0, 1]")
        if self.leaves < 2:
            raise VollabError("leaves must be >= 2")


@dataclass
class GbdtModel:
    params: GbdtParams
    base_score: float  # median of training targets
    trees: list[RegressionTree] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features if self.trees else -1

    def output_bound(self) -> float:
        """Provable half-width of the prediction range around base_score."""
        lam = self.params.learning_rate
        return lam * sum(np.abs(t.leaf_values()).max() for t in self.trees)


def fit_gbdt(X, y, params: GbdtParams) -> GbdtModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n, m = X.shape
    if len(y) != n:
        raise VollabError("X and y must have matching lengths")
    if n < 2 * params.min_data:
        raise VollabError(
            f"need at least {2 * params.min_data} rows for min_data={params.min_data}, got {n}"
        )
    rng = np.random.default_rng(np.random.PCG64(params.seed))
    model = GbdtModel(params, float(np.median(y)))
    F = np.full(n, model.base_score)
    limits = TreeLimits(
        max_leaves=params.leaves,
        max_depth=params.max_depth,
        min_samples_leaf=params.min_data,
        min_gain=params.min_gain,
    )
    for _ in range(params.rounds):
        if params.bagging_fraction < 1.0:
            k = max(2 * params.min_data, int(params.bagging_fraction * n))
            k = min(k, n)
            sub = np.sort(rng.permutation(n)[:k])
        else:
            sub = np.arange(n)
        resid = y[sub] - F[sub]
        grad = np.sign(resid)
        tree_seed = int(rng.integers(0, 2**63 - 1))
        tree = fit_regression_tree(
            X[sub],
            grad,
            policy="leaf",
            limits=limits,
            leaf_value_rule="mean",
            feature_subset=params.feature_fraction if params.feature_fraction < 1 else None,
            seed=tree_seed,
        )
        # MAE-exact leaf values: median of the in-bag residuals per leaf
        leaf_ids = tree.apply(X[sub])
        for j in np.unique(leaf_ids):
            tree.nodes[j].value = float(np.median(resid[leaf_ids == j]))
        model.trees.append(tree)
        F += params.learning_rate * predict_tree(tree, X)
    return model


def predict_gbdt(model: GbdtModel, X) -> np.ndarray | float:
    x = np.asarray(X, dtype=float)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    if model.trees and x2.shape[1] != model.n_features:
        raise VollabError(f"expected {model.n_features} features, got {x2.shape[1]}")
    out = np.full(len(x2), model.base_score)
    for tree in model.trees:
        out += model.params.learning_rate * predict_tree(tree, x2)
    return float(out[0]) if single else out
