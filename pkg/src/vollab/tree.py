"""Regression tree with leaf-wise (best-gain-first) or level-wise growth.

Shared by the random-forest feature selector and the boosting engine.
Splits scan the midpoints between sorted unique feature values; the gain
is the reduction in total squared error.  Thresholds route strictly-less
to the left.  Ties are broken deterministically by (leaf id, feature
index, threshold).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import VollabError


@dataclass
class TreeLimits:
    max_leaves: int = 31
    max_depth: int = -1  # -1 = unbounded
    min_samples_leaf: int = 1
    min_gain: float = 0.0


@dataclass
class _Node:
    # internal: feature >= 0; leaf: feature == -1
    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    value: float = 0.0
    n_samples: int = 0
    gain: float = 0.0  # realized split gain (internal nodes only)
    depth: int = 0


@dataclass
class RegressionTree:
    nodes: list[_Node]
    n_features: int
    expansion_order: list[tuple[int, int, float, float]] = field(default_factory=list)
    # (node id, feature, threshold, gain) in the order leaves were expanded

    @property
    def n_leaves(self) -> int:
        return sum(1 for n in self.nodes if n.feature < 0)

    def leaf_values(self) -> np.ndarray:
        return np.array([n.value for n in self.nodes if n.feature < 0])

    def apply(self, X) -> np.ndarray:
        """Leaf node index for every row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise VollabError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        out = np.empty(len(X), dtype=int)
        for i, x in enumerate(X):
            j = 0
            while self.nodes[j].feature >= 0:
                nd = self.nodes[j]
                j = nd.left if x[nd.feature] < nd.threshold else nd.right
            out[i] = j
        return out

    def set_leaf_values(self, leaf_ids, values) -> None:
        for j, v in zip(leaf_ids, values):
            if self.nodes[j].feature >= 0:
                raise VollabError(f"node {j} is not a leaf")
            self.nodes[j].value = float(v)

    def feature_gains(self) -> np.ndarray:
        """Total split gain attributed to each feature."""
        g = np.zeros(self.n_features)
        for n in self.nodes:
            if n.feature >= 0:
                g[n.feature] += n.gain
        return g

    def to_json(self) -> str:
        def render(j):
            n = self.nodes[j]
            if n.feature < 0:
                return {"value": n.value, "n": n.n_samples}
            return {
                "feature": n.feature,
                "threshold": n.threshold,
                "gain": n.gain,
                "left": render(n.left),
                "right": render(n.right),
            }

        return json.dumps(render(0), indent=1)


def predict_tree(tree: RegressionTree, X) -> np.ndarray:
    x = np.asarray(X, dtype=float)
    single = x.ndim == 1
    leaves = tree.apply(x)
    vals = np.array([tree.nodes[j].value for j in leaves])
    return vals[0] if single else vals


def _leaf_value(y: np.ndarray, rule: str) -> float:
    return float(np.median(y)) if rule == "median" else float(y.mean())


def _sse(y: np.ndarray) -> float:
    return float(((y - y.mean()) ** 2).sum())


def best_split(X, y, features, min_samples_leaf: int):
    """Best (gain, feature, threshold) over the given feature indices.

    Returns None when no split satisfies the leaf-size constraint.  Equal
    gains resolve to the lower feature index, then the lower threshold.
    """
    n = len(y)
    if n < 2 * min_samples_leaf:
        return None
    parent = _sse(y)
    # two candidates inducing the same row partition have mathematically equal
    # gains; the running-sum arithmetic separates them by rounding noise of
    # order eps * parent, so ties are judged at a tolerance on that scale
    tie_tol = 1e-10 * max(1.0, parent)
    best = None
    for f in features:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        xs, ys = col[order], y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        total, total_sq = csum[-1], csq[-1]
        # candidate split after position i (left = first i+1 rows) only where
        # the value actually changes
        for i in range(min_samples_leaf - 1, n - min_samples_leaf):
            if xs[i] == xs[i + 1]:
                continue
            nl = i + 1
            nr = n - nl
            sl, sr = csum[i], total - csum[i]
            ql, qr = csq[i], total_sq - csq[i]
            children = (ql - sl * sl / nl) + (qr - sr * sr / nr)
            gain = parent - children
            thr = (xs[i] + xs[i + 1]) / 2.0
            if best is None or gain > best[0] + tie_tol or (
                abs(gain - best[0]) <= tie_tol and (f, thr) < (best[1], best[2])
            ):
                best = (gain, f, thr)
    return best


def fit_regression_tree(
    X,
    y,
    policy: str = "leaf",
    limits: TreeLimits | None = None,
    leaf_value_rule: str = "mean",
    feature_subset: float | None = None,
    seed: int = 0,
) -> RegressionTree:
    """Grow a regression tree.

    policy "leaf": expand, at each step, the frontier leaf whose best split
    has maximal gain.  policy "level": expand leaves in creation order
    (breadth first).  feature_subset < 1 restricts every split search to a
    seeded random fraction of the features (one draw per tree).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise VollabError("fit_regression_tree needs matching, non-empty X and y")
    if not np.all(np.isfinite(y)):
        raise VollabError("targets must be finite")
    if policy not in ("leaf", "level"):
        raise VollabError(f"unknown growth policy {policy!r}")
    if leaf_value_rule not in ("mean", "median"):
        raise VollabError(f"unknown leaf value rule {leaf_value_rule!r}")
    limits = limits or TreeLimits()
    m = X.shape[1]
    if feature_subset is not None and feature_subset < 1.0:
        rng = np.random.default_rng(np.random.PCG64(seed))
        k = max(1, int(np.ceil(feature_subset * m)))
        perm = rng.permutation(m)
        features = sorted(perm[:k].tolist())
    else:
        features = list(range(m))

    nodes = [_Node(value=_leaf_value(y, leaf_value_rule), n_samples=len(y), depth=0)]
    rows = {0: np.arange(len(y))}
    tree = RegressionTree(nodes, m)

    def candidate(j):
        if limits.max_depth >= 0 and nodes[j].depth >= limits.max_depth:
            return None
        sp = best_split(X[rows[j]], y[rows[j]], features, limits.min_samples_leaf)
        if sp is None or sp[0] < limits.min_gain:
            return None
        return sp

    frontier: dict[int, tuple] = {}
    c = candidate(0)
    if c is not None:
        frontier[0] = c

    while frontier and tree.n_leaves < limits.max_leaves:
        if policy == "leaf":
            # max gain; ties -> lower node id, then feature, then threshold
            j = min(frontier, key=lambda j: (-frontier[j][0], j, frontier[j][1], frontier[j][2]))
        else:
            j = min(frontier)
        gain, f, thr = frontier.pop(j)
        idx = rows.pop(j)
        mask = X[idx, f] < thr
        li, ri = idx[mask], idx[~mask]
        nd = nodes[j]
        nd.feature, nd.threshold, nd.gain = f, thr, gain
        for child_rows in (li, ri):
            cid = len(nodes)
            nodes.append(
                _Node(
                    value=_leaf_value(y[child_rows], leaf_value_rule),
                    n_samples=len(child_rows),
                    depth=nd.depth + 1,
                )
            )
            rows[cid] = child_rows
            if nd.left < 0:
                nd.left = cid
            else:
                nd.right = cid
        tree.expansion_order.append((j, f, thr, gain))
        if tree.n_leaves >= limits.max_leaves:
            break
        for cid in (nd.left, nd.right):
            c = candidate(cid)
            if c is not None:
                frontier[cid] = c
    return tree
