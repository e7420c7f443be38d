"""Cost-weighted classification trees used as boosting weak learners.

A tree assigns one class to each leaf and is fit to minimise

    sum_i alpha[i, Phi(x_i) - 1]

for a non-negative weight table ``alpha`` of shape (n, K): predicting class
``k`` for row ``i`` costs ``alpha[i, k-1]``.  Growth is best-first under a
leaf budget; every candidate split is scored exactly with prefix sums.
"""

from dataclasses import dataclass

import numpy as np

# a split must beat its parent by more than this fraction of the table mass
MIN_GAIN = 1e-12


def leaf_label(alpha_rows) -> int:
    """Cheapest class (1-based) for a block of weight rows; ties to the smallest index."""
    alpha_rows = np.atleast_2d(alpha_rows)
    if alpha_rows.shape[0] == 0:
        raise ValueError("a leaf needs at least one row")
    return int(np.argmin(alpha_rows.sum(axis=0))) + 1


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat binary tree.  Node 0 is the root.

    Internal nodes route ``x[feature] <= threshold`` to ``left`` and everything
    else to ``right``; leaves carry ``feature == -1`` and a class ``label``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray
    n_features: int

    def __post_init__(self):
        for name, dtype in (("feature", np.intp), ("threshold", np.float64), ("left", np.intp),
                            ("right", np.intp), ("label", np.intp)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.feature.shape[0]
        if n == 0:
            raise ValueError("a tree needs at least one node")
        if any(a.shape != (n,) for a in (self.threshold, self.left, self.right, self.label)):
            raise ValueError("node arrays must share one length")
        internal = self.feature >= 0
        if np.any(self.feature[internal] >= self.n_features):
            bad = int(self.feature[internal].max())
            raise ValueError(f"feature index {bad} out of range for {self.n_features} features")
        for child in (self.left[internal], self.right[internal]):
            if np.any((child <= 0) | (child >= n)):
                raise ValueError("child index out of range")
        if np.any(self.label[~internal] < 1):
            raise ValueError("leaf labels must be >= 1")

    @property
    def leaf_count(self):
        return int(np.sum(self.feature < 0))

    @property
    def node_count(self):
        return self.feature.shape[0]

    def apply(self, X):
        """Index of the leaf reached by each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while np.any(active):
            r = rows[active]
            nd = node[r]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict(self, X):
        """Class labels (1-based) for the rows of ``X``."""
        return self.label[self.apply(X)]

    def to_lines(self):
        lines = []
        for i in range(self.node_count):
            if self.feature[i] < 0:
                lines.append(f"{i} leaf - - {self.label[i]} - -")
            else:
                lines.append(f"{i} split {self.feature[i]} {float(self.threshold[i])!r} - "
                             f"{self.left[i]} {self.right[i]}")
        return lines

    @classmethod
    def from_lines(cls, lines, n_features):
        n = len(lines)
        feature = np.full(n, -1)
        threshold = np.zeros(n)
        left = np.full(n, -1)
        right = np.full(n, -1)
        label = np.zeros(n, dtype=np.intp)
        for line in lines:
            parts = line.split()
            if len(parts) != 7:
                raise ValueError(f"malformed tree node line: {line!r}")
            i = int(parts[0])
            if not 0 <= i < n:
                raise ValueError(f"node id {i} out of range in {line!r}")
            if parts[1] == "leaf":
                label[i] = int(parts[4])
            elif parts[1] == "split":
                feature[i] = int(parts[2])
                threshold[i] = float(parts[3])
                left[i], right[i] = int(parts[5]), int(parts[6])
            else:
                raise ValueError(f"unknown node kind {parts[1]!r}")
        return cls(feature, threshold, left, right, label, n_features)


def tree_predict(t: Tree, x) -> int:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("tree_predict takes a single feature vector")
    return int(t.predict(x[None, :])[0])


def weighted_cost(alpha, labels):
    """sum_i alpha[i, labels[i] - 1]."""
    alpha = np.asarray(alpha)
    return float(alpha[np.arange(alpha.shape[0]), np.asarray(labels) - 1].sum())


class TreeLearner:
    """Fits trees on a fixed design matrix, reusing its per-feature sort order.

    Boosting refits a tree on the same ``X`` every round with new weights, so
    the O(n log n) sorts are done once here.
    """

    def __init__(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        if X.shape[0] == 0:
            raise ValueError("cannot fit a tree on zero rows")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains missing or infinite values")
        self.X = X
        self.n, self.d = X.shape
        self.order = np.argsort(X, axis=0, kind="stable").T.copy()  # (d, n)
        self.sorted_vals = np.take_along_axis(X.T, self.order, axis=1)

    def _best_split(self, in_node, alpha, min_gain):
        m = int(in_node.sum())
        totals = alpha[in_node].sum(axis=0)
        node_cost = totals.min()
        if m < 2 or self.d == 0:
            return None
        keep = in_node[self.order]
        idx = self.order[keep].reshape(self.d, m)
        vals = self.sorted_vals[keep].reshape(self.d, m)
        # class-major layout (K, d, m-1) keeps the per-class reductions contiguous
        cum = np.cumsum(alpha.T[:, idx], axis=2)[:, :, :-1]
        cost = np.minimum.reduce(cum, axis=0) + np.minimum.reduce(totals[:, None, None] - cum,
                                                                  axis=0)
        cost[vals[:, :-1] >= vals[:, 1:]] = np.inf
        flat = int(np.argmin(cost))  # first minimum: lowest feature, then lowest threshold
        f, pos = divmod(flat, m - 1)
        best = cost[f, pos]
        if not np.isfinite(best) or node_cost - best <= min_gain:
            return None
        lo, hi = vals[f, pos], vals[f, pos + 1]
        thr = 0.5 * (lo + hi)
        if not lo <= thr < hi:
            thr = lo
        return node_cost - best, f, thr

    def fit(self, alpha, max_leaves=4) -> Tree:
        alpha = np.asarray(alpha, dtype=np.float64)
        if alpha.ndim != 2 or alpha.shape[0] != self.n:
            raise ValueError(f"weight table must have shape ({self.n}, K), got {alpha.shape}")
        if np.any(alpha < 0) or not np.all(np.isfinite(alpha)):
            raise ValueError("weights must be finite and non-negative")
        if max_leaves < 2:
            raise ValueError("max_leaves must be at least 2")
        min_gain = MIN_GAIN * float(alpha.sum())

        feature, threshold, left, right, label = [-1], [0.0], [-1], [-1], [0]
        masks = {0: np.ones(self.n, dtype=bool)}
        frontier = {0: self._best_split(masks[0], alpha, min_gain)}
        leaves = 1
        while leaves < max_leaves:
            # largest gain wins; iteration in node-id order breaks ties low
            best_node, best = None, None
            for node, split in frontier.items():
                if split is not None and (best is None or split[0] > best[0]):
                    best_node, best = node, split
            if best is None:
                break
            _, f, thr = best
            mask = masks.pop(best_node)
            del frontier[best_node]
            go_left = self.X[:, f] <= thr
            for child_mask in (mask & go_left, mask & ~go_left):
                cid = len(feature)
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                label.append(0)
                masks[cid] = child_mask
                frontier[cid] = self._best_split(child_mask, alpha, min_gain)
            feature[best_node], threshold[best_node] = f, thr
            left[best_node], right[best_node] = len(feature) - 2, len(feature) - 1
            leaves += 1
        for node, mask in masks.items():
            label[node] = leaf_label(alpha[mask])
        return Tree(feature, threshold, left, right, label, self.d)


def fit_tree(X, alpha, max_leaves=4) -> Tree:
    """Fit a cost-weighted tree with at most ``max_leaves`` leaves."""
    return TreeLearner(X).fit(alpha, max_leaves)
