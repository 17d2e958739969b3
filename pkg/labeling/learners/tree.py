"""
Binary decision tree grown on gain ratio, C4.5-style, without pruning.

Every split tests one bit. A split is admissible when both children
keep at least ``min_leaf`` examples; among admissible splits the highest
gain ratio wins, ties going to the lowest feature id.
"""

import numpy as np

from .base import BinaryModel, training_column

TIE_TOLERANCE = 1e-12


def entropy(positives, total):
    """Binary entropy (bits) for arrays of positive counts and totals."""
    positives = np.asarray(positives, dtype=float)
    total = np.asarray(total, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        p = np.where(total > 0, positives / np.maximum(total, 1), 0.0)
        terms = [np.where(q > 0, -q * np.log2(np.where(q > 0, q, 1.0)), 0.0) for q in (p, 1.0 - p)]
    return terms[0] + terms[1]


def gain_ratios(X, y, min_leaf):
    """Gain ratio per feature; -inf where the split is not admissible."""
    total = len(y)
    positives = float(y.sum())
    ones = X.sum(axis=0).astype(float)
    ones_pos = X[y].sum(axis=0).astype(float)
    zeros = total - ones
    zeros_pos = positives - ones_pos

    gain = entropy(positives, total) - (ones / total) * entropy(ones_pos, ones) - (zeros / total) * entropy(zeros_pos, zeros)
    split_info = entropy(ones, total)
    admissible = (ones >= min_leaf) & (zeros >= min_leaf) & (split_info > 0)
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(admissible, gain / np.where(split_info > 0, split_info, 1.0), -np.inf)


def best_feature(X, y, min_leaf):
    ratios = gain_ratios(X, y, min_leaf)
    if not np.isfinite(ratios).any():
        return None
    return int(np.flatnonzero(ratios >= ratios.max() - TIE_TOLERANCE)[0])


def _leaf(y):
    return {'p': float(y.mean()) if len(y) else 0.0, 'n': int(len(y))}


def grow(X, y, depth, max_depth, min_leaf):
    positives = int(y.sum())
    if depth >= max_depth or positives in (0, len(y)):
        return _leaf(y)
    feature = best_feature(X, y, min_leaf)
    if feature is None:
        return _leaf(y)
    hit = X[:, feature].astype(bool)
    return {
        'feature': feature,
        'zero': grow(X[~hit], y[~hit], depth + 1, max_depth, min_leaf),
        'one': grow(X[hit], y[hit], depth + 1, max_depth, min_leaf),
    }


class TreeModel(BinaryModel):
    """Leaf score 2p - 1 where p is the leaf's positive fraction; positive iff p > 0.5."""

    algorithm = 'tree'

    def __init__(self, catalog_id, n_features, root):
        super().__init__(catalog_id, n_features)
        self.root = root

    def leaf(self, row):
        node = self.root
        while 'feature' in node:
            node = node['one'] if row[node['feature']] else node['zero']
        return node

    def scores(self, X):
        return np.array([2.0 * self.leaf(row)['p'] - 1.0 for row in self._rows(X)])

    def depth(self, node=None):
        node = self.root if node is None else node
        if 'feature' not in node:
            return 0
        return 1 + max(self.depth(node['zero']), self.depth(node['one']))

    def to_dict(self):
        return {'n_features': self.n_features, 'root': self.root}

    @classmethod
    def from_dict(cls, data, catalog_id):
        return cls(catalog_id, data['n_features'], data['root'])


def train_tree(matrix, label, max_depth=8, min_leaf=2):
    data, constant = training_column(matrix, label)
    if constant is not None:
        return constant
    X, y = data
    return TreeModel(matrix.catalog_id, X.shape[1], grow(X, y, 0, max_depth, min_leaf))
