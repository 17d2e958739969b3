"""One-level decision stump over binary features."""

import numpy as np

from .base import BinaryModel, training_column

TIE_TOLERANCE = 1e-12


def split_errors(X, y, weights=None):
    """
    Weighted misclassification of every (feature, polarity) rule.

    Column 0 holds polarity 1 (positive iff bit set), column 1 polarity 0.
    """
    if weights is None:
        weights = np.ones(len(y))
    wrong_when_set = (X.astype(bool) != y[:, None])
    errors_set = weights @ wrong_when_set
    return np.column_stack([errors_set, weights.sum() - errors_set])


class StumpModel(BinaryModel):
    """
    Positive iff ``x[feature] == polarity``. The score is the Laplace-smoothed
    purity of the branch the example falls in, negated on the negative branch.
    """

    algorithm = 'stump'

    def __init__(self, catalog_id, n_features, feature, polarity, positive_purity, negative_purity):
        super().__init__(catalog_id, n_features)
        self.feature = int(feature)
        self.polarity = int(polarity)
        self.positive_purity = float(positive_purity)
        self.negative_purity = float(negative_purity)

    def scores(self, X):
        hit = self._rows(X)[:, self.feature] == self.polarity
        return np.where(hit, self.positive_purity, -self.negative_purity)

    def to_dict(self):
        return {
            'n_features': self.n_features,
            'feature': self.feature,
            'polarity': self.polarity,
            'positive_purity': self.positive_purity,
            'negative_purity': self.negative_purity,
        }

    @classmethod
    def from_dict(cls, data, catalog_id):
        return cls(catalog_id, data['n_features'], data['feature'], data['polarity'],
                   data['positive_purity'], data['negative_purity'])


def best_split(X, y, weights=None):
    """(feature, polarity, error) with ties to the lowest feature, then polarity 1."""
    errors = split_errors(X, y, weights)
    flat = errors.ravel()
    best = np.flatnonzero(flat <= flat.min() + TIE_TOLERANCE)[0]
    feature, column = divmod(int(best), 2)
    return feature, 1 - column, float(flat[best])


def train_stump(matrix, label, weights=None):
    data, constant = training_column(matrix, label)
    if constant is not None:
        return constant
    X, y = data
    feature, polarity, _error = best_split(X, y, weights)
    hit = X[:, feature] == polarity
    positive_purity = (np.sum(y[hit]) + 1.0) / (np.sum(hit) + 2.0)
    negative_purity = (np.sum(~y[~hit]) + 1.0) / (np.sum(~hit) + 2.0)
    return StumpModel(matrix.catalog_id, X.shape[1], feature, polarity, positive_purity, negative_purity)
