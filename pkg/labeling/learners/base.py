"""Shared pieces of the per-label binary learners."""

import logging
import math

import numpy as np

from ..errors import CatalogMismatch, ModelBundleError
from ..features import FeatureVector, vectorize
from ..flowfacts import EMPTY_FACTS
from ..groundtruth import LABELS, Label, record_to_method

logger = logging.getLogger(__name__)


class TrainingMatrix:
    """Feature bits of n examples (one catalog) plus one boolean target column per label."""

    def __init__(self, catalog_id, bits, targets):
        self.catalog_id = catalog_id
        self.X = np.asarray(bits, dtype=np.uint8)
        if self.X.ndim != 2:
            raise ValueError("feature bits must form a 2-d array")
        self.targets = {Label(label): np.asarray(column, dtype=bool) for label, column in targets.items()}
        for label, column in self.targets.items():
            if column.shape != (self.X.shape[0],):
                raise ValueError(f"target column {label} does not align with the feature rows")

    @classmethod
    def from_vectors(cls, vectors, targets):
        vectors = list(vectors)
        catalog_ids = {vector.catalog_id for vector in vectors}
        if len(catalog_ids) > 1:
            first, *others = sorted(catalog_ids)
            raise CatalogMismatch(first, others[0])
        catalog_id = catalog_ids.pop() if catalog_ids else ''
        bits = np.array([vector.bits for vector in vectors], dtype=np.uint8).reshape(len(vectors), -1)
        return cls(catalog_id, bits, targets)

    @classmethod
    def from_dataset(cls, dataset, catalog):
        vectors = [vectorize(record_to_method(record), EMPTY_FACTS, catalog) for record in dataset]
        if not vectors:
            return cls(catalog.catalog_id, np.zeros((0, len(catalog)), dtype=np.uint8),
                       {label: dataset.targets(label) for label in LABELS})
        return cls.from_vectors(vectors, {label: dataset.targets(label) for label in LABELS})

    def __len__(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    def column(self, label):
        return self.targets[Label(label)]

    def subset(self, indices):
        indices = np.asarray(indices, dtype=int)
        return TrainingMatrix(
            self.catalog_id,
            self.X[indices],
            {label: column[indices] for label, column in self.targets.items()},
        )

    def label_sets(self):
        rows = [set() for _ in range(len(self))]
        for label, column in self.targets.items():
            for index in np.flatnonzero(column):
                rows[index].add(label)
        return [frozenset(row) for row in rows]

    def vector(self, index):
        return FeatureVector(self.catalog_id, self.X[index])


class BinaryModel:
    """
    Base class of a trained single-label classifier.

    Subclasses implement ``scores(X)``; the decision is ``score > 0``.
    """

    algorithm = None

    def __init__(self, catalog_id, n_features):
        self.catalog_id = catalog_id
        self.n_features = n_features

    def _rows(self, X):
        X = np.asarray(X)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ModelBundleError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def scores(self, X):
        raise NotImplementedError

    def decide(self, X):
        scores = self.scores(self._rows(X))
        return scores > 0, scores

    def predict(self, vector):
        if vector.catalog_id != self.catalog_id:
            raise CatalogMismatch(self.catalog_id, vector.catalog_id)
        decisions, scores = self.decide(vector.bits)
        return bool(decisions[0]), float(scores[0])

    def to_dict(self):
        raise NotImplementedError

    @classmethod
    def from_dict(cls, data, catalog_id):
        raise NotImplementedError


class LinearModel(BinaryModel):
    """Score = X @ weights + bias."""

    def __init__(self, catalog_id, weights, bias):
        weights = np.asarray(weights, dtype=float)
        super().__init__(catalog_id, len(weights))
        self.weights = weights
        self.bias = float(bias)

    def scores(self, X):
        return self._rows(X) @ self.weights + self.bias

    def to_dict(self):
        return {'weights': [float(w) for w in self.weights], 'bias': self.bias}

    @classmethod
    def from_dict(cls, data, catalog_id):
        return cls(catalog_id, data['weights'], data['bias'])


class ConstantModel(BinaryModel):
    """Stand-in for a label whose training column has a single class."""

    algorithm = 'constant'

    def __init__(self, catalog_id, n_features, positive):
        super().__init__(catalog_id, n_features)
        self.positive = bool(positive)

    def scores(self, X):
        return np.full(self._rows(X).shape[0], math.inf if self.positive else -math.inf)

    def to_dict(self):
        return {'positive': self.positive, 'n_features': self.n_features}

    @classmethod
    def from_dict(cls, data, catalog_id):
        return cls(catalog_id, data['n_features'], data['positive'])


def training_column(matrix, label):
    """
    The (X, y) pair for one label, or a ConstantModel when y holds a single class.
    """
    y = matrix.column(label)
    positives = int(y.sum())
    if positives == 0 or positives == len(y):
        logger.warning(
            "degenerate training data for %s: %d of %d examples positive; using a constant classifier",
            Label(label).value, positives, len(y))
        return None, ConstantModel(matrix.catalog_id, matrix.n_features, positives > 0)
    return (matrix.X, y), None
