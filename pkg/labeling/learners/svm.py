"""
Linear SVM trained with mini-batch Pegasos sub-gradient steps.

Training rows are first collapsed into unique (bits, target) rows carrying
a weight: multiplicity times the inverse-frequency weight of their class.
Each step draws a mini-batch of unique rows in proportion to their weight,
so the sampled objective is

    lam/2 * ||w||^2 + sum_k p_k * max(0, 1 - y_k * <w, x_k>)

with p the normalized row weights. A constant bias column is appended to
every row. After each epoch the average of that epoch's iterates is scored
on the objective. The trace records every epoch's value and the average
with the lowest value is kept.
"""

import math

import numpy as np

from .base import LinearModel, training_column


def compact_rows(X, y):
    """Unique (row, target) pairs, their signed targets and normalized sampling weights."""
    n = len(y)
    class_weight = {True: n / (2.0 * y.sum()), False: n / (2.0 * (n - y.sum()))}
    stacked = np.column_stack([X, y.astype(X.dtype)])
    unique, counts = np.unique(stacked, axis=0, return_counts=True)
    rows = unique[:, :-1].astype(float)
    targets = unique[:, -1].astype(bool)
    weights = counts * np.where(targets, class_weight[True], class_weight[False])
    return rows, np.where(targets, 1.0, -1.0), weights / weights.sum()


def with_bias(X):
    X = np.asarray(X, dtype=float)
    return np.column_stack([X, np.ones(X.shape[0])])


def objective(w, rows, signs, probabilities, lam):
    hinge = np.maximum(0.0, 1.0 - signs * (rows @ w))
    return float(0.5 * lam * w @ w + probabilities @ hinge)


class SvmModel(LinearModel):
    """Score is the margin <w, x> + b."""

    algorithm = 'svm'

    def __init__(self, catalog_id, weights, bias, objective_trace=()):
        super().__init__(catalog_id, weights, bias)
        self.objective_trace = [float(v) for v in objective_trace]

    def to_dict(self):
        data = super().to_dict()
        data['objective_trace'] = self.objective_trace
        return data

    @classmethod
    def from_dict(cls, data, catalog_id):
        return cls(catalog_id, data['weights'], data['bias'], data.get('objective_trace', ()))


def train_svm(matrix, label, lam=5e-3, epochs=50, batch_size=8, seed=0, projection=False):
    data, constant = training_column(matrix, label)
    if constant is not None:
        return constant
    X, y = data
    rows, signs, probabilities = compact_rows(X, y)
    rows = with_bias(rows)
    signed_rows = signs[:, None] * rows
    count, width = rows.shape
    rng = np.random.default_rng(seed)
    radius = 1.0 / math.sqrt(lam)

    w = np.zeros(width)
    best = w.copy()
    best_value = math.inf
    trace = []
    step = 0
    for _ in range(epochs):
        epoch_sum = np.zeros(width)
        for batch in rng.choice(count, size=(count, batch_size), p=probabilities):
            step += 1
            eta = 1.0 / (lam * step)
            signed = signed_rows[batch]
            violated = (signed @ w < 1.0).astype(float)
            w *= 1.0 - eta * lam
            w += (eta / batch_size) * (violated @ signed)
            if projection:
                norm = np.linalg.norm(w)
                if norm > radius:
                    w *= radius / norm
            epoch_sum += w
        average = epoch_sum / count
        value = objective(average, rows, signs, probabilities, lam)
        if value < best_value:
            best, best_value = average, value
        trace.append(value)
    return SvmModel(matrix.catalog_id, best[:-1], best[-1], trace)
