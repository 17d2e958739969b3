"""L2-regularized logistic regression trained by seeded mini-batch gradient descent."""

import numpy as np

from .base import LinearModel, training_column


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def objective(weights, bias, X, y, l2):
    """Mean log-loss plus (l2 / 2) * ||weights||^2; the bias is not regularized."""
    z = X @ weights + bias
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * weights @ weights)


def gradient(weights, bias, X, y, l2):
    residual = sigmoid(X @ weights + bias) - y
    return X.T @ residual / len(y) + l2 * weights, float(residual.mean())


class LogisticModel(LinearModel):
    algorithm = 'logistic'

    def probability(self, X):
        return sigmoid(self.scores(X))


def train_logistic(matrix, label, l2=1e-4, epochs=200, learning_rate=0.1, batch_size=32, seed=0):
    data, constant = training_column(matrix, label)
    if constant is not None:
        return constant
    X, y = data
    X = X.astype(float)
    y = y.astype(float)
    rng = np.random.default_rng(seed)
    weights = np.zeros(X.shape[1])
    bias = 0.0
    for _ in range(epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), batch_size):
            batch = order[start:start + batch_size]
            grad_w, grad_b = gradient(weights, bias, X[batch], y[batch], l2)
            weights -= learning_rate * grad_w
            bias -= learning_rate * grad_b
    return LogisticModel(matrix.catalog_id, weights, bias)
