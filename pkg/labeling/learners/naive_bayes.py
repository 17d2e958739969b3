"""Bernoulli naive Bayes over binary features."""

import numpy as np

from .base import LinearModel, training_column


class NaiveBayesModel(LinearModel):
    """
    The posterior log-odds of a Bernoulli model is linear in the bits:

        log P(+|x)/P(-|x) = prior + sum_j x_j * log(tp_j/tn_j)
                                  + (1 - x_j) * log((1-tp_j)/(1-tn_j))
    """

    algorithm = 'nb'


def train_naive_bayes(matrix, label, alpha=1.0):
    data, constant = training_column(matrix, label)
    if constant is not None:
        return constant
    X, y = data
    X = X.astype(float)
    n_pos = float(y.sum())
    n_neg = float(len(y) - n_pos)

    theta_pos = (X[y].sum(axis=0) + alpha) / (n_pos + 2 * alpha)
    theta_neg = (X[~y].sum(axis=0) + alpha) / (n_neg + 2 * alpha)

    present = np.log(theta_pos) - np.log(theta_neg)
    absent = np.log1p(-theta_pos) - np.log1p(-theta_neg)
    bias = np.log(n_pos) - np.log(n_neg) + absent.sum()
    return NaiveBayesModel(matrix.catalog_id, present - absent, bias)
