import json
import math

import numpy as np
import pytest

from labeling.errors import CatalogMismatch, ModelBundleError
from labeling.features import FeatureVector
from labeling.groundtruth import BSC_LABELS, LABELS, Label
from labeling.learners import (
    ALGORITHMS,
    ConstantModel,
    LabelModelBundle,
    TrainingMatrix,
    classify,
    format_score,
    label_seed,
    load_bundle,
    resolve_bsc,
    save_bundle,
    train_bundle,
    train_logistic,
    train_naive_bayes,
    train_stump,
    train_svm,
    train_tree,
)
from labeling.learners.bundle import bundle_from_dict, dumps_bundle
from labeling.learners.logistic import gradient, objective
from labeling.learners.stump import best_split
from labeling.learners.svm import compact_rows, with_bias
from labeling.learners.svm import objective as svm_objective
from labeling.learners.tree import gain_ratios

CATALOG = 'c' * 64


def matrix_for(X, y, label=Label.SINK):
    return TrainingMatrix(CATALOG, np.asarray(X, dtype=np.uint8), {label: np.asarray(y, dtype=bool)})


def random_problem(seed, n=60, d=8):
    rng = np.random.default_rng(seed)
    X = (rng.random((n, d)) < 0.4).astype(np.uint8)
    y = (X[:, 1] | (X[:, 3] & X[:, 5])).astype(bool)
    flips = rng.random(n) < 0.1
    return X, y ^ flips


def full_matrix(X, **columns):
    targets = {label: np.zeros(len(X), dtype=bool) for label in LABELS}
    targets.update({Label(name): np.asarray(column, dtype=bool) for name, column in columns.items()})
    return TrainingMatrix(CATALOG, np.asarray(X, dtype=np.uint8), targets)


# ----------------------
# Naive Bayes
# ----------------------
def test_naive_bayes_matches_hand_computation():
    X = [[1, 0], [1, 1], [0, 1], [0, 0]]
    model = train_naive_bayes(matrix_for(X, [True, True, False, False]), Label.SINK, alpha=1.0)
    # theta+ = (3/4, 1/2), theta- = (1/4, 1/2), equal priors
    theta_pos, theta_neg = (0.75, 0.5), (0.25, 0.5)

    def log_odds(row):
        total = math.log(2 / 2)
        for bit, tp, tn in zip(row, theta_pos, theta_neg):
            total += math.log(tp / tn) if bit else math.log((1 - tp) / (1 - tn))
        return total

    scores = model.scores(np.array(X))
    for row, score in zip(X, scores):
        assert score == pytest.approx(log_odds(row), abs=1e-9)
    assert scores[0] == pytest.approx(math.log(3), abs=1e-9)
    assert scores[2] == pytest.approx(-math.log(3), abs=1e-9)


def test_naive_bayes_uses_class_priors():
    model = train_naive_bayes(matrix_for([[0], [0], [0], [0]], [True, False, False, False]), Label.SINK)
    # prior 1:3, and the absent bit: (1 - 1/3) / (1 - 1/5)
    expected = math.log(1 / 3) + math.log((2 / 3) / (4 / 5))
    assert model.scores(np.array([[0]]))[0] == pytest.approx(expected, abs=1e-9)


# ----------------------
# Logistic regression
# ----------------------
@pytest.mark.parametrize('seed', range(50))
def test_logistic_gradient_matches_central_differences(seed):
    rng = np.random.default_rng(seed)
    X = (rng.random((50, 6)) < 0.5).astype(float)
    y = (rng.random(50) < 0.4).astype(float)
    weights, bias, l2 = rng.normal(size=6), float(rng.normal()), float(rng.uniform(0.0, 0.1))
    grad_w, grad_b = gradient(weights, bias, X, y, l2)

    eps = 1e-6
    numeric = np.zeros(6)
    for j in range(6):
        step = np.zeros(6)
        step[j] = eps
        numeric[j] = (objective(weights + step, bias, X, y, l2) - objective(weights - step, bias, X, y, l2)) / (2 * eps)
    numeric_b = (objective(weights, bias + eps, X, y, l2) - objective(weights, bias - eps, X, y, l2)) / (2 * eps)

    np.testing.assert_allclose(grad_w, numeric, rtol=1e-5, atol=1e-8)
    assert grad_b == pytest.approx(numeric_b, rel=1e-5, abs=1e-8)


def test_logistic_training_lowers_the_objective_reproducibly():
    X, y = random_problem(1)
    matrix = matrix_for(X, y)
    model = train_logistic(matrix, Label.SINK, epochs=50, seed=5)
    start = objective(np.zeros(X.shape[1]), 0.0, X.astype(float), y.astype(float), 1e-4)
    assert objective(model.weights, model.bias, X.astype(float), y.astype(float), 1e-4) < start
    again = train_logistic(matrix, Label.SINK, epochs=50, seed=5)
    assert np.array_equal(model.weights, again.weights)
    assert np.all((model.probability(X) > 0) & (model.probability(X) < 1))


# ----------------------
# Stump and tree
# ----------------------
def brute_force_stump(X, y):
    best = None
    for feature in range(X.shape[1]):
        for polarity in (1, 0):
            errors = int(np.sum((X[:, feature] == polarity) != y))
            if best is None or errors < best[2]:
                best = (feature, polarity, errors)
    return best


@pytest.mark.parametrize('seed', range(5))
def test_stump_matches_brute_force(seed):
    X, y = random_problem(seed)
    feature, polarity, error = best_split(X, y)
    assert (feature, polarity, int(round(error))) == brute_force_stump(X, y)
    model = train_stump(matrix_for(X, y), Label.SINK)
    assert (model.feature, model.polarity) == (feature, polarity)
    assert np.array_equal(model.decide(X)[0], X[:, feature] == polarity)


def brute_force_gain_ratio(column, y, min_leaf):
    def h(labels):
        if len(labels) == 0:
            return 0.0
        p = sum(labels) / len(labels)
        return -sum(q * math.log2(q) for q in (p, 1 - p) if q > 0)

    ones = [bool(v) for v, bit in zip(y, column) if bit]
    zeros = [bool(v) for v, bit in zip(y, column) if not bit]
    if len(ones) < min_leaf or len(zeros) < min_leaf:
        return -math.inf
    n = len(y)
    gain = h(list(y)) - len(ones) / n * h(ones) - len(zeros) / n * h(zeros)
    split = -sum(q * math.log2(q) for q in (len(ones) / n, len(zeros) / n) if q > 0)
    return gain / split


@pytest.mark.parametrize('seed', range(5))
def test_tree_root_maximizes_gain_ratio(seed):
    X, y = random_problem(seed)
    ratios = [brute_force_gain_ratio(X[:, j], y, 2) for j in range(X.shape[1])]
    np.testing.assert_allclose(gain_ratios(X, y, 2), ratios, rtol=1e-9, atol=1e-12)
    model = train_tree(matrix_for(X, y), Label.SINK, max_depth=3, min_leaf=2)
    assert ratios[model.root['feature']] == pytest.approx(max(ratios), abs=1e-9)
    assert model.depth() <= 3


def test_tree_fits_a_separable_problem():
    X = np.array([[0, 1, 0], [1, 1, 1], [0, 0, 1], [1, 0, 0], [0, 1, 1], [1, 0, 1]], dtype=np.uint8)
    y = X[:, 0].astype(bool)
    model = train_tree(matrix_for(X, y), Label.SINK, min_leaf=1)
    assert model.root['feature'] == 0
    assert model.depth() == 1
    assert np.array_equal(model.decide(X)[0], y)


def test_tree_learns_xor_at_depth_two():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 3, dtype=np.uint8)
    y = (X[:, 0] ^ X[:, 1]).astype(bool)
    model = train_tree(matrix_for(X, y), Label.SINK, max_depth=2, min_leaf=2)
    assert model.depth() == 2
    assert np.array_equal(model.decide(X)[0], y)


# ----------------------
# SVM
# ----------------------
def test_svm_ignores_row_duplication():
    X, y = random_problem(3, n=40)
    once = train_svm(matrix_for(X, y), Label.SINK, epochs=10, seed=9)
    twice = train_svm(matrix_for(np.vstack([X, X]), np.concatenate([y, y])), Label.SINK, epochs=10, seed=9)
    np.testing.assert_allclose(twice.weights, once.weights)
    assert twice.bias == pytest.approx(once.bias)


def test_svm_keeps_the_lowest_objective_epoch():
    X, y = random_problem(4)
    model = train_svm(matrix_for(X, y), Label.SINK, lam=5e-3, epochs=30, seed=2)
    trace = model.objective_trace
    assert len(trace) == 30
    rows, signs, probabilities = compact_rows(X, y)
    kept = svm_objective(np.append(model.weights, model.bias), with_bias(rows), signs, probabilities, 5e-3)
    assert kept == pytest.approx(min(trace), rel=1e-12)
    assert kept <= trace[-1]
    assert trace[-1] < trace[0]


def test_svm_separates_a_separable_problem():
    rng = np.random.default_rng(8)
    X = (rng.random((80, 6)) < 0.5).astype(np.uint8)
    y = X[:, 2].astype(bool)
    model = train_svm(matrix_for(X, y), Label.SINK, lam=1e-3, epochs=40, seed=1)
    assert np.mean(model.decide(X)[0] == y) >= 0.95


def test_svm_with_zero_epochs_is_the_zero_model():
    X, y = random_problem(5)
    model = train_svm(matrix_for(X, y), Label.SINK, epochs=0)
    assert not model.weights.any() and model.bias == 0.0
    assert model.objective_trace == []


def test_single_class_columns_train_constant_models(caplog):
    X, _ = random_problem(6)
    model = train_svm(matrix_for(X, np.zeros(len(X), dtype=bool)), Label.SINK)
    assert isinstance(model, ConstantModel)
    assert not model.decide(X)[0].any()
    assert 'degenerate training data for SINK' in caplog.text


@pytest.mark.parametrize('algorithm', sorted(ALGORITHMS))
def test_decisions_agree_with_score_signs(algorithm):
    X, y = random_problem(12)
    model = ALGORITHMS[algorithm](matrix_for(X, y), Label.SINK)
    unseen = (np.random.default_rng(13).random((200, X.shape[1])) < 0.5).astype(np.uint8)
    decisions, scores = model.decide(unseen)
    assert np.array_equal(decisions, scores > 0)
    for row, decision, score in zip(unseen[:20], decisions, scores):
        assert model.predict(FeatureVector(CATALOG, row)) == (bool(decision), pytest.approx(float(score)))
    if algorithm == 'logistic':
        assert np.array_equal(model.probability(unseen) > 0.5, scores > 0)


# ----------------------
# Bundle
# ----------------------
def test_label_seeds_are_distinct_and_reproducible():
    seeds = [label_seed(42, label) for label in LABELS]
    assert len(set(seeds)) == len(LABELS)
    assert seeds == [label_seed(42, label) for label in LABELS]
    assert label_seed(43, Label.SINK) != label_seed(42, Label.SINK)


def test_resolve_bsc():
    def decisions(**positive):
        return {label: positive.get(label.value, (False, -1.0)) for label in BSC_LABELS}

    assert resolve_bsc(decisions()) is None
    assert resolve_bsc(decisions(BSC2=(True, 0.2), BSC3=(True, 0.9))) == Label.BSC3
    assert resolve_bsc(decisions(BSC1=(True, 0.5), BSC3=(True, 0.5))) == Label.BSC1
    assert resolve_bsc(decisions(BSC1=(False, 3.0), BSC2=(True, 0.1))) == Label.BSC2


def test_resolve_bsc_ignores_positive_rescaling():
    rng = np.random.default_rng(21)
    for _ in range(200):
        scores = np.round(rng.normal(size=len(BSC_LABELS)), 1)
        decisions = {label: (bool(score > 0), float(score)) for label, score in zip(BSC_LABELS, scores)}
        for factor in (0.5, 3.0, 1000.0):
            scaled = {label: (positive, score * factor) for label, (positive, score) in decisions.items()}
            assert resolve_bsc(scaled) == resolve_bsc(decisions)


@pytest.mark.parametrize('algorithm, options', [
    ('nb', {}), ('stump', {}), ('tree', {}), ('logistic', {'epochs': 5}), ('svm', {'epochs': 5}),
])
def test_retraining_one_label_leaves_the_others_alone(algorithm, options):
    X, y = random_problem(14)
    before = train_bundle(full_matrix(X, SINK=y, CRYPTO=X[:, 2], BSC2=X[:, 4]), algorithm,
                          seed=5, hyperparameters=options)
    after = train_bundle(full_matrix(X, SINK=y, CRYPTO=X[:, 6] & ~X[:, 0], BSC2=X[:, 4]), algorithm,
                         seed=5, hyperparameters=options)
    old_models = json.loads(dumps_bundle(before))['models']
    new_models = json.loads(dumps_bundle(after))['models']
    old_decisions, old_scores = before.decide(X)
    new_decisions, new_scores = after.decide(X)
    for column, label in enumerate(LABELS):
        if label == Label.CRYPTO:
            continue
        assert old_models[label.value] == new_models[label.value], label
        assert np.array_equal(old_decisions[:, column], new_decisions[:, column])
        assert np.array_equal(old_scores[:, column], new_scores[:, column])


@pytest.fixture(scope='module')
def small_bundle():
    X, y = random_problem(7)
    matrix = full_matrix(X, SINK=y, SOURCE=~y, BSC1=X[:, 0], BSC3=X[:, 1])
    return train_bundle(matrix, 'nb', seed=3, metadata={'dataset': 'random'}), X


def test_bundle_holds_every_label(small_bundle):
    bundle, X = small_bundle
    assert set(bundle.models) == set(LABELS)
    assert Label.TRANSFER in bundle.degenerate_labels
    assert Label.SINK not in bundle.degenerate_labels
    assert bundle.metadata['dataset'] == 'random'
    assert bundle.metadata['training_examples'] == len(X)
    decisions, scores = bundle.decide(X)
    assert decisions.shape == scores.shape == (len(X), len(LABELS))


def test_bundle_round_trip(small_bundle, tmp_path):
    bundle, X = small_bundle
    path = tmp_path / 'bundle.json'
    save_bundle(bundle, path)
    loaded = load_bundle(path)
    assert dumps_bundle(loaded) == dumps_bundle(bundle)
    for original, restored in zip(bundle.decide(X), loaded.decide(X)):
        assert np.array_equal(original, restored)


def test_classify_resolves_one_strength_class(small_bundle):
    bundle, X = small_bundle
    for row in X:
        assignment = classify(bundle, FeatureVector(CATALOG, row), ('a.B', 'm', '()V'))
        assert sum(label in BSC_LABELS for label in assignment.labels) <= 1
        if assignment.resolved_bsc is not None:
            assert assignment.decisions[assignment.resolved_bsc][0]


def test_classify_rejects_other_catalogs(small_bundle):
    bundle, X = small_bundle
    with pytest.raises(CatalogMismatch):
        classify(bundle, FeatureVector('d' * 64, X[0]))


def test_parallel_training_matches_sequential():
    X, y = random_problem(9)
    matrix = full_matrix(X, SINK=y, CRYPTO=X[:, 2])
    sequential = train_bundle(matrix, 'svm', seed=1, hyperparameters={'epochs': 5})
    parallel = train_bundle(matrix, 'svm', seed=1, hyperparameters={'epochs': 5}, jobs=2)
    assert dumps_bundle(parallel) == dumps_bundle(sequential)


def test_unknown_algorithm():
    with pytest.raises(ModelBundleError):
        train_bundle(full_matrix(np.zeros((2, 1))), 'forest', seed=1)


def test_bundle_needs_every_label(small_bundle):
    bundle, _ = small_bundle
    models = dict(bundle.models)
    models.pop(Label.DATABASE)
    with pytest.raises(ModelBundleError):
        LabelModelBundle(CATALOG, 'nb', models)


@pytest.mark.parametrize('mutate', [
    lambda data: data.update(format='something-else'),
    lambda data: data.update(version=99),
    lambda data: data['models'].pop('SINK'),
    lambda data: data['models']['SINK'].update(algorithm='forest'),
])
def test_malformed_bundles(small_bundle, mutate):
    data = json.loads(dumps_bundle(small_bundle[0]))
    mutate(data)
    with pytest.raises(ModelBundleError):
        bundle_from_dict(data)


def test_unreadable_bundle_file(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{not json', encoding='utf-8')
    with pytest.raises(ModelBundleError):
        load_bundle(path)


def test_format_score():
    assert format_score(math.inf) == '+inf'
    assert format_score(-math.inf) == '-inf'
    assert format_score(0.12345678) == 0.123457
