"""
The per-label model bundle: one trained model per Label, persisted as a
single versioned JSON document, plus BSC resolution at classification time.
"""

from dataclasses import dataclass, field
import json
import logging
import math
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from ..errors import CatalogMismatch, ModelBundleError
from ..groundtruth import BSC_LABELS, LABELS, Label
from ..parallel import ordered_map
from .base import ConstantModel
from .logistic import LogisticModel, train_logistic
from .naive_bayes import NaiveBayesModel, train_naive_bayes
from .stump import StumpModel, train_stump
from .svm import SvmModel, train_svm
from .tree import TreeModel, train_tree

logger = logging.getLogger(__name__)

BUNDLE_FORMAT = 'biolabel-model-bundle'
BUNDLE_VERSION = 1

ALGORITHMS = {
    'nb': train_naive_bayes,
    'logistic': train_logistic,
    'stump': train_stump,
    'tree': train_tree,
    'svm': train_svm,
}
STOCHASTIC_ALGORITHMS = frozenset({'logistic', 'svm'})
MODEL_TYPES = {
    model.algorithm: model
    for model in (NaiveBayesModel, LogisticModel, StumpModel, TreeModel, SvmModel, ConstantModel)
}


def label_seed(seed, label):
    """Independent, reproducible seed for one label's learner."""
    sequence = np.random.SeedSequence([int(seed), LABELS.index(Label(label))])
    return int(sequence.generate_state(1)[0])


@dataclass
class LabelModelBundle:
    catalog_id: str
    algorithm: str
    models: Dict[Label, object]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [label.value for label in LABELS if label not in self.models]
        if missing or len(self.models) != len(LABELS):
            raise ModelBundleError(f"bundle must hold one model per label; missing {missing}")
        for label, model in self.models.items():
            if model.catalog_id != self.catalog_id:
                raise ModelBundleError(f"model for {label.value} was trained on another catalog")

    @property
    def degenerate_labels(self):
        return [label for label in LABELS if isinstance(self.models[label], ConstantModel)]

    def check(self, vector):
        if vector.catalog_id != self.catalog_id:
            raise CatalogMismatch(self.catalog_id, vector.catalog_id)

    def decide(self, X):
        """Decisions and scores as (n, 16) arrays, columns in Label order."""
        X = np.asarray(X)
        if X.ndim == 1:
            X = X[None, :]
        decisions = np.zeros((X.shape[0], len(LABELS)), dtype=bool)
        scores = np.zeros((X.shape[0], len(LABELS)))
        if X.shape[0]:
            for column, label in enumerate(LABELS):
                decisions[:, column], scores[:, column] = self.models[label].decide(X)
        return decisions, scores

    def to_dict(self):
        return {
            'format': BUNDLE_FORMAT,
            'version': BUNDLE_VERSION,
            'catalog_id': self.catalog_id,
            'algorithm': self.algorithm,
            'metadata': self.metadata,
            'models': {
                label.value: {'algorithm': self.models[label].algorithm, **self.models[label].to_dict()}
                for label in LABELS
            },
        }


@dataclass(frozen=True)
class LabelAssignment:
    owner: str
    name: str
    descriptor: str
    decisions: Dict[Label, tuple]
    resolved_bsc: Optional[Label] = None

    @property
    def labels(self):
        """Positive non-BSC labels plus the resolved strength class, in Label order."""
        chosen = [l for l in LABELS if l not in BSC_LABELS and self.decisions[l][0]]
        if self.resolved_bsc is not None:
            chosen.append(self.resolved_bsc)
        return sorted(chosen, key=LABELS.index)

    def score(self, label):
        return self.decisions[Label(label)][1]


def resolve_bsc(decisions):
    """Highest-scoring positive BSC label; ties go to the lowest strength class."""
    best = None
    for label in BSC_LABELS:
        positive, score = decisions[label]
        if positive and (best is None or score > decisions[best][1]):
            best = label
    return best


def assignments(bundle, X, identities):
    """One LabelAssignment per row of X; ``identities`` yields (owner, name, descriptor)."""
    decisions, scores = bundle.decide(X)
    for row, (owner, name, descriptor) in enumerate(identities):
        per_label = {
            label: (bool(decisions[row, column]), float(scores[row, column]))
            for column, label in enumerate(LABELS)
        }
        yield LabelAssignment(owner, name, descriptor, per_label, resolve_bsc(per_label))


def classify(bundle, vector, identity=('', '', '')):
    bundle.check(vector)
    return next(assignments(bundle, vector.bits, [identity]))


# ----------------------
# Training
# ----------------------
_training = {}


def _init_training(matrix, trainer, hyperparameters, seed, stochastic):
    _training.update(matrix=matrix, trainer=trainer, hyperparameters=hyperparameters,
                     seed=seed, stochastic=stochastic)


def _train_label(label):
    options = dict(_training['hyperparameters'])
    if _training['stochastic']:
        options['seed'] = label_seed(_training['seed'], label)
    return _training['trainer'](_training['matrix'], label, **options)


def train_bundle(matrix, algorithm, seed, hyperparameters=None, jobs=1, metadata=None):
    """Train one model per label with ``algorithm`` and wrap them in a bundle."""
    if algorithm not in ALGORITHMS:
        raise ModelBundleError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}")
    hyperparameters = dict(hyperparameters or {})
    models = dict(zip(
        LABELS,
        ordered_map(
            _train_label, LABELS, jobs,
            initializer=_init_training,
            initargs=(matrix, ALGORITHMS[algorithm], hyperparameters, seed, algorithm in STOCHASTIC_ALGORITHMS),
        ),
    ))
    info = {
        'seed': int(seed),
        'hyperparameters': hyperparameters,
        'training_examples': len(matrix),
        'degenerate_labels': [l.value for l in LABELS if isinstance(models[l], ConstantModel)],
    }
    info.update(metadata or {})
    return LabelModelBundle(matrix.catalog_id, algorithm, models, info)


# ----------------------
# Persistence
# ----------------------
def dumps_bundle(bundle):
    return json.dumps(bundle.to_dict(), sort_keys=True, indent=1, allow_nan=False) + '\n'


def save_bundle(bundle, path):
    Path(path).write_text(dumps_bundle(bundle), encoding='utf-8')


def bundle_from_dict(data):
    if not isinstance(data, dict) or data.get('format') != BUNDLE_FORMAT:
        raise ModelBundleError("not a model bundle")
    if data.get('version') != BUNDLE_VERSION:
        raise ModelBundleError(f"unsupported model bundle version {data.get('version')!r}")
    try:
        catalog_id = data['catalog_id']
        models = {}
        for value, entry in data['models'].items():
            model_type = MODEL_TYPES[entry['algorithm']]
            models[Label(value)] = model_type.from_dict(entry, catalog_id)
        return LabelModelBundle(catalog_id, data['algorithm'], models, data.get('metadata', {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelBundleError(f"malformed model bundle: {exc}") from exc


def load_bundle(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelBundleError(f"cannot read model bundle {path}: {exc}") from exc
    return bundle_from_dict(data)


def format_score(score):
    """JSON-safe score: rounded float, or "+inf"/"-inf" for constant models."""
    if math.isinf(score):
        return '+inf' if score > 0 else '-inf'
    return round(score, 6)
