from .base import BinaryModel, ConstantModel, LinearModel, TrainingMatrix
from .bundle import (
    ALGORITHMS,
    MODEL_TYPES,
    STOCHASTIC_ALGORITHMS,
    LabelAssignment,
    LabelModelBundle,
    assignments,
    classify,
    format_score,
    label_seed,
    load_bundle,
    resolve_bsc,
    save_bundle,
    train_bundle,
)
from .logistic import LogisticModel, train_logistic
from .naive_bayes import NaiveBayesModel, train_naive_bayes
from .stump import StumpModel, train_stump
from .svm import SvmModel, train_svm
from .tree import TreeModel, train_tree

__all__ = [
    'BinaryModel', 'ConstantModel', 'LinearModel', 'TrainingMatrix',
    'ALGORITHMS', 'MODEL_TYPES', 'STOCHASTIC_ALGORITHMS',
    'LabelAssignment', 'LabelModelBundle', 'assignments', 'classify', 'format_score',
    'label_seed', 'load_bundle', 'resolve_bsc', 'save_bundle', 'train_bundle',
    'LogisticModel', 'train_logistic', 'NaiveBayesModel', 'train_naive_bayes',
    'StumpModel', 'train_stump', 'SvmModel', 'train_svm', 'TreeModel', 'train_tree',
]
