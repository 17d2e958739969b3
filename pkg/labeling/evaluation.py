"""
Repeated stratified k-fold cross-validation and hold-out evaluation.

Confusion counts are accumulated per (algorithm, label, repeat) over the
k test folds; precision and recall are computed from the totals and are
``None`` (rendered "/") when undefined.
"""

from dataclasses import asdict, dataclass, field
import json
import logging
import statistics
from typing import List, Optional, Tuple

import numpy as np

from .conf import hyperparameters as configured_hyperparameters
from .errors import DatasetError, TooFewRecords
from .groundtruth import LABELS, Label, degenerate_labels, fold_sizes, iterative_stratification, stratified_split
from .learners import ALGORITHMS, STOCHASTIC_ALGORITHMS, ConstantModel, TrainingMatrix, label_seed
from .parallel import ordered_map

logger = logging.getLogger(__name__)

UNDEFINED = '/'

# Column groups of the default comparison view.
DEFAULT_GROUPS = (
    ('Source', Label.SOURCE),
    ('Sink', Label.SINK),
    ('Auth', Label.AUTHENTICATE),
    ('Crypto', Label.CRYPTO),
)


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other):
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    @classmethod
    def tally(cls, truth, predicted):
        truth = np.asarray(truth, dtype=bool)
        predicted = np.asarray(predicted, dtype=bool)
        return cls(
            tp=int(np.sum(truth & predicted)),
            fp=int(np.sum(~truth & predicted)),
            fn=int(np.sum(truth & ~predicted)),
            tn=int(np.sum(~truth & ~predicted)),
        )

    @property
    def precision(self):
        predicted = self.tp + self.fp
        return self.tp / predicted if predicted else None

    @property
    def recall(self):
        actual = self.tp + self.fn
        return self.tp / actual if actual else None


@dataclass(frozen=True)
class FoldPlan:
    k: int
    repeats: int
    seed: int
    assignments: Tuple[Tuple[int, ...], ...]

    def test_indices(self, repeat, fold):
        return [i for i, f in enumerate(self.assignments[repeat]) if f == fold]

    def train_indices(self, repeat, fold):
        return [i for i, f in enumerate(self.assignments[repeat]) if f != fold]


def make_fold_plan(label_sets, k, repeats, seed):
    """Stratified fold assignment for every repeat, drawn from one seeded generator."""
    if k < 2:
        raise DatasetError(f"cross-validation needs k >= 2, got {k}")
    if len(label_sets) < k:
        raise TooFewRecords(f"{len(label_sets)} records cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    sizes = fold_sizes(len(label_sets), k)
    return FoldPlan(k, repeats, seed, tuple(
        tuple(int(f) for f in iterative_stratification(label_sets, sizes, rng))
        for _ in range(repeats)
    ))


def _mean(values):
    return statistics.fmean(values) if values else None


def _median(values):
    return statistics.median(values) if values else None


@dataclass
class MetricsReport:
    rows: List[dict] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    k: Optional[int] = None
    repeats: int = 1
    seed: Optional[int] = None

    @property
    def algorithms(self):
        return list(dict.fromkeys(row['algorithm'] for row in self.rows))

    @property
    def labels(self):
        present = {row['label'] for row in self.rows}
        return [label for label in LABELS if label.value in present]

    def counts(self, algorithm, label):
        """Confusion counts summed over every repeat."""
        total = ConfusionCounts()
        for row in self.rows:
            if row['algorithm'] == algorithm and row['label'] == Label(label).value:
                total += ConfusionCounts(row['tp'], row['fp'], row['fn'], row['tn'])
        return total

    def summary(self):
        """{algorithm: {label: {median/mean precision/recall, undefined counts}}}."""
        result = {}
        for algorithm in self.algorithms:
            per_label = result.setdefault(algorithm, {})
            for label in self.labels:
                rows = [r for r in self.rows if r['algorithm'] == algorithm and r['label'] == label.value]
                entry = {}
                for metric in ('precision', 'recall'):
                    values = [r[metric] for r in rows if r[metric] is not None]
                    entry[f'median_{metric}'] = _median(values)
                    entry[f'mean_{metric}'] = _mean(values)
                    entry[f'undefined_{metric}'] = len(rows) - len(values)
                per_label[label.value] = entry
        return result

    def to_dict(self):
        return {
            'k': self.k,
            'repeats': self.repeats,
            'seed': self.seed,
            'rows': self.rows,
            'summary': self.summary(),
            'warnings': self.warnings,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + '\n'


def _row(algorithm, label, repeat, counts):
    return {'algorithm': algorithm, 'label': Label(label).value, 'repeat': repeat,
            'precision': counts.precision, 'recall': counts.recall, **asdict(counts)}


def resolve_algorithms(algorithms, overrides=None):
    """
    Normalize ``algorithms`` (names or a name -> trainer mapping) into
    [(name, trainer, hyperparameters, stochastic)].
    """
    overrides = overrides or {}
    if algorithms is None:
        algorithms = list(ALGORITHMS)
    if isinstance(algorithms, dict):
        items = list(algorithms.items())
    else:
        items = []
        for name in algorithms:
            if name not in ALGORITHMS:
                raise DatasetError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}")
            items.append((name, ALGORITHMS[name]))
    resolved = []
    for name, trainer in items:
        options = configured_hyperparameters(name) if name in ALGORITHMS else {}
        options.update(overrides.get(name, {}))
        resolved.append((name, trainer, options, name in STOCHASTIC_ALGORITHMS))
    return resolved


def fit_and_count(train, test, label, trainer, options, stochastic, seed):
    """Train one label model on ``train`` and tally its decisions on ``test``."""
    options = dict(options)
    if stochastic:
        options['seed'] = label_seed(seed, label)
    model = trainer(train, label, **options)
    predicted, _scores = model.decide(test.X) if len(test) else (np.zeros(0, dtype=bool), None)
    return ConfusionCounts.tally(test.column(label), predicted), isinstance(model, ConstantModel)


_state = {}


def _init_folds(matrix, plan, resolved, labels):
    _state.update(matrix=matrix, plan=plan, resolved=resolved, labels=labels)


def _run_fold(task):
    repeat, fold, position = task
    matrix, plan = _state['matrix'], _state['plan']
    name, trainer, options, stochastic = _state['resolved'][position]
    train = matrix.subset(plan.train_indices(repeat, fold))
    test = matrix.subset(plan.test_indices(repeat, fold))
    fold_seed = int(np.random.SeedSequence([plan.seed, repeat, fold]).generate_state(1)[0])
    outcome = {}
    for label in _state['labels']:
        outcome[label] = fit_and_count(train, test, label, trainer, options, stochastic, fold_seed)
    return repeat, name, outcome


def cross_validate_matrix(matrix, algorithms=None, labels=LABELS, k=10, repeats=10, seed=42,
                          hyperparameters=None, jobs=1):
    labels = [Label(label) for label in labels]
    resolved = resolve_algorithms(algorithms, hyperparameters)
    plan = make_fold_plan(matrix.label_sets(), k, repeats, seed)
    report = MetricsReport(k=k, repeats=repeats, seed=seed)

    counts = {}
    constant_folds = {}
    tasks = [(r, f, p) for r in range(repeats) for f in range(k) for p in range(len(resolved))]
    for repeat, name, outcome in ordered_map(_run_fold, tasks, jobs, initializer=_init_folds,
                                             initargs=(matrix, plan, resolved, labels)):
        for label, (tally, constant) in outcome.items():
            key = (name, label, repeat)
            counts[key] = counts.get(key, ConfusionCounts()) + tally
            if constant:
                constant_folds[(name, label)] = constant_folds.get((name, label), 0) + 1

    for name, _trainer, _options, _stochastic in resolved:
        for label in labels:
            for repeat in range(repeats):
                report.rows.append(_row(name, label, repeat, counts[(name, label, repeat)]))
            if (name, label) in constant_folds:
                report.warnings.append(
                    f"{name}/{label.value}: constant classifier in {constant_folds[(name, label)]} "
                    f"of {k * repeats} folds (single-class training data)")
    return plan, report


def cross_validate(dataset, catalog, algorithms=None, labels=LABELS, k=10, repeats=10, seed=42,
                   hyperparameters=None, jobs=1):
    """Repeated stratified k-fold CV of every algorithm on every label; returns a MetricsReport."""
    if len(dataset) < k:
        raise TooFewRecords(f"{len(dataset)} records cannot fill {k} folds")
    rare = degenerate_labels(dataset)
    for label in rare:
        logger.warning("label %s has fewer than 2 positives and cannot be stratified", label.value)
    matrix = TrainingMatrix.from_dataset(dataset, catalog)
    _plan, report = cross_validate_matrix(matrix, algorithms, labels, k, repeats, seed, hyperparameters, jobs)
    report.warnings[:0] = [f"{label.value}: fewer than 2 positives; not stratified" for label in rare]
    return report


def holdout_evaluate(dataset, catalog, algorithm='svm', train_fraction=0.7, seed=42, labels=LABELS,
                     hyperparameters=None):
    """Train on a stratified split of ``dataset`` and score the held-out part (one repeat)."""
    train, test = stratified_split(dataset, train_fraction, seed)
    train_matrix = TrainingMatrix.from_dataset(train, catalog)
    test_matrix = TrainingMatrix.from_dataset(test, catalog)
    report = MetricsReport(k=None, repeats=1, seed=seed)
    for name, trainer, options, stochastic in resolve_algorithms([algorithm], hyperparameters):
        for label in labels:
            tally, constant = fit_and_count(train_matrix, test_matrix, label, trainer, options, stochastic, seed)
            report.rows.append(_row(name, label, 0, tally))
            if tally.precision is None:
                report.warnings.append(f"{name}/{Label(label).value}: nothing predicted on the held-out part")
            if constant:
                report.warnings.append(f"{name}/{Label(label).value}: constant classifier (single-class training data)")
    return report


# ----------------------
# Rendering
# ----------------------
def _fmt(value):
    return UNDEFINED if value is None else f"{value:.4f}"


def _columns(report, full):
    if full:
        return [(label.value, label) for label in report.labels]
    return [(title, label) for title, label in DEFAULT_GROUPS]


def comparison_table(report, full=False):
    """Median and mean blocks: {block: {algorithm: {column: (P, R)}}} with an Average column."""
    summary = report.summary()
    columns = _columns(report, full)
    table = {}
    for block in ('median', 'mean'):
        rows = table.setdefault(block, {})
        for algorithm in report.algorithms:
            cells = {}
            for title, label in columns:
                entry = summary[algorithm].get(label.value, {})
                cells[title] = (entry.get(f'{block}_precision'), entry.get(f'{block}_recall'))
            precisions = [p for p, _r in cells.values() if p is not None]
            recalls = [r for _p, r in cells.values() if r is not None]
            cells['Average'] = (_mean(precisions), _mean(recalls))
            rows[algorithm] = cells
    return [title for title, _label in columns] + ['Average'], table


def render_comparison(report, full=False):
    """Return (text, json_text) renderings of the comparison table."""
    if not report.rows:
        raise ValueError("cannot render an empty report")
    titles, table = comparison_table(report, full)
    name_width = max(len('Algorithm'), *(len(a) for a in report.algorithms))
    cell_width = 13

    lines = []
    if report.k:
        heading = f"{report.repeats} x {report.k}-fold cross-validation (seed {report.seed})"
    else:
        heading = f"hold-out evaluation (seed {report.seed})"
    lines.append(heading)
    for block in ('median', 'mean'):
        lines.append('')
        lines.append(f"{block.capitalize()} precision (P) and recall (R)")
        lines.append(' | '.join(['Algorithm'.ljust(name_width)] + [t.ljust(cell_width) for t in titles]))
        lines.append(' | '.join([''.ljust(name_width)] + ['P      R'.ljust(cell_width) for _ in titles]))
        lines.append('-+-'.join(['-' * name_width] + ['-' * cell_width for _ in titles]))
        for algorithm in report.algorithms:
            cells = table[block][algorithm]
            lines.append(' | '.join(
                [algorithm.ljust(name_width)]
                + [f"{_fmt(cells[t][0]):<6} {_fmt(cells[t][1]):<6}".ljust(cell_width) for t in titles]
            ))
    if report.warnings:
        lines.append('')
        lines.extend(f"warning: {message}" for message in report.warnings)
    text = '\n'.join(lines) + '\n'

    document = {
        'k': report.k,
        'repeats': report.repeats,
        'seed': report.seed,
        'columns': titles,
        'algorithms': report.algorithms,
        'warnings': report.warnings,
    }
    for block in ('median', 'mean'):
        document[block] = {
            algorithm: {t: {'precision': cells[t][0], 'recall': cells[t][1]} for t in titles}
            for algorithm, cells in table[block].items()
        }
    return text, json.dumps(document, sort_keys=True, indent=2) + '\n'
