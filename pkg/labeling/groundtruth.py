"""
Ground truth: the label vocabulary, annotated method records, their
JSON Lines file format and stratified partitioning.

File format, one JSON object per line::

    {"provenance": "android.hardware.biometrics (API 30)"}
    {"name": "pkg.Class.method", "return": "void", "parametersTypes": [...],
     "calleeNames": [...], "labels": [...]}

A provenance line applies to every record up to the next provenance line.
"""

from dataclasses import dataclass
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import FrozenSet, Optional, Tuple

from django.db import models
import numpy as np

from .classfile import scan_archive
from .classfile.descriptor import MethodDescriptor, VOID, parse_java_type, parse_method_descriptor
from .classfile.model import Instruction, Invoke, MethodModel
from .errors import BscConflict, DatasetError, DescriptorSyntax, DuplicateRecord, EmptyDataset, SchemaViolation

logger = logging.getLogger(__name__)

RECORD_KEYS = ('name', 'return', 'parametersTypes', 'calleeNames', 'labels')
PROVENANCE_KEY = 'provenance'
EMPTY_CALLEE_DESCRIPTOR = MethodDescriptor((), VOID)


class Label(models.TextChoices):
    BSC1 = 'BSC1', 'Biometric strength class 1 (convenience)'
    BSC2 = 'BSC2', 'Biometric strength class 2 (weak)'
    BSC3 = 'BSC3', 'Biometric strength class 3 (strong)'
    SOURCE = 'SOURCE', 'Source'
    SINK = 'SINK', 'Sink'
    CHECKER = 'CHECKER', 'Checker'
    PERMISSION = 'PERMISSION', 'Permission'
    AUTHENTICATE = 'AUTHENTICATE', 'Authenticate'
    CRYPTO = 'CRYPTO', 'Crypto'
    TERMINATION = 'TERMINATION', 'Termination'
    INTERACTION = 'INTERACTION', 'Interaction'
    TRANSFER = 'TRANSFER', 'Transfer'
    ACQUISITION = 'ACQUISITION', 'Acquisition'
    DELETION = 'DELETION', 'Deletion'
    STORAGE = 'STORAGE', 'Storage'
    DATABASE = 'DATABASE', 'Database'


LABELS = tuple(Label)
BSC_LABELS = (Label.BSC1, Label.BSC2, Label.BSC3)


@dataclass(frozen=True)
class AnnotatedMethod:
    name: str
    return_type: str
    parameter_types: Tuple[str, ...] = ()
    callee_names: Tuple[str, ...] = ()
    labels: FrozenSet[Label] = frozenset()

    @property
    def key(self):
        return self.name, self.parameter_types

    @property
    def owner(self):
        return self.name.rsplit('.', 1)[0]

    @property
    def method_name(self):
        return self.name.rsplit('.', 1)[1]

    @property
    def bsc_labels(self):
        return self.labels & set(BSC_LABELS)

    def has(self, label):
        return label in self.labels

    def as_dict(self):
        return {
            'name': self.name,
            'return': self.return_type,
            'parametersTypes': list(self.parameter_types),
            'calleeNames': list(self.callee_names),
            'labels': sorted(label.value for label in self.labels),
        }


@dataclass(frozen=True)
class Dataset:
    records: Tuple[AnnotatedMethod, ...] = ()
    provenance: Tuple[Optional[str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'records', tuple(self.records))
        if not self.provenance:
            object.__setattr__(self, 'provenance', (None,) * len(self.records))
        else:
            object.__setattr__(self, 'provenance', tuple(self.provenance))
        if len(self.provenance) != len(self.records):
            raise DatasetError("provenance must be given for every record")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, index):
        return self.records[index]

    def subset(self, indices):
        indices = list(indices)
        return Dataset(
            tuple(self.records[i] for i in indices),
            tuple(self.provenance[i] for i in indices),
        )

    def label_counts(self):
        counts = {label: 0 for label in LABELS}
        for record in self.records:
            for label in record.labels:
                counts[label] += 1
        return counts

    def targets(self, label):
        return np.array([label in record.labels for record in self.records], dtype=bool)

    def batches(self):
        """(provenance, records) groups in file order."""
        groups = []
        for record, note in zip(self.records, self.provenance):
            if not groups or groups[-1][0] != note:
                groups.append((note, []))
            groups[-1][1].append(record)
        return groups


# ----------------------
# Validation and (de)serialization
# ----------------------
def split_callee(callee):
    """Split ``pkg.Class.m(desc)`` into (owner, name, MethodDescriptor)."""
    head, paren, tail = callee.partition('(')
    owner, dot, name = head.rpartition('.')
    if not dot or not owner or not name:
        raise ValueError(f"callee {callee!r} is not qualified")
    descriptor = parse_method_descriptor(paren + tail) if paren else EMPTY_CALLEE_DESCRIPTOR
    return owner, name, descriptor


def _string_list(value, line, field):
    if not isinstance(value, list) or not all(isinstance(item, str) for item in value):
        raise SchemaViolation(line, field, "expected a list of strings")
    return tuple(value)


def record_from_dict(data, line):
    keys = set(data)
    if keys != set(RECORD_KEYS):
        missing = [k for k in RECORD_KEYS if k not in keys]
        field = missing[0] if missing else sorted(keys - set(RECORD_KEYS))[0]
        raise SchemaViolation(line, field, "missing key" if missing else "unexpected key")

    name = data['name']
    if not isinstance(name, str) or name.count('.') < 2 or '' in name.split('.'):
        raise SchemaViolation(line, 'name', "expected a fully qualified package.Class.method name")

    return_type = data['return']
    if not isinstance(return_type, str):
        raise SchemaViolation(line, 'return', "expected a type name")
    try:
        parse_java_type(return_type)
    except ValueError as exc:
        raise SchemaViolation(line, 'return', str(exc)) from exc

    parameter_types = _string_list(data['parametersTypes'], line, 'parametersTypes')
    for type_name in parameter_types:
        try:
            if parse_java_type(type_name) is VOID:
                raise ValueError("void is not a parameter type")
        except ValueError as exc:
            raise SchemaViolation(line, 'parametersTypes', str(exc)) from exc

    callee_names = _string_list(data['calleeNames'], line, 'calleeNames')
    for callee in callee_names:
        try:
            split_callee(callee)
        except (ValueError, DescriptorSyntax) as exc:
            raise SchemaViolation(line, 'calleeNames', str(exc)) from exc

    raw_labels = _string_list(data['labels'], line, 'labels')
    if len(set(raw_labels)) != len(raw_labels):
        raise SchemaViolation(line, 'labels', "duplicate label")
    try:
        labels = frozenset(Label(value) for value in raw_labels)
    except ValueError as exc:
        raise SchemaViolation(line, 'labels', str(exc)) from exc
    if len(labels & set(BSC_LABELS)) > 1:
        raise BscConflict(line, [label.value for label in labels & set(BSC_LABELS)])

    return AnnotatedMethod(name, return_type, parameter_types, callee_names, labels)


def parse_dataset(text):
    records = []
    provenance = []
    note = None
    seen = {}
    for line, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(line, '<json>', exc.msg) from exc
        if not isinstance(data, dict):
            raise SchemaViolation(line, '<json>', "expected an object")
        if set(data) == {PROVENANCE_KEY}:
            if not isinstance(data[PROVENANCE_KEY], str):
                raise SchemaViolation(line, PROVENANCE_KEY, "expected a string")
            note = data[PROVENANCE_KEY]
            continue
        record = record_from_dict(data, line)
        if record.key in seen:
            raise DuplicateRecord(line, record.key)
        seen[record.key] = line
        records.append(record)
        provenance.append(note)
    return Dataset(tuple(records), tuple(provenance))


def load_dataset(path):
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    dataset = parse_dataset(text)
    if not dataset.records:
        logger.warning("dataset %s holds no records", path)
    return dataset


def dumps_dataset(dataset):
    lines = []
    for note, records in dataset.batches():
        if note is not None:
            lines.append(json.dumps({PROVENANCE_KEY: note}, ensure_ascii=False))
        lines.extend(json.dumps(record.as_dict(), ensure_ascii=False) for record in records)
    return ''.join(line + '\n' for line in lines)


def save_dataset(dataset, path):
    Path(path).write_text(dumps_dataset(dataset), encoding='utf-8')


def dataset_hash(dataset):
    return hashlib.sha256(dumps_dataset(dataset).encode('utf-8')).hexdigest()


def record_to_method(record):
    """
    A MethodModel standing in for a ground-truth record: its signature, and
    one invocation per callee name (no data flow is known for records).
    """
    parameters = tuple(parse_java_type(name) for name in record.parameter_types)
    instructions = []
    for position, callee in enumerate(record.callee_names):
        owner, name, descriptor = split_callee(callee)
        instructions.append(Instruction(position, 'invokevirtual', Invoke('virtual', owner, name, descriptor)))
    return MethodModel(
        owner=record.owner,
        name=record.method_name,
        descriptor=MethodDescriptor(parameters, parse_java_type(record.return_type)),
        instructions=tuple(instructions),
        has_code=bool(instructions),
    )


# ----------------------
# Harvesting
# ----------------------
def method_record(method):
    callees = []
    for invoke in method.invocations():
        callee = f"{invoke.qualified_name}{invoke.callee_descriptor.render()}"
        if callee not in callees:
            callees.append(callee)
    return AnnotatedMethod(
        name=method.qualified_name,
        return_type=method.descriptor.return_type.java_name,
        parameter_types=tuple(t.java_name for t in method.descriptor.param_types),
        callee_names=tuple(callees),
    )


def records_from_scan(scan):
    for model in scan:
        for method in model.methods:
            yield method_record(method)


def harvest_records(path, jobs=1):
    """Unlabeled records for every method of every class in ``path``."""
    with scan_archive(path, jobs=jobs) as scan:
        return list(records_from_scan(scan))


def drop_duplicates(records):
    """Keep the first record per identity key; returns (kept, dropped)."""
    seen = set()
    kept, dropped = [], []
    for record in records:
        if record.key in seen:
            logger.warning("dropping duplicate record %s(%s)", record.name, ', '.join(record.parameter_types))
            dropped.append(record)
            continue
        seen.add(record.key)
        kept.append(record)
    return kept, dropped


# ----------------------
# Stratification
# ----------------------
def degenerate_labels(dataset, minimum=2):
    """Labels present in the dataset with too few positives to stratify."""
    counts = dataset.label_counts()
    return [label for label in LABELS if 0 < counts[label] < minimum]


def _pick(candidates, keys, rng):
    for key in keys:
        best = max(key[j] for j in candidates)
        candidates = [j for j in candidates if key[j] == best]
        if len(candidates) == 1:
            return candidates[0]
    return candidates[int(rng.integers(len(candidates)))]


def iterative_stratification(label_sets, sizes, rng, pinned=None):
    """
    Assign each example to one of ``len(sizes)`` subsets so that every
    label's positives spread in proportion to ``sizes``.

    Labels are handled rarest first; each positive goes to the subset that
    still wants the most of that label, then the most examples overall.
    ``pinned`` maps example index to a fixed subset.
    """
    n = len(label_sets)
    total = float(sum(sizes))
    ratios = np.array(sizes, dtype=float) / total
    wanted = np.array(sizes, dtype=float)
    assignment = np.full(n, -1, dtype=int)
    label_wanted = {}
    for labels in label_sets:
        for label in labels:
            label_wanted[label] = label_wanted.get(label, 0) + 1
    label_wanted = {label: ratios * count for label, count in label_wanted.items()}

    def assign(index, subset):
        assignment[index] = subset
        wanted[subset] -= 1
        for label in label_sets[index]:
            label_wanted[label][subset] -= 1

    for index, subset in (pinned or {}).items():
        assign(index, subset)

    order = rng.permutation(n)
    subsets = list(range(len(sizes)))
    while True:
        remaining = {}
        for index in order:
            if assignment[index] < 0:
                for label in label_sets[index]:
                    remaining[label] = remaining.get(label, 0) + 1
        if not remaining:
            break
        label = min(remaining, key=lambda l: (remaining[l], str(l)))
        for index in order:
            if assignment[index] < 0 and label in label_sets[index]:
                fill = wanted / np.maximum(np.array(sizes, dtype=float), 1.0)
                assign(index, _pick(subsets, (label_wanted[label], wanted, fill), rng))
    for index in order:
        if assignment[index] < 0:
            assign(index, _pick(subsets, (wanted,), rng))
    return _repair_sizes(assignment, sizes, label_sets, pinned or {})


def _repair_sizes(assignment, sizes, label_sets, pinned):
    counts = np.bincount(assignment, minlength=len(sizes))
    while True:
        excess = counts - np.array(sizes)
        source, target = int(np.argmax(excess)), int(np.argmin(excess))
        if excess[source] <= 0:
            return assignment
        movable = [i for i in range(len(assignment)) if assignment[i] == source and i not in pinned]
        if not movable:
            return assignment
        index = min(movable, key=lambda i: (len(label_sets[i]), i))
        assignment[index] = target
        counts[source] -= 1
        counts[target] += 1


def _balance_labels(assignment, label_sets, train_fraction, pinned):
    """
    Swap unpinned records between the two parts until every label's
    training count lies within one of ``train_fraction`` of its total.

    Swaps keep both part sizes. Each swap must lower the total bound
    violation, or keep it and bring the counts closer to their quotas.
    """
    labels = sorted({label for members in label_sets for label in members}, key=LABELS.index)
    if not labels:
        return assignment
    membership = np.array([[label in members for label in labels] for members in label_sets], dtype=int)
    quota = membership.sum(axis=0) * train_fraction
    low, high = np.ceil(quota - 1 - 1e-9), np.floor(quota + 1 + 1e-9)
    free = np.array([i not in pinned for i in range(len(assignment))])

    def cost(counts):
        violation = np.maximum(low - counts, 0) + np.maximum(counts - high, 0)
        return violation.sum(axis=-1), ((counts - quota) ** 2).sum(axis=-1)

    while True:
        counts = membership[assignment == 0].sum(axis=0)
        violation, spread = cost(counts)
        if violation == 0:
            return assignment
        train = np.flatnonzero((assignment == 0) & free)
        test = np.flatnonzero((assignment == 1) & free)
        if not len(train) or not len(test):
            break
        # a swap's effect depends only on the two label sets
        outgoing, out_first = np.unique(membership[train], axis=0, return_index=True)
        incoming, in_first = np.unique(membership[test], axis=0, return_index=True)
        swapped_violation, swapped_spread = cost(counts + incoming[None, :, :] - outgoing[:, None, :])
        better = (swapped_violation < violation) | (
            (swapped_violation == violation) & (swapped_spread < spread - 1e-9))
        candidates = np.flatnonzero(better.ravel())
        if not len(candidates):
            break
        order = np.lexsort((swapped_spread.ravel()[candidates], swapped_violation.ravel()[candidates]))
        out_pattern, in_pattern = divmod(int(candidates[order[0]]), len(incoming))
        assignment[train[out_first[out_pattern]]] = 1
        assignment[test[in_first[in_pattern]]] = 0
    for label, count, lo, hi in zip(labels, counts, low, high):
        if not lo <= count <= hi:
            logger.warning("label %s: %d of its records in the training part, wanted %d to %d",
                           Label(label).value, count, lo, hi)
    return assignment


def split_sizes(n, train_fraction):
    train = int(math.floor(n * train_fraction + 0.5))
    return [train, n - train]


def stratified_split(dataset, train_fraction, seed):
    """Partition ``dataset`` into (train, test) with per-label proportions kept."""
    if not 0 < train_fraction < 1:
        raise DatasetError(f"train fraction must lie strictly between 0 and 1, got {train_fraction}")
    if not len(dataset):
        raise EmptyDataset("cannot split an empty dataset")
    rare = set(degenerate_labels(dataset))
    for label in sorted(rare, key=LABELS.index):
        logger.warning("label %s has fewer than 2 positives; its records stay in the training part", label.value)
    pinned = {i: 0 for i, record in enumerate(dataset) if record.labels & rare}
    label_sets = [record.labels - rare for record in dataset]
    rng = np.random.default_rng(seed)
    assignment = iterative_stratification(label_sets, split_sizes(len(dataset), train_fraction), rng, pinned)
    assignment = _balance_labels(assignment, label_sets, train_fraction, pinned)
    train = [i for i in range(len(dataset)) if assignment[i] == 0]
    test = [i for i in range(len(dataset)) if assignment[i] == 1]
    return dataset.subset(train), dataset.subset(test)


def fold_sizes(n, k):
    return [n // k + (1 if j < n % k else 0) for j in range(k)]


def stratified_folds(dataset, k, rng, labels=LABELS):
    """Fold index per record; fold sizes differ by at most one."""
    wanted = set(labels)
    label_sets = [record.labels & wanted for record in dataset]
    return iterative_stratification(label_sets, fold_sizes(len(dataset), k), rng)
