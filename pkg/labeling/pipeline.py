"""
Streaming classification of an archive: scan, flow analysis, vectorize and
classify per class entry, with results written in entry order by a single
writer no matter how many workers run.
"""

from dataclasses import dataclass, field
import json
import logging
import os
import threading
import time
from typing import Dict, List

import numpy as np
import psutil

from .classfile import ArchiveScan, ScanFailure
from .classfile.model import SourceLocation
from .classfile.reader import parse_class
from .conf import get_setting
from .errors import CatalogMismatch, ClassFileError
from .features import vectorize
from .flowfacts import analyze_flows_or_empty
from .groundtruth import LABELS
from .learners import assignments, format_score
from .parallel import ordered_map

logger = logging.getLogger(__name__)

MEGABYTE = 1024 * 1024


class PeakMemorySampler:
    """Samples the RSS of this process and its worker children on a background thread."""

    def __init__(self, interval=None):
        self.interval = interval if interval is not None else get_setting('MEMORY_SAMPLE_INTERVAL')
        self.process = psutil.Process(os.getpid())
        self.peak = 0
        self._stop = threading.Event()
        self._thread = None

    def sample(self):
        total = 0
        for process in [self.process, *self.process.children(recursive=True)]:
            try:
                total += process.memory_info().rss
            except (psutil.NoSuchProcess, psutil.AccessDenied):
                continue
        self.peak = max(self.peak, total)
        return total

    def _run(self):
        while not self._stop.wait(self.interval):
            self.sample()

    def __enter__(self):
        self.sample()
        self._thread = threading.Thread(target=self._run, name='peak-memory', daemon=True)
        self._thread.start()
        return self

    def __exit__(self, *exc_info):
        self._stop.set()
        self._thread.join()
        self.sample()

    @property
    def peak_megabytes(self):
        return self.peak / MEGABYTE


@dataclass
class RunStats:
    total_methods: int = 0
    biometric_methods: int = 0
    wall_time: float = 0.0
    peak_memory: float = 0.0
    label_counts: Dict[str, int] = field(default_factory=lambda: {label.value: 0 for label in LABELS})
    classes: int = 0
    failures: List[ScanFailure] = field(default_factory=list)
    flow_failures: int = 0

    def to_dict(self):
        return {
            'total_methods': self.total_methods,
            'biometric_methods': self.biometric_methods,
            'wall_time': round(self.wall_time, 3),
            'peak_memory': round(self.peak_memory, 2),
            'label_counts': dict(self.label_counts),
            'classes': self.classes,
            'failures': [{'entry': f.entry, 'reason': f.reason} for f in self.failures],
            'flow_failures': self.flow_failures,
        }


def render_label_counts(stats):
    width = max(len(label.value) for label in LABELS)
    lines = [f"{'#M':<{width}}  {stats.total_methods:>8}", f"{'#BM':<{width}}  {stats.biometric_methods:>8}"]
    lines.extend(f"{label.value:<{width}}  {stats.label_counts[label.value]:>8}" for label in LABELS)
    return '\n'.join(lines) + '\n'


def render_run_stats(stats):
    return (f"{'Methods':>10}  {'Time (s)':>10}  {'Memory (MB)':>12}\n"
            f"{stats.total_methods:>10}  {stats.wall_time:>10.2f}  {stats.peak_memory:>12.2f}\n")


def result_row(assignment):
    return {
        'owner': assignment.owner,
        'method': assignment.name,
        'descriptor': assignment.descriptor,
        'labels': [{'label': label.value, 'score': format_score(assignment.score(label))}
                   for label in assignment.labels],
        'resolved_bsc': assignment.resolved_bsc.value if assignment.resolved_bsc else None,
    }


_worker = {}


def _init_worker(bundle, catalog):
    _worker.update(bundle=bundle, catalog=catalog)


def classify_entry(item):
    """Worker: (archive, entry, bytes) -> (entry, method count, result rows, error, flow warnings)."""
    archive, entry, data = item
    bundle, catalog = _worker['bundle'], _worker['catalog']
    try:
        model = parse_class(data, SourceLocation(archive, entry))
    except ClassFileError as exc:
        return entry, 0, [], str(exc), 0
    flow_failures = 0
    bits = np.zeros((len(model.methods), len(catalog)), dtype=np.uint8)
    identities = []
    for row, method in enumerate(model.methods):
        facts, warning = analyze_flows_or_empty(method)
        flow_failures += warning is not None
        bits[row] = vectorize(method, facts, catalog).bits
        identities.append((model.binary_name, method.name, method.descriptor.render()))
    rows = [result_row(a) for a in assignments(bundle, bits, identities)]
    return entry, len(model.methods), rows, None, flow_failures


def classify_archive(path, bundle, catalog, output, jobs=1, write_all=False):
    """
    Classify every method under ``path`` and write result lines to ``output``.

    Only methods with at least one label are written unless ``write_all``.
    """
    if bundle.catalog_id != catalog.catalog_id:
        raise CatalogMismatch(bundle.catalog_id, catalog.catalog_id)
    stats = RunStats()
    started = time.perf_counter()
    with PeakMemorySampler() as sampler, ArchiveScan(path) as scan:
        results = ordered_map(
            classify_entry, scan.entries(), jobs,
            initializer=_init_worker, initargs=(bundle, catalog),
            window=get_setting('WORKER_WINDOW'),
        )
        for entry, method_count, rows, error, flow_failures in results:
            if error is not None:
                scan.summary.warn(entry, error)
                continue
            stats.classes += 1
            stats.total_methods += method_count
            stats.flow_failures += flow_failures
            for row in rows:
                if row['labels']:
                    stats.biometric_methods += 1
                    for entry_label in row['labels']:
                        stats.label_counts[entry_label['label']] += 1
                if row['labels'] or write_all:
                    output.write(json.dumps(row, ensure_ascii=False) + '\n')
        stats.failures = list(scan.summary.failures)
    stats.wall_time = time.perf_counter() - started
    stats.peak_memory = sampler.peak_megabytes
    return stats
