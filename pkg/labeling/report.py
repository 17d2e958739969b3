"""
DPIA-assist report: maps classified methods onto the data-protection
questions a DPO answers in an impact assessment.
"""

from dataclasses import dataclass
import json
import logging
from pathlib import Path
from typing import Optional, Tuple

from django.template.loader import render_to_string

from .errors import MalformedResults
from .groundtruth import LABELS, Label

logger = logging.getLogger(__name__)

RESULT_KEYS = ('owner', 'method', 'descriptor', 'labels', 'resolved_bsc')
NONE_FOUND = "None found."


@dataclass(frozen=True)
class DpiaSection:
    key: str
    question: str
    labels: Tuple[Label, ...]
    guidance: str
    when_empty: str = ''


SECTIONS = (
    DpiaSection(
        'consent',
        "Determination and description of the controls for obtaining consent",
        (Label.PERMISSION,),
        "Methods that request or check biometric permissions. Compare their call sites with the "
        "privacy policy to find places where biometric data may be used without consent.",
    ),
    DpiaSection(
        'secure_storage',
        "Secure data storage, particularly in the event of sourcing",
        (Label.CRYPTO, Label.BSC3),
        "Methods that bind biometric authentication to cryptographic objects or reach the strong "
        "biometric class. Their absence suggests authentication without key-backed protection.",
    ),
    DpiaSection(
        'purposes',
        "Detailed presentation of the data processing purposes",
        (Label.INTERACTION, Label.AUTHENTICATE),
        "User-facing biometric interactions and authentication entry points. Each one names a "
        "context in which the application processes biometric data.",
    ),
    DpiaSection(
        'portability',
        "Retrieval of personal data in a reusable format and transfer to another service",
        (Label.TRANSFER,),
        "Methods that move biometric data or authentication decisions to another component or service.",
        "Biometric templates on mainstream mobile platforms are kept in an isolated trusted execution "
        "environment (a TEE or secure enclave) that runs beside the application's operating system, "
        "so no transfer path is expected in application code.",
    ),
    DpiaSection(
        'retention',
        "Personal data that will nevertheless be stored",
        (Label.STORAGE, Label.DELETION),
        "Methods that persist or erase data. Check them against the retention periods declared "
        "for biometric data.",
    ),
)


@dataclass(frozen=True)
class ResultRecord:
    owner: str
    method: str
    descriptor: str
    labels: Tuple[Tuple[Label, object], ...]
    resolved_bsc: Optional[Label] = None

    @property
    def qualified_name(self):
        return f"{self.owner}.{self.method}"

    @property
    def label_set(self):
        return frozenset(label for label, _score in self.labels)


def _label(value, line):
    try:
        return Label(value)
    except ValueError:
        raise MalformedResults(line, f"unknown label {value!r}") from None


def parse_result(data, line):
    if not isinstance(data, dict) or set(data) != set(RESULT_KEYS):
        raise MalformedResults(line, f"expected an object with keys {', '.join(RESULT_KEYS)}")
    for key in ('owner', 'method', 'descriptor'):
        if not isinstance(data[key], str):
            raise MalformedResults(line, f"{key} must be a string")
    if not isinstance(data['labels'], list):
        raise MalformedResults(line, "labels must be a list")
    labels = []
    for entry in data['labels']:
        if not isinstance(entry, dict) or set(entry) != {'label', 'score'}:
            raise MalformedResults(line, "each label entry needs exactly 'label' and 'score'")
        labels.append((_label(entry['label'], line), entry['score']))
    resolved = data['resolved_bsc']
    return ResultRecord(
        data['owner'], data['method'], data['descriptor'], tuple(labels),
        None if resolved is None else _label(resolved, line),
    )


def load_results(path):
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise MalformedResults(0, f"cannot read results file {path}: {exc}") from exc
    results = []
    for line, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedResults(line, exc.msg) from exc
        results.append(parse_result(data, line))
    return results


def build_report(results, source=''):
    """Plain-data report: one entry per DPIA section, methods sorted by name."""
    ordered = sorted(results, key=lambda r: (r.owner, r.method, r.descriptor))
    totals = {label: 0 for label in LABELS}
    for result in ordered:
        for label in result.label_set:
            totals[label] += 1
    sections = []
    for section in SECTIONS:
        wanted = set(section.labels)
        methods = [
            {
                'name': result.qualified_name,
                'descriptor': result.descriptor,
                'labels': [label.value for label in LABELS if label in result.label_set & wanted],
            }
            for result in ordered if result.label_set & wanted
        ]
        sections.append({
            'key': section.key,
            'question': section.question,
            'labels': [label.value for label in section.labels],
            'guidance': section.guidance,
            'counts': {label.value: totals[label] for label in section.labels},
            'methods': methods,
            'none_found': ' '.join(filter(None, (NONE_FOUND, section.when_empty))) if not methods else '',
        })
    return {
        'source': str(source),
        'total_methods': len(ordered),
        'sections': sections,
    }


def render_report(report, output_format='text'):
    if output_format == 'json':
        return json.dumps(report, sort_keys=True, indent=2) + '\n'
    return render_to_string('labeling/dpia_report.md', report)
