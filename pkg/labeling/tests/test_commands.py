from collections import Counter
from io import StringIO
import json

from django.core.management import call_command
from django.core.management.base import CommandError
import pytest

from labeling.groundtruth import LABELS, load_dataset, parse_dataset
from labeling.learners import load_bundle
from labeling.report import load_results

from . import classgen


def run(*args):
    stdout, stderr = StringIO(), StringIO()
    call_command(*[str(arg) for arg in args], stdout=stdout, stderr=stderr)
    return stdout.getvalue(), stderr.getvalue()


def result_lines(path):
    return [json.loads(line) for line in path.read_text(encoding='utf-8').splitlines()]


# ----------------------
# harvest
# ----------------------
def test_harvest_writes_a_skeleton(corpus_jar, corpus_specs, tmp_path):
    output = tmp_path / 'skeleton.jsonl'
    stdout, _ = run('harvest', corpus_jar, '-o', output, '--jobs', 1)
    dataset = load_dataset(output)
    assert len(dataset) == sum(len(spec.methods) for spec in corpus_specs)
    assert set(dataset.provenance) == {'corpus.jar'}
    assert all(not record.labels for record in dataset)
    assert f"{len(dataset)} records from {len(corpus_specs)} classes" in stdout


def test_harvest_to_stdout(stub_jar):
    stdout, _ = run('harvest', stub_jar, '--provenance', 'stub', '--jobs', 1)
    dataset = parse_dataset(stdout)
    assert dataset.provenance[0] == 'stub'
    assert {record.method_name for record in dataset} == {'authenticate', 'getTitle', 'authenticateInternal',
                                                         'getCipher', 'getOpId'}


def test_harvest_reports_skipped_entries(tmp_path):
    entries = classgen.entries_of([classgen.ClassSpec('a/Good', [classgen.CONSTRUCTOR])])
    entries['a/Bad.class'] = b'junk'
    archive = classgen.write_archive(tmp_path / 'mixed.jar', entries)
    _, stderr = run('harvest', archive, '-o', tmp_path / 'out.jsonl', '--jobs', 1)
    assert 'warning: a/Bad.class' in stderr


def test_harvest_of_a_missing_archive(tmp_path):
    with pytest.raises(CommandError):
        run('harvest', tmp_path / 'absent.jar')


# ----------------------
# train
# ----------------------
def test_train_writes_a_bundle(tmp_path, ground_truth):
    output = tmp_path / 'nb.json'
    catalog_path = tmp_path / 'catalog.json'
    stdout, _ = run('train', '-o', output, '--algorithm', 'nb', '--export-catalog', catalog_path,
                    '--jobs', 1, '--format', 'json')
    summary = json.loads(stdout)
    bundle = load_bundle(output)
    assert bundle.algorithm == 'nb'
    assert summary['records'] == len(ground_truth) == bundle.metadata['training_examples']
    assert summary['catalog_id'] == bundle.catalog_id
    assert len(json.loads(catalog_path.read_text())) == bundle.metadata['catalog_size']


def test_train_is_reproducible(tmp_path):
    first, second = tmp_path / 'first.json', tmp_path / 'second.json'
    run('train', '-o', first, '--algorithm', 'logistic', '--seed', 3, '--jobs', 1)
    run('train', '-o', second, '--algorithm', 'logistic', '--seed', 3, '--jobs', 2)
    assert first.read_bytes() == second.read_bytes()


def test_train_warns_about_single_class_labels(tmp_path):
    dataset = tmp_path / 'tiny.jsonl'
    dataset.write_text(
        '{"name": "a.B.getValue", "return": "int", "parametersTypes": [], "calleeNames": [], "labels": ["SOURCE"]}\n'
        '{"name": "a.B.setValue", "return": "void", "parametersTypes": ["int"], "calleeNames": [], "labels": ["SINK"]}\n',
        encoding='utf-8')
    _, stderr = run('train', '-o', tmp_path / 'tiny.json', '--dataset', dataset, '--algorithm', 'stump', '--jobs', 1)
    assert 'warning: TRANSFER: single-class training data' in stderr


def test_train_on_an_empty_dataset(tmp_path):
    dataset = tmp_path / 'empty.jsonl'
    dataset.write_text('', encoding='utf-8')
    with pytest.raises(CommandError):
        run('train', '-o', tmp_path / 'model.json', '--dataset', dataset)


# ----------------------
# evaluate
# ----------------------
def test_evaluate_prints_the_comparison(tmp_path):
    report = tmp_path / 'metrics.json'
    stdout, _ = run('evaluate', '--k', 2, '--repeats', 1, '--algorithms', 'nb,stump', '--jobs', 1,
                    '--report', report)
    lines = stdout.splitlines()
    assert lines[0] == '1 x 2-fold cross-validation (seed 42)'
    assert 'Source' in lines[3] and 'Average' in lines[3]
    assert lines[6].startswith('nb ') and lines[7].startswith('stump ')
    metrics = json.loads(report.read_text())
    assert {row['algorithm'] for row in metrics['rows']} == {'nb', 'stump'}
    assert len(metrics['rows']) == 2 * 16


def test_evaluate_json_and_full_view():
    stdout, _ = run('evaluate', '--k', 2, '--repeats', 1, '--algorithms', 'nb', '--full', '--format', 'json',
                    '--jobs', 1)
    document = json.loads(stdout)
    assert document['columns'][:3] == ['BSC1', 'BSC2', 'BSC3']
    assert document['columns'][-1] == 'Average'
    assert document['algorithms'] == ['nb']


def test_evaluate_holdout():
    stdout, _ = run('evaluate', '--holdout', '--train-fraction', 0.7, '--algorithms', 'nb,tree', '--jobs', 1)
    assert stdout.startswith('hold-out evaluation (seed 42)')
    assert '\ntree ' in stdout


def test_evaluate_report_needs_a_writable_path(tmp_path):
    for report in (tmp_path / 'missing' / 'metrics.json', tmp_path):
        with pytest.raises(CommandError):
            run('evaluate', '--k', 2, '--repeats', 1, '--algorithms', 'nb', '--jobs', 1, '--report', report)


def test_evaluate_rejects_unknown_algorithms():
    with pytest.raises(CommandError):
        run('evaluate', '--algorithms', 'nb,forest')


# ----------------------
# classify
# ----------------------
def test_stub_authenticate_is_labeled(stub_jar, reference_model, tmp_path):
    output = tmp_path / 'stub.jsonl'
    stdout, _ = run('classify', stub_jar, '--model', reference_model, '-o', output, '--jobs', 1)
    rows = {(row['method'], row['descriptor']): row for row in result_lines(output)}
    row = rows[('authenticate', classgen.CRYPTO_AUTHENTICATE)]
    labels = {entry['label'] for entry in row['labels']}
    assert {'AUTHENTICATE', 'CRYPTO'} <= labels
    assert row['resolved_bsc'] == 'BSC3'
    assert 'BSC3' in labels and not labels & {'BSC1', 'BSC2'}
    assert row['owner'] == 'android.hardware.biometrics.BiometricPrompt'
    assert stdout.startswith('#M ')


def test_classify_output_is_identical_across_runs_and_jobs(stub_jar, corpus_jar, reference_model, tmp_path):
    for archive in (stub_jar, corpus_jar):
        outputs = []
        for name, jobs in (('a', 1), ('b', 1), ('c', 2)):
            output = tmp_path / f'{archive.stem}-{name}.jsonl'
            run('classify', archive, '--model', reference_model, '-o', output, '--all', '--jobs', jobs)
            outputs.append(output.read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]


def test_classify_statistics(corpus_jar, corpus_specs, reference_model, tmp_path):
    output = tmp_path / 'all.jsonl'
    stdout, _ = run('classify', corpus_jar, '--model', reference_model, '-o', output, '--all',
                    '--jobs', 1, '--format', 'json')
    stats = json.loads(stdout)
    assert stats['total_methods'] == sum(len(spec.methods) for spec in corpus_specs)
    assert stats['classes'] == len(corpus_specs)
    assert len(result_lines(output)) == stats['total_methods']
    labeled = [row for row in result_lines(output) if row['labels']]
    assert stats['biometric_methods'] == len(labeled)
    assert stats['failures'] == []
    assert stats['peak_memory'] > 0


def test_classify_an_empty_archive(reference_model, tmp_path):
    archive = classgen.write_archive(tmp_path / 'empty.jar', {})
    output = tmp_path / 'empty.jsonl'
    stdout, stderr = run('classify', archive, '--model', reference_model, '-o', output, '--jobs', 1)
    table = stdout.splitlines()[:2 + len(LABELS)]
    assert [line.split()[0] for line in table] == ['#M', '#BM'] + [label.value for label in LABELS]
    assert all(line.split()[1] == '0' for line in table)
    assert output.read_text(encoding='utf-8') == ''
    assert stderr == ''


def test_classify_label_counts_match_the_results_file(stub_jar, corpus_jar, reference_model, tmp_path):
    for archive in (stub_jar, corpus_jar):
        output = tmp_path / f'{archive.stem}.jsonl'
        stdout, _ = run('classify', archive, '--model', reference_model, '-o', output, '--jobs', 1)
        rows = result_lines(output)
        recount = Counter(entry['label'] for row in rows for entry in row['labels'])
        table = dict(line.split() for line in stdout.splitlines()[:2 + len(LABELS)])
        assert int(table['#BM']) == len(rows)
        assert {label.value: int(table[label.value]) for label in LABELS} == \
            {label.value: recount[label.value] for label in LABELS}
        if archive == stub_jar:
            assert recount['AUTHENTICATE'] >= 1


def test_classify_with_a_foreign_lexicon(stub_jar, reference_model, tmp_path):
    lexicon = tmp_path / 'other.lexicon'
    lexicon.write_text('[keywords]\nget\n', encoding='utf-8')
    with pytest.raises(CommandError):
        run('classify', stub_jar, '--model', reference_model, '-o', tmp_path / 'out.jsonl',
            '--lexicon', lexicon, '--jobs', 1)


def test_classify_bad_inputs(stub_jar, reference_model, tmp_path):
    with pytest.raises(CommandError):
        run('classify', tmp_path / 'absent.jar', '--model', reference_model, '-o', tmp_path / 'out.jsonl')
    with pytest.raises(CommandError):
        run('classify', stub_jar, '--model', tmp_path / 'absent.json', '-o', tmp_path / 'out.jsonl')
    with pytest.raises(CommandError):
        run('classify', stub_jar, '--model', reference_model, '-o', tmp_path / 'missing' / 'out.jsonl')


# ----------------------
# report
# ----------------------
def test_report_from_classify_results(stub_jar, reference_model, tmp_path):
    results = tmp_path / 'results.jsonl'
    run('classify', stub_jar, '--model', reference_model, '-o', results, '--jobs', 1)
    stdout, _ = run('report', results)
    assert stdout.count('\n## ') == 5
    assert 'android.hardware.biometrics.BiometricPrompt.authenticate' in stdout

    document = tmp_path / 'dpia.md'
    run('report', results, '-o', document)
    assert document.read_text(encoding='utf-8') == stdout
    assert len(load_results(results)) >= 1


def test_report_json(stub_jar, reference_model, tmp_path):
    results = tmp_path / 'results.jsonl'
    run('classify', stub_jar, '--model', reference_model, '-o', results, '--jobs', 1)
    stdout, _ = run('report', results, '--format', 'json')
    assert [section['key'] for section in json.loads(stdout)['sections']][0] == 'consent'


def test_report_rejects_malformed_results(tmp_path):
    results = tmp_path / 'results.jsonl'
    results.write_text('{"owner": "a.B"}\n', encoding='utf-8')
    with pytest.raises(CommandError):
        run('report', results)


# ----------------------
# scale
# ----------------------
@pytest.mark.slow
def test_hundred_thousand_methods(tmp_path, reference_model):
    archive = classgen.write_large_archive(tmp_path / 'large.jar', classes=1000, methods_per_class=100)
    stdout, _ = run('classify', archive, '--model', reference_model, '-o', tmp_path / 'large.jsonl',
                    '--format', 'json')
    stats = json.loads(stdout)
    assert stats['total_methods'] == 100_000
    assert stats['wall_time'] < 120
    assert stats['peak_memory'] < 1024
