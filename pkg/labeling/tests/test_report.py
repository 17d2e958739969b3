import json

import pytest

from labeling.errors import MalformedResults
from labeling.groundtruth import Label
from labeling.report import NONE_FOUND, SECTIONS, build_report, load_results, parse_result, render_report


def result(owner, method, *labels, descriptor='()V', resolved=None):
    return {
        'owner': owner,
        'method': method,
        'descriptor': descriptor,
        'labels': [{'label': label, 'score': 1.5} for label in labels],
        'resolved_bsc': resolved,
    }


RESULTS = [
    result('com.example.app.Login', 'authenticate', 'AUTHENTICATE', 'CRYPTO', 'BSC3', 'SINK',
           descriptor='(Landroid/hardware/biometrics/BiometricPrompt$CryptoObject;)V', resolved='BSC3'),
    result('com.example.app.Login', 'showPrompt', 'INTERACTION', 'SINK'),
    result('com.example.app.Vault', 'saveToken', 'STORAGE', 'SINK', descriptor='(Ljava/lang/String;)V'),
    result('com.example.app.Vault', 'clearAll', 'DELETION'),
    result('com.example.app.Setup', 'checkPermission', 'PERMISSION', 'CHECKER', descriptor='()Z'),
    result('com.example.app.Util', 'hash', descriptor='([B)I'),
]


def write_results(path, records):
    path.write_text(''.join(json.dumps(record) + '\n' for record in records), encoding='utf-8')
    return path


def test_five_sections_in_order():
    report = build_report([parse_result(r, n) for n, r in enumerate(RESULTS, start=1)], source='results.jsonl')
    assert [section['key'] for section in report['sections']] == [
        'consent', 'secure_storage', 'purposes', 'portability', 'retention',
    ]
    assert report['total_methods'] == 6
    by_key = {section['key']: section for section in report['sections']}
    assert [m['name'] for m in by_key['consent']['methods']] == ['com.example.app.Setup.checkPermission']
    assert by_key['secure_storage']['methods'][0]['labels'] == ['BSC3', 'CRYPTO']
    assert by_key['secure_storage']['counts'] == {'CRYPTO': 1, 'BSC3': 1}
    assert [m['name'] for m in by_key['retention']['methods']] == [
        'com.example.app.Vault.clearAll', 'com.example.app.Vault.saveToken',
    ]


def test_no_transfer_methods_gives_the_platform_statement():
    report = build_report([parse_result(r, 1) for r in RESULTS])
    portability = report['sections'][3]
    assert portability['methods'] == []
    assert portability['none_found'].startswith(NONE_FOUND)
    assert 'trusted execution environment' in portability['none_found']

    text = render_report(report)
    assert text.count('\n## ') == len(SECTIONS) == 5
    assert '## 4. Retrieval of personal data in a reusable format' in text
    assert 'None found. Biometric templates' in text


def test_other_empty_sections_just_say_none_found():
    only_transfer = [parse_result(result('a.B', 'upload', 'TRANSFER', 'SINK'), 1)]
    report = build_report(only_transfer)
    consent, _storage, _purposes, portability, _retention = report['sections']
    assert consent['none_found'] == NONE_FOUND
    assert portability['none_found'] == ''
    assert '- `a.B.upload()V` (TRANSFER)' in render_report(report)


def test_rendering_is_deterministic(tmp_path):
    forward = load_results(write_results(tmp_path / 'forward.jsonl', RESULTS))
    backward = load_results(write_results(tmp_path / 'backward.jsonl', list(reversed(RESULTS))))
    text = render_report(build_report(forward, source='app'))
    assert render_report(build_report(backward, source='app')) == text
    assert render_report(build_report(forward, source='app')) == text
    assert text.startswith('# Biometric API behavior: DPIA assessment support')
    assert 'Source: app' in text


def test_json_rendering():
    report = build_report([parse_result(r, 1) for r in RESULTS], source='x')
    document = json.loads(render_report(report, 'json'))
    assert document == json.loads(json.dumps(report))


def test_results_file_with_blank_lines(tmp_path):
    path = tmp_path / 'results.jsonl'
    path.write_text(json.dumps(RESULTS[0]) + '\n\n' + json.dumps(RESULTS[1]) + '\n', encoding='utf-8')
    records = load_results(path)
    assert [r.method for r in records] == ['authenticate', 'showPrompt']
    assert records[0].resolved_bsc == Label.BSC3
    assert Label.CRYPTO in records[0].label_set


@pytest.mark.parametrize('raw', [
    '{"owner": "a.B"}',
    json.dumps(dict(RESULTS[0], labels=[{'label': 'PASSWORD', 'score': 1.0}])),
    json.dumps(dict(RESULTS[0], labels=[{'label': 'SINK'}])),
    json.dumps(dict(RESULTS[0], labels='SINK')),
    json.dumps(dict(RESULTS[0], owner=3)),
    json.dumps(dict(RESULTS[0], resolved_bsc='BSC9')),
    'not json',
])
def test_malformed_results(tmp_path, raw):
    path = tmp_path / 'results.jsonl'
    path.write_text(json.dumps(RESULTS[1]) + '\n' + raw + '\n', encoding='utf-8')
    with pytest.raises(MalformedResults) as caught:
        load_results(path)
    assert caught.value.line == 2


def test_missing_results_file(tmp_path):
    with pytest.raises(MalformedResults):
        load_results(tmp_path / 'absent.jsonl')
