import pytest

from labeling.conf import get_setting, hyperparameters
from labeling.features import build_catalog, load_lexicon
from labeling.groundtruth import load_dataset
from labeling.learners import TrainingMatrix, save_bundle, train_bundle

from . import classgen


@pytest.fixture(scope='session')
def lexicon():
    return load_lexicon()


@pytest.fixture(scope='session')
def catalog(lexicon):
    return build_catalog(lexicon, receiver_flows=True)


@pytest.fixture(scope='session')
def ground_truth():
    return load_dataset(get_setting('GROUND_TRUTH'))


@pytest.fixture(scope='session')
def corpus_specs():
    return classgen.corpus_specs()


@pytest.fixture(scope='session')
def corpus_jar(tmp_path_factory, corpus_specs):
    path = tmp_path_factory.mktemp('corpus') / 'corpus.jar'
    return classgen.write_archive(path, classgen.entries_of(corpus_specs))


@pytest.fixture(scope='session')
def stub_jar(tmp_path_factory):
    path = tmp_path_factory.mktemp('stub') / 'biometric-stub.jar'
    return classgen.write_archive(path, classgen.entries_of(classgen.biometric_prompt_specs()))


@pytest.fixture(scope='session')
def reference_bundle(ground_truth, catalog):
    """The default learner trained on the bundled ground truth."""
    matrix = TrainingMatrix.from_dataset(ground_truth, catalog)
    return train_bundle(matrix, get_setting('DEFAULT_ALGORITHM'), get_setting('DEFAULT_SEED'),
                        hyperparameters=hyperparameters(get_setting('DEFAULT_ALGORITHM')))


@pytest.fixture(scope='session')
def reference_model(tmp_path_factory, reference_bundle):
    path = tmp_path_factory.mktemp('model') / 'reference.json'
    save_bundle(reference_bundle, path)
    return path
