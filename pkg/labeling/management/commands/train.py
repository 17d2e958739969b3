from pathlib import Path

from labeling.conf import get_setting, hyperparameters
from labeling.errors import EmptyDataset
from labeling.groundtruth import dataset_hash, load_dataset
from labeling.learners import ALGORITHMS, TrainingMatrix, save_bundle, train_bundle
from labeling.management.base import LabelingCommand


class Command(LabelingCommand):
    help = "Train one model per label on a ground-truth file and save the model bundle."

    def add_command_arguments(self, parser):
        parser.add_argument('-o', '--output', required=True, help="Model bundle (JSON) to write.")
        parser.add_argument('--dataset', help="Ground-truth JSON Lines file (default: the bundled ground truth).")
        parser.add_argument('--algorithm', choices=sorted(ALGORITHMS), help="Learner for every label.")
        parser.add_argument('--export-catalog', help="Also write the feature catalog as JSON to this path.")

    def run(self, output, dataset=None, algorithm=None, export_catalog=None, seed=0, jobs=1, **options):
        algorithm = algorithm or get_setting('DEFAULT_ALGORITHM')
        dataset_path = dataset or get_setting('GROUND_TRUTH')
        records = load_dataset(dataset_path)
        if not len(records):
            raise EmptyDataset(f"{dataset_path} holds no records to train on")

        catalog = self.catalog(options)
        matrix = TrainingMatrix.from_dataset(records, catalog)
        bundle = train_bundle(
            matrix, algorithm, seed,
            hyperparameters=hyperparameters(algorithm),
            jobs=jobs,
            metadata={'dataset_hash': dataset_hash(records), 'catalog_size': len(catalog)},
        )
        save_bundle(bundle, output)
        if export_catalog:
            Path(export_catalog).write_text(catalog.to_json(), encoding='utf-8')

        for label in bundle.degenerate_labels:
            self.warn(f"{label.value}: single-class training data; constant classifier used")
        self.emit(
            options,
            f"trained {len(bundle.models)} {algorithm} models on {len(records)} records -> {output}",
            {
                'algorithm': algorithm,
                'models': len(bundle.models),
                'records': len(records),
                'catalog_id': bundle.catalog_id,
                'degenerate_labels': bundle.metadata['degenerate_labels'],
                'output': str(output),
            },
        )
