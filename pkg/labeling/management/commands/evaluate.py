import json

from django.core.management.base import CommandError

from labeling.conf import get_setting
from labeling.evaluation import cross_validate, holdout_evaluate, render_comparison
from labeling.groundtruth import load_dataset
from labeling.learners import ALGORITHMS
from labeling.management.base import LabelingCommand


class Command(LabelingCommand):
    help = "Compare the learners by repeated stratified k-fold cross-validation (or a hold-out split)."

    def add_command_arguments(self, parser):
        parser.add_argument('--dataset', help="Ground-truth JSON Lines file (default: the bundled ground truth).")
        parser.add_argument('--k', type=int, help="Folds per repeat (default from settings).")
        parser.add_argument('--repeats', type=int, help="Cross-validation repeats (default from settings).")
        parser.add_argument('--algorithms', help="Comma-separated learners (default: all).")
        parser.add_argument('--full', action='store_true', help="Show every label instead of the four-label view.")
        parser.add_argument('--holdout', action='store_true', help="Evaluate on a stratified train/test split instead.")
        parser.add_argument('--train-fraction', type=float, help="Training share of the hold-out split.")
        parser.add_argument('--report', help="Also write the full metrics report (JSON) to this path.")

    def run(self, dataset=None, k=None, repeats=None, algorithms=None, full=False, holdout=False,
            train_fraction=None, report=None, seed=0, jobs=1, **options):
        names = [name.strip() for name in algorithms.split(',')] if algorithms else list(ALGORITHMS)
        unknown = [name for name in names if name not in ALGORITHMS]
        if unknown:
            raise CommandError(f"unknown algorithm(s) {', '.join(unknown)}; choose from {', '.join(sorted(ALGORITHMS))}")

        records = load_dataset(dataset or get_setting('GROUND_TRUTH'))
        catalog = self.catalog(options)
        if holdout:
            fraction = train_fraction or get_setting('TRAIN_FRACTION')
            metrics = holdout_evaluate(records, catalog, names[0], fraction, seed)
            for name in names[1:]:
                extra = holdout_evaluate(records, catalog, name, fraction, seed)
                metrics.rows.extend(extra.rows)
                metrics.warnings.extend(extra.warnings)
        else:
            metrics = cross_validate(
                records, catalog, names,
                k=k or get_setting('CV_FOLDS'),
                repeats=repeats or get_setting('CV_REPEATS'),
                seed=seed,
                jobs=jobs,
            )

        if report:
            with self.open_output(report) as stream:
                stream.write(metrics.to_json())
        text, document = render_comparison(metrics, full=full)
        self.emit(options, text, json.loads(document))
