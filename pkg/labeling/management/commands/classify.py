from labeling.learners import load_bundle
from labeling.management.base import LabelingCommand
from labeling.pipeline import classify_archive, render_label_counts, render_run_stats


class Command(LabelingCommand):
    help = "Label every method of a JAR, directory or class file with a trained model bundle."

    def add_command_arguments(self, parser):
        parser.add_argument('archive', help="JAR/zip archive, directory of class files, or a .class file.")
        parser.add_argument('--model', required=True, help="Model bundle written by the train command.")
        parser.add_argument('-o', '--output', required=True, help="Results file (JSON Lines) to write.")
        parser.add_argument('--all', action='store_true', dest='write_all',
                            help="Write a line for every method, not only labeled ones.")

    def run(self, archive, model, output, write_all=False, jobs=1, **options):
        bundle = load_bundle(model)
        catalog = self.catalog(options)
        with self.open_output(output) as stream:
            stats = classify_archive(archive, bundle, catalog, stream, jobs=jobs, write_all=write_all)

        for failure in stats.failures:
            self.warn(f"{failure.entry}: {failure.reason}")
        if stats.flow_failures:
            self.warn(f"flow analysis skipped for {stats.flow_failures} method(s) with malformed bytecode")
        self.emit(options, render_label_counts(stats) + '\n' + render_run_stats(stats), stats.to_dict())
