from labeling.management.base import LabelingCommand
from labeling.report import build_report, load_results, render_report


class Command(LabelingCommand):
    help = "Render a DPIA-assist document from a classify results file."

    def add_command_arguments(self, parser):
        parser.add_argument('results', help="Results file written by the classify command.")
        parser.add_argument('-o', '--output', help="Document to write (default: stdout).")

    def run(self, results, output=None, **options):
        report = build_report(load_results(results), source=results)
        with self.open_output(output) as stream:
            stream.write(render_report(report, options['format']))
