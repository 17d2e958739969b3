from pathlib import Path

from labeling.classfile import ArchiveScan
from labeling.groundtruth import Dataset, drop_duplicates, dumps_dataset, records_from_scan
from labeling.management.base import LabelingCommand


class Command(LabelingCommand):
    help = "Write an unlabeled ground-truth skeleton for every method in a JAR, directory or class file."

    def add_command_arguments(self, parser):
        parser.add_argument('archive', help="JAR/zip archive, directory of class files, or a .class file.")
        parser.add_argument('-o', '--output', help="Skeleton file to write (default: stdout).")
        parser.add_argument('--provenance', help="Provenance note for the record batch (default: the archive name).")

    def run(self, archive, output=None, provenance=None, jobs=1, **options):
        with ArchiveScan(archive, jobs=jobs) as scan:
            harvested = list(records_from_scan(scan))
            summary = scan.summary
        records, dropped = drop_duplicates(harvested)
        note = provenance or Path(archive).name
        dataset = Dataset(tuple(records), (note,) * len(records))

        with self.open_output(output) as stream:
            stream.write(dumps_dataset(dataset))

        for failure in summary.failures:
            self.warn(f"{failure.entry}: {failure.reason}")
        for record in dropped:
            self.warn(f"duplicate signature dropped: {record.name}({', '.join(record.parameter_types)})")
        if output not in (None, '-'):
            self.emit(
                options,
                f"{len(records)} records from {summary.classes} classes ({summary.methods} methods) -> {output}",
                {
                    'records': len(records),
                    'classes': summary.classes,
                    'methods': summary.methods,
                    'duplicates_dropped': len(dropped),
                    'failures': len(summary.failures),
                },
            )
