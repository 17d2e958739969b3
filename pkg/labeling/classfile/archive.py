"""
Archive scanning.

Walks a JAR/zip archive, a directory tree or a single ``.class`` file
and yields one ClassModel per class entry, in lexicographic entry-name
order. Entries that fail to parse are logged and counted in the
ScanSummary; they never abort the scan.
"""

from dataclasses import dataclass, field
import logging
from pathlib import Path
from typing import List
import zipfile
import zlib

from ..errors import ArchiveUnreadable, ClassFileError
from ..parallel import ordered_map
from .model import SourceLocation
from .reader import parse_class

logger = logging.getLogger(__name__)

NESTED_ARCHIVE_SUFFIXES = ('.jar', '.zip', '.war', '.aar')


@dataclass(frozen=True)
class ScanFailure:
    entry: str
    reason: str


@dataclass
class ScanSummary:
    classes: int = 0
    methods: int = 0
    failures: List[ScanFailure] = field(default_factory=list)

    def warn(self, entry, reason):
        logger.warning("skipping %s: %s", entry, reason)
        self.failures.append(ScanFailure(entry, reason))


def parse_entry(item):
    """Worker: parse one (archive, entry, bytes) triple."""
    archive, entry, data = item
    try:
        return entry, parse_class(data, SourceLocation(archive, entry)), None
    except ClassFileError as exc:
        return entry, None, str(exc)


class ArchiveScan:
    """
    Iterable over the classes of one input path.

    Opening validates the input (raising ArchiveUnreadable); iterating
    parses entries, optionally across ``jobs`` worker processes, and fills
    in ``summary`` as it goes.
    """

    def __init__(self, path, jobs=1):
        self.path = Path(path)
        self.jobs = jobs
        self.summary = ScanSummary()
        self._zip = None
        self._skipped = []
        if not self.path.exists():
            raise ArchiveUnreadable(f"no such file or directory: {self.path}")
        if self.path.is_dir():
            self.entry_names = self._directory_entries()
        elif self.path.suffix == '.class':
            self.entry_names = [self.path.name]
        else:
            self.entry_names = self._zip_entries()

    def _directory_entries(self):
        names = []
        for candidate in self.path.rglob('*'):
            if not candidate.is_file():
                continue
            relative = candidate.relative_to(self.path).as_posix()
            if candidate.suffix == '.class':
                names.append(relative)
            elif candidate.suffix in NESTED_ARCHIVE_SUFFIXES:
                self._skipped.append(relative)
        return sorted(names)

    def _zip_entries(self):
        try:
            self._zip = zipfile.ZipFile(self.path)
        except (zipfile.BadZipFile, OSError) as exc:
            raise ArchiveUnreadable(f"cannot read archive {self.path}: {exc}") from exc
        names = []
        for info in self._zip.infolist():
            if info.is_dir():
                continue
            if info.filename.endswith('.class'):
                names.append(info.filename)
            elif info.filename.endswith(NESTED_ARCHIVE_SUFFIXES):
                self._skipped.append(info.filename)
        return sorted(names)

    def _read(self, name):
        if self._zip is not None:
            return self._zip.read(name)
        if self.path.is_dir():
            return (self.path / name).read_bytes()
        return self.path.read_bytes()

    def entries(self):
        """Yield (archive, entry, bytes) for every readable class entry."""
        for nested in sorted(self._skipped):
            self.summary.warn(nested, "nested archives are not scanned")
        self._skipped = []
        archive = str(self.path)
        for name in self.entry_names:
            try:
                data = self._read(name)
            except (zipfile.BadZipFile, zlib.error, EOFError, OSError, RuntimeError) as exc:
                self.summary.warn(name, f"unreadable entry: {exc}")
                continue
            yield archive, name, data

    def __iter__(self):
        for entry, model, error in ordered_map(parse_entry, self.entries(), self.jobs):
            if model is None:
                self.summary.warn(entry, error)
                continue
            self.summary.classes += 1
            self.summary.methods += model.method_count
            yield model

    def close(self):
        if self._zip is not None:
            self._zip.close()
            self._zip = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def scan_archive(path, jobs=1):
    return ArchiveScan(path, jobs=jobs)
