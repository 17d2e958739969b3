import json
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from ..conf import get_setting
from ..errors import LabelingError
from ..features import build_catalog, load_lexicon
from ..parallel import default_jobs

logger = logging.getLogger(__name__)


class LabelingCommand(BaseCommand):
    """
    Base for the labeling commands.

    Adds the global ``--lexicon``, ``--seed``, ``--jobs`` and ``--format``
    flags and turns any LabelingError into a CommandError (exit status 1).
    Subclasses implement ``add_command_arguments`` and ``run``.
    """

    def add_arguments(self, parser):
        parser.add_argument('--lexicon', help="Lexicon file (default: the bundled lexicon).")
        parser.add_argument('--seed', type=int, help="Random seed (default from settings).")
        parser.add_argument('--jobs', type=int, help="Worker processes (default: available cores).")
        parser.add_argument('--format', choices=('text', 'json'), default='text', help="Output format.")
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        options['seed'] = get_setting('DEFAULT_SEED') if options.get('seed') is None else options['seed']
        options['jobs'] = options.get('jobs') or default_jobs()
        try:
            self.run(**options)
        except LabelingError as exc:
            raise CommandError(str(exc)) from exc

    def run(self, **options):
        raise NotImplementedError

    # ----------------------
    # Helpers
    # ----------------------
    def catalog(self, options):
        return build_catalog(load_lexicon(options.get('lexicon')))

    def emit(self, options, text, document):
        """Write ``text`` or, with ``--format json``, ``document`` to stdout."""
        if options['format'] == 'json':
            self.stdout.write(json.dumps(document, sort_keys=True, indent=2))
        else:
            self.stdout.write(text, ending='' if text.endswith('\n') else '\n')

    def warn(self, message):
        self.stderr.write(self.style.WARNING(f"warning: {message}"))

    def open_output(self, path):
        """Text stream for ``path``; ``-`` or None means stdout."""
        if path in (None, '-'):
            return _CommandStream(self.stdout)
        target = Path(path)
        if target.parent and not target.parent.exists():
            raise CommandError(f"output directory {target.parent} does not exist")
        try:
            return open(target, 'w', encoding='utf-8', newline='\n')
        except OSError as exc:
            raise CommandError(f"cannot write {target}: {exc.strerror or exc}") from exc


class _CommandStream:
    """The command's stdout as a plain, non-closing text sink."""

    def __init__(self, stream):
        self.stream = stream

    def write(self, text):
        self.stream.write(text, ending='')

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.stream.flush()
