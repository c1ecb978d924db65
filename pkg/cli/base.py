import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from django.utils import timezone

from nettwin.exceptions import InvalidArgument, NetTwinError
from .models import RunRecord
from .runconfig import RunConfig

logger = logging.getLogger(__name__)

USAGE = 2
FAILURE = 1


class UsageError(CommandError):
    def __init__(self, message):
        super().__init__(message, returncode=USAGE)


class PipelineCommand(BaseCommand):
    """
    Shared flag and config handling of the pipeline commands.

    Subclasses add their flags in `add_command_arguments`, read them in
    `resolve` through the RunConfig and do the work in `run`, which
    returns a JSON-serializable summary.
    """

    name = None
    title = None

    def add_arguments(self, parser):
        parser.add_argument('--config', help='INI run configuration file')
        parser.add_argument('--seed', type=int, help='Global seed')
        parser.add_argument('--out', help='Output directory')
        parser.add_argument('--workers', type=int, help='Worker processes for sample-level work')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def resolve(self, run_config, options):
        raise NotImplementedError

    def run(self):
        raise NotImplementedError

    def handle(self, *args, **options):
        self.stdout.write("=" * 60)
        self.stdout.write(f"NETTWIN - {self.title}")
        self.stdout.write("=" * 60)

        try:
            run_config = RunConfig(options.get('config'))
            self.seed = run_config.get('run', 'seed', options.get('seed'), settings.DEFAULT_SEED, int)
            self.workers = run_config.get('run', 'workers', options.get('workers'),
                                          settings.DEFAULT_WORKERS, int)
            self.out_dir = Path(run_config.get('run', 'out', options.get('out'), 'out'))
            if self.workers < 1:
                raise InvalidArgument(f"--workers must be at least 1, got {self.workers}")
            self.resolve(run_config, options)
        except InvalidArgument as e:
            raise UsageError(str(e))
        except NetTwinError as e:
            raise CommandError(str(e), returncode=FAILURE)
        for key in run_config.unused_keys():
            self.stdout.write(self.style.WARNING(f"Ignoring unknown config key {key}"))
            logger.warning(f"Ignoring unknown config key {key}")

        run_config.write(self.out_dir)
        record = self._register(run_config)
        try:
            summary = self.run()
        except CommandError as e:
            self._finish(record, 'failed', error=str(e))
            raise
        except NetTwinError as e:
            logger.error(f"{self.name} failed: {e}")
            self._finish(record, 'failed', error=str(e))
            raise CommandError(str(e), returncode=FAILURE)
        self._finish(record, 'succeeded', summary=summary)

        self.stdout.write("=" * 60)
        self.stdout.write(self.style.SUCCESS(f"✓ {self.title} completed, outputs in {self.out_dir}"))
        self.stdout.write("=" * 60)

    def _register(self, run_config):
        try:
            return RunRecord.objects.create(
                command=self.name, seed=self.seed, out_dir=str(self.out_dir),
                config=_jsonable(run_config.as_dict()))
        except Exception as e:
            logger.warning(f"Could not register {self.name} run: {e}")
            return None

    def _finish(self, record, status, summary=None, error=''):
        if record is None:
            return
        try:
            record.status = status
            record.summary = _jsonable(summary or {})
            record.error_message = error
            record.finished_at = timezone.now()
            record.save()
        except Exception as e:
            logger.warning(f"Could not update run record {record.id}: {e}")


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value
