"""
Run configuration of a pipeline command.

Values resolve per key with the precedence command-line flag, then the
INI file given with --config (environment variables of the same name win
over the file), then the caller's default. Every resolved value is kept
so the run can be written back as run_config.ini and replayed.
"""
import configparser
import logging
from pathlib import Path

from decouple import Config, RepositoryEmpty, RepositoryIni, UndefinedValueError

from nettwin.exceptions import InvalidArgument

logger = logging.getLogger(__name__)

RUN_CONFIG_FILE = 'run_config.ini'
SECTIONS = ('run', 'topology', 'dataset', 'model', 'train', 'eval', 'bench')


class SectionRepository(RepositoryIni):
    """RepositoryIni reading one named section instead of [settings]."""

    def __init__(self, source, section, encoding='utf-8'):
        super().__init__(source, encoding=encoding)
        self.SECTION = section


def render(value):
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ','.join(render(v) for v in value)
    return str(value)


class RunConfig:
    def __init__(self, path=None):
        self.path = Path(path) if path else None
        if self.path is not None and not self.path.is_file():
            raise InvalidArgument(f"config file {self.path} does not exist")
        self.resolved = {}
        self._sources = {}

    def source(self, section):
        if section not in SECTIONS:
            raise InvalidArgument(f"unknown config section [{section}]")
        if section not in self._sources:
            if self.path is None:
                repository = RepositoryEmpty()
            else:
                repository = SectionRepository(str(self.path), section)
            self._sources[section] = Config(repository)
        return self._sources[section]

    def get(self, section, key, flag=None, default=None, cast=str):
        """Resolve one key; `cast` applies to values read from the file only."""
        if flag is not None:
            value = flag
        else:
            try:
                value = self.source(section)(key, cast=cast)
            except UndefinedValueError:
                value = default
            except ValueError as e:
                raise InvalidArgument(f"[{section}] {key}: {e}")
        self.resolved.setdefault(section, {})[key] = value
        return value

    def unused_keys(self):
        """Keys present in the file that no command read."""
        if self.path is None:
            return []
        parser = configparser.ConfigParser(interpolation=None)
        parser.read(self.path, encoding='utf-8')
        return [f"{section}.{key}" for section in parser.sections()
                for key in parser[section] if key not in self.resolved.get(section, {})]

    def as_dict(self):
        return {section: dict(values) for section, values in self.resolved.items()}

    def write(self, out_dir):
        """Write the resolved configuration; None values are left out."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        parser = configparser.ConfigParser(interpolation=None)
        for section in SECTIONS:
            values = self.resolved.get(section)
            if not values:
                continue
            parser[section] = {key: render(value) for key, value in values.items() if value is not None}
        path = out_dir / RUN_CONFIG_FILE
        with open(path, 'w', encoding='utf-8', newline='\n') as handle:
            parser.write(handle)
        logger.info(f"Wrote resolved run config to {path}")
        return path
