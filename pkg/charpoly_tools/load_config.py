import logging
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .rng import default_threads

logger = logging.getLogger(__name__)

COMMANDS = ('gen-spectrum', 'max-experiment', 'fs-verify', 'mem-verify', 'branch-verify',
            'matching-verify', 'lowerbound-sim', 'upperbound-verify', 'brw-verify')


def _int_list(text):
    return tuple(int(v) for v in str(text).replace(',', ' ').split())


def _flag(text):
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError('not a boolean: %r' % text)


# key -> parser
KEYS = {'command': str, 'model': str, 'N': _int_list, 'n': int, 'samples': int,
        'seed': int, 'threads': int, 'out': str, 'format': str, 'delta': float,
        'eta': _int_list, 'y': float, 'epsilon': float, 'k': int, 'ell': int,
        'stride': int, 'sweeps': int, 'step': float, 't4': float, 'base': str,
        'check': _flag}


def load_config(config_file):
    ''' Read a flat ``key value`` configuration file

    Parameters
    ----------
    config_file : str
        Text file with one ``key value`` or ``key = value`` per line;
        ``#`` starts a comment

    Returns
    -------
    config_dict : dictionary
        Raw string values keyed by configuration key
    '''
    config_dict = dict()
    with open(config_file, 'r') as f:
        for lineno, line in enumerate(f, 1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' in line:
                key, value = line.split('=', 1)
            else:
                parts = line.split(None, 1)
                if len(parts) != 2:
                    raise ConfigError('%s:%d: expected "key value"' % (config_file, lineno))
                key, value = parts
            key = key.strip()
            if key not in KEYS:
                raise ConfigError('%s:%d: unknown key %r' % (config_file, lineno, key))
            config_dict[key] = value.strip()
    logger.debug('read %d keys from %s', len(config_dict), config_file)
    return config_dict


@dataclass
class RunConfig:
    ''' Validated settings of one CLI run '''
    command: str
    model: str = 'gue'
    N: tuple = (64,)
    n: int = 10
    samples: int = 200
    seed: int = 0
    threads: int = field(default_factory=default_threads)
    out: str = None
    format: str = None
    delta: float = 0.2
    eta: tuple = (3,)
    y: float = float('nan')
    epsilon: float = 0.3
    k: int = 2
    ell: int = 1
    stride: int = 1
    sweeps: int = 0
    step: float = 0.0
    t4: float = 0.0
    base: str = 'ray'
    check: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError('unknown command %r' % self.command)
        if self.format not in (None, 'csv', 'json'):
            raise ConfigError('format must be csv or json')
        if not self.N or min(self.N) < 2:
            raise ConfigError('N must be at least 2')
        for name in ('samples', 'threads', 'stride', 'n'):
            if getattr(self, name) < 1:
                raise ConfigError('%s must be positive' % name)
        if not 0.0 < self.delta < 0.5:
            raise ConfigError('delta must lie in (0, 1/2)')
        if not self.eta or min(self.eta) < 2:
            raise ConfigError('eta must be at least 2')
        if self.epsilon <= 0:
            raise ConfigError('epsilon must be positive')
        if self.k < 0 or self.ell < 0:
            raise ConfigError('k and ell must be nonnegative')
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError('seed must be a 64-bit unsigned integer')
        if not 0.0 <= self.t4 < 4.0:
            raise ConfigError('t4 must lie in [0, 4)')
        if self.sweeps < 0 or self.step < 0:
            raise ConfigError('sweeps and step must be nonnegative')
        if self.base not in ('ray', 'center'):
            raise ConfigError('base must be ray or center')

    @classmethod
    def from_dict(cls, raw):
        ''' Parse raw string (or already typed) values into a RunConfig '''
        names = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in raw.items():
            if value is None:
                continue
            if key not in KEYS or key not in names:
                raise ConfigError('unknown key %r' % key)
            try:
                kwargs[key] = KEYS[key](value) if isinstance(value, str) else value
            except ValueError as e:
                raise ConfigError('bad value for %s: %s' % (key, e))
        if 'command' not in kwargs:
            raise ConfigError('no command given')
        for key in ('N', 'eta'):
            if key in kwargs and not isinstance(kwargs[key], tuple):
                kwargs[key] = tuple(kwargs[key]) if hasattr(kwargs[key], '__iter__') \
                    else (int(kwargs[key]),)
        return cls(**kwargs)
