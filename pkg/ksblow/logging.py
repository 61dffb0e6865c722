import logging, logging.config, os

from ksblow.config import config

logger = logging.getLogger('ksblow')

CSI = '\033['
RESET = f'{CSI}0m'
BOLD = f'{CSI}1m'
WHITE = f'{CSI}37m'
RED = f'{CSI}91m'
YELLOW = f'{CSI}93m'
BLUE = f'{CSI}94m'

LEVEL_COLOURS = {
    logging.DEBUG: BLUE,
    logging.INFO: f'{BOLD}{WHITE}',
    logging.WARNING: YELLOW,
    logging.ERROR: RED,
    logging.CRITICAL: f'{BOLD}{RED}',
}

CONSOLE_FORMAT = '{levelname} | {message}'

# Sweep workers interleave on one terminal, so their lines carry the process id
WORKER_FORMAT = '{levelname} | pid {process} | {message}'


class Formatter(logging.Formatter):
    ''' One colour per level; colours are dropped when NO_COLOR is set. '''

    def __init__(self, fmt: str = CONSOLE_FORMAT, style: str = '{', colour: bool | None = None) -> None:
        super().__init__(fmt, style=style)
        if colour is None:
            colour = 'NO_COLOR' not in os.environ
        self.formatters = {
            level: logging.Formatter(f'{code}{fmt}{RESET}' if colour else fmt, style=style)
            for level, code in LEVEL_COLOURS.items()
        }

    def format(self, record: logging.LogRecord) -> str:
        return self.formatters.get(record.levelno, super()).format(record)


def raise_or_warn(e: Exception) -> None:
    if config.strict:
        raise e
    logger.warning(e)


def set_log_level(verbose: bool, quiet: bool) -> None:
    config.log_level = logging.DEBUG if verbose else logging.CRITICAL if quiet else config.log_level


def _dict_config(fmt: str, level: int) -> dict:
    return {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'standard': {
                '()': Formatter,
                'fmt': fmt,
            }
        },
        'handlers': {
            'console': {
                'class': 'logging.StreamHandler',
                'formatter': 'standard',
            },
        },
        'loggers': {
            'ksblow': {
                'handlers': ['console'],
                'level': level,
                'propagate': False,
            }
        },
    }


def configure_logger() -> None:
    logging.config.dictConfig(_dict_config(CONSOLE_FORMAT, config.log_level))


def configure_worker(level: int) -> None:
    '''
    Logger set-up inside a sweep worker process. Forked workers inherit the parent's handlers,
    spawned ones start bare; both end up with the same level as the parent.
    '''
    config.log_level = level
    if not logger.handlers:
        logging.config.dictConfig(_dict_config(WORKER_FORMAT, level))
    else:
        logger.setLevel(level)
