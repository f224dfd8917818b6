import logging
import sys

from config import config

__version__ = '1.0.0'

_active_config = 'production'


def configure(config_name='production'):
    """Configuration factory: logging and FFT worker cap from the named config"""
    global _active_config
    cfg = config[config_name]
    _active_config = config_name

    logging.basicConfig(
        level=getattr(logging, str(cfg.LOG_LEVEL).upper(), logging.INFO),
        format=cfg.LOG_FORMAT,
        handlers=[
            logging.StreamHandler(sys.stdout)
        ]
    )

    from pinewton.lattice import set_fft_workers
    set_fft_workers(cfg.THREADS)

    return cfg


def active_config_name():
    """Name passed to the last configure() call"""
    return _active_config
