import os
from dotenv import load_dotenv

load_dotenv()


class Config:
    """Base configuration"""
    # Logging
    LOG_LEVEL = os.environ.get('PINEWTON_LOG_LEVEL') or 'INFO'
    LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    # Cap on FFT data parallelism (scipy.fft workers)
    THREADS = int(os.environ.get('PINEWTON_THREADS') or 1)

    # Grid defaults
    HALF_WIDTH = 12.0
    POINTS = 256

    # Solver defaults
    GRAD_TOL = 1e-6
    MAX_ITER = 20000
    STEP_INIT = 1.0
    ARMIJO_FACTOR = 0.5
    ARMIJO_SLOPE = 1e-4
    REGAUGE_PERIOD = 25
    PRECOND_SHIFT = 1.0
    LOG_EVERY = 500

    # Gagliardo-Nirenberg sampling used by the admissibility gate
    GN_SAMPLES = 200
    GN_POINTS = 64

    # Output
    OUTPUT_DIR = os.environ.get('PINEWTON_OUTPUT_DIR') or 'runs'


class DevelopmentConfig(Config):
    """Development configuration"""
    LOG_LEVEL = os.environ.get('PINEWTON_LOG_LEVEL') or 'DEBUG'
    LOG_EVERY = 50


class ProductionConfig(Config):
    """Production configuration"""
    LOG_LEVEL = os.environ.get('PINEWTON_LOG_LEVEL') or 'INFO'


config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'default': ProductionConfig
}
